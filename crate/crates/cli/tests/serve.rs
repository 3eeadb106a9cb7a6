use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use reqwest::blocking::Client;
use serde_json::{json, Value};

use schemnet_cli::serve::{AppState, Server, OVERRIDES};
use schemnet_core::config::Config;
use schemnet_core::detect::ComponentType;
use schemnet_core::netlist::{netlists_equivalent, parse_netlist, EquivOptions};
use schemnet_core::synth::case::write_case;
use schemnet_core::synth::{synthesize, Degrade, GoldenSchematic};

const LOCAL: &str = "127.0.0.1:0";

/// Jobs dir with a mislabeled job and a clean one. Returns the golden
/// schematic of the mislabeled job.
fn jobs(dir: &Path) -> GoldenSchematic {
    let g = synthesize(3, 10).unwrap();
    let job = dir.join("mislabeled");
    write_case(&job, &g, &Degrade::default()).unwrap();
    let mut doc = g.detection_doc();
    let victim = doc.components.iter().position(|c| c.ctype == ComponentType::Resistor).unwrap();
    doc.components[victim].ctype = ComponentType::Capacitor;
    std::fs::write(job.join("detections.json"), doc.to_json()).unwrap();
    std::fs::remove_file(job.join("texts.json")).unwrap();

    let clean = dir.join("clean");
    write_case(&clean, &synthesize(0, 3).unwrap(), &Degrade::default()).unwrap();
    g
}

fn start(dir: &Path) -> Server {
    Server::start(AppState::load(dir, Config::default()).unwrap(), LOCAL.parse::<SocketAddr>().unwrap()).unwrap()
}

fn get(c: &Client, url: String) -> (u16, Value) {
    let r = c.get(url).send().unwrap();
    (r.status().as_u16(), r.json().unwrap_or(Value::Null))
}

fn post(c: &Client, url: String, body: Value) -> (u16, Value) {
    let r = c.post(url).json(&body).send().unwrap();
    (r.status().as_u16(), r.json().unwrap_or(Value::Null))
}

fn conflict_flag(job: &Value) -> String {
    job["run"]["flags"].as_array().unwrap().iter().find(|f| f["kind"] == "prefix_conflict").unwrap()["id"].as_str().unwrap().to_string()
}

#[test]
fn review_loop_fixes_a_mislabeled_job() {
    let tmp = tempfile::tempdir().unwrap();
    let g = jobs(tmp.path());
    let server = start(tmp.path());
    let (c, base) = (Client::new(), server.url());

    let (code, list) = get(&c, format!("{base}/api/jobs"));
    assert_eq!(code, 200);
    let ids: Vec<&str> = list.as_array().unwrap().iter().map(|j| j["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["clean", "mislabeled"]);
    assert_eq!(list[0]["status"], "complete");
    assert_eq!(list[1]["status"], "flagged");

    let (_, job) = get(&c, format!("{base}/api/jobs/mislabeled"));
    assert_eq!(job["status"], "flagged");
    let flag = conflict_flag(&job);

    let img = c.get(format!("{base}/api/jobs/mislabeled/image")).send().unwrap();
    assert_eq!(img.headers()["content-type"], "image/png");
    assert!(img.bytes().unwrap().starts_with(b"\x89PNG"));

    let (code, body) = post(&c, format!("{base}/api/jobs/mislabeled/overrides"), json!([{ "flag": flag, "action": "set_type", "payload": "resistor" }]));
    assert_eq!(code, 200, "{body}");
    assert_eq!(body["log_length"], 1);

    let (code, body) = post(&c, format!("{base}/api/jobs/mislabeled/regenerate"), Value::Null);
    assert_eq!(code, 200, "{body}");
    assert_eq!(body["status"], "complete", "{body}");
    let net = parse_netlist(body["netlist_text"].as_str().unwrap()).unwrap();
    assert!(netlists_equivalent(&net, &g.netlist, EquivOptions::EXACT).unwrap().equivalent);

    let (_, list) = get(&c, format!("{base}/api/jobs"));
    assert_eq!(list[1]["status"], "complete");
}

#[test]
fn bad_requests_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    jobs(tmp.path());
    let server = start(tmp.path());
    let (c, base) = (Client::new(), server.url());

    assert_eq!(get(&c, format!("{base}/api/jobs/nope")).0, 404);
    assert_eq!(post(&c, format!("{base}/api/jobs/nope/regenerate"), Value::Null).0, 404);

    let url = format!("{base}/api/jobs/clean/overrides");
    let (code, body) = post(&c, url.clone(), json!([
        { "component": 0, "action": "accept_all" },
    ]));
    assert_eq!(code, 422);
    assert_eq!(body["error"], "invalid_override");

    let (code, body) = post(&c, url.clone(), json!([
        { "component": 0, "action": "set_type", "payload": "resistor" },
        { "component": 0, "action": "set_value", "payload": "10x" },
    ]));
    assert_eq!(code, 422);
    assert_eq!(body["index"], 1);
    // nothing from a rejected batch is kept
    assert!(!tmp.path().join("clean").join(OVERRIDES).exists());
    let (_, job) = get(&c, format!("{base}/api/jobs/clean"));
    assert_eq!(job["overrides"], json!([]));
}

#[test]
fn accepting_a_flag_resolves_it() {
    let tmp = tempfile::tempdir().unwrap();
    jobs(tmp.path());
    let server = start(tmp.path());
    let (c, base) = (Client::new(), server.url());
    let (_, job) = get(&c, format!("{base}/api/jobs/mislabeled"));
    let open: Vec<String> = job["run"]["flags"].as_array().unwrap().iter().map(|f| f["id"].as_str().unwrap().to_string()).collect();
    assert!(!open.is_empty());
    let accept: Vec<Value> = open.iter().map(|id| json!({ "flag": id, "action": "accept" })).collect();
    assert_eq!(post(&c, format!("{base}/api/jobs/mislabeled/overrides"), Value::Array(accept)).0, 200);
    let (_, body) = post(&c, format!("{base}/api/jobs/mislabeled/regenerate"), Value::Null);
    assert_eq!(body["flags"], json!([]), "{body}");
    assert_eq!(body["status"], "complete");
}

fn job_netlist(base: &str, id: &str) -> Value {
    get(&Client::new(), format!("{base}/api/jobs/{id}")).1["netlist_text"].clone()
}

#[test]
fn overrides_survive_a_restart_and_match_convert() {
    let tmp = tempfile::tempdir().unwrap();
    jobs(tmp.path());
    let before = {
        let server = start(tmp.path());
        let (c, base) = (Client::new(), server.url());
        let (_, job) = get(&c, format!("{base}/api/jobs/mislabeled"));
        let flag = conflict_flag(&job);
        // the second set_type wins
        let body = json!([
            { "flag": flag, "action": "set_type", "payload": "inductor" },
            { "flag": flag, "action": "set_type", "payload": "resistor" },
        ]);
        assert_eq!(post(&c, format!("{base}/api/jobs/mislabeled/overrides"), body).0, 200);
        post(&c, format!("{base}/api/jobs/mislabeled/regenerate"), Value::Null);
        job_netlist(&base, "mislabeled")
    };
    assert!(before.is_string());

    let server = start(tmp.path());
    assert_eq!(job_netlist(&server.url(), "mislabeled"), before);

    // the persisted log replayed through convert gives the same netlist
    let job: PathBuf = tmp.path().join("mislabeled");
    let out = tmp.path().join("replayed");
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_schemnet"))
        .args(["convert", "--detections"])
        .arg(job.join("detections.json"))
        .arg("--overrides")
        .arg(job.join(OVERRIDES))
        .arg("-o")
        .arg(&out)
        .arg(job.join("image.pgm"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(tmp.path().join("replayed.cir")).unwrap(), before.as_str().unwrap());
}
