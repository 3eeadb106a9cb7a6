use std::time::Duration;

use schemnet_assist::mock::{GoldenResponder, MockAssist, MockServer, Reply};
use schemnet_assist::{AssistRequest, AssistResponse, HttpAssist, Kind};
use schemnet_core::assist::{Assist, Outcome, Suggestion};
use schemnet_core::config::Config;
use schemnet_core::detect::ComponentType;
use schemnet_core::flags::FlagKind;
use schemnet_core::netlist::{netlists_equivalent, EquivOptions};
use schemnet_core::pipeline::{run, Input, Run, RunOptions, Status};
use schemnet_core::synth::{synthesize, GoldenSchematic};
use schemnet_core::text::OcrDoc;

fn convert(g: &GoldenSchematic, ocr: Option<&OcrDoc>, assist: Option<&dyn Assist>) -> Run {
    let input = Input { image: &g.image, detections: None, ocr };
    run(&input, &Config::default(), &RunOptions { assist, ..Default::default() }).unwrap()
}

fn is_capacitance(t: &schemnet_core::text::OcrEntry) -> bool {
    t.string.starts_with(|c: char| c.is_ascii_digit()) && t.string.ends_with('F')
}

fn outputs(r: &Run) -> (Option<String>, String) {
    (r.spice(), serde_json::to_string(&r.flags).unwrap())
}

#[test]
fn golden_mock_changes_nothing_on_clean_images() {
    for seed in [0, 3, 7, 12, 18] {
        let g = synthesize(seed, 2 + (seed as usize % 19)).unwrap();
        let plain = convert(&g, None, None);
        let mock = MockAssist::golden(&g);
        let assisted = convert(&g, None, Some(&mock));
        assert_eq!(outputs(&plain), outputs(&assisted), "seed {seed}");
        assert!(assisted.warnings.is_empty());
        assert_eq!(assisted.concordance.as_ref().unwrap().score, 1.0);
    }
}

#[test]
fn http_golden_server_round_trips_with_key() {
    let g = synthesize(3, 10).unwrap();
    let server = MockServer::golden(&g, Some("sekrit")).unwrap();
    let client = HttpAssist::new(&server.url, Some("sekrit".into()), Duration::from_secs(30)).unwrap();
    let plain = convert(&g, None, None);
    let assisted = convert(&g, None, Some(&client));
    assert_eq!(outputs(&plain), outputs(&assisted));
    assert_eq!(assisted.concordance.unwrap().score, 1.0);
    assert_eq!(server.hits(), 1, "clean run only asks for verification");

    let wrong = HttpAssist::new(&server.url, Some("nope".into()), Duration::from_secs(30)).unwrap();
    let r = convert(&g, None, Some(&wrong));
    assert!(r.warnings.iter().any(|w| w.starts_with("assist_unavailable") && w.contains("401")), "{:?}", r.warnings);
    assert_eq!(outputs(&plain), outputs(&r));
}

#[test]
fn server_error_is_retried_once_then_ignored() {
    let g = synthesize(5, 7).unwrap();
    let server = MockServer::start(|_, _| Reply { status: 500, body: "boom".into() }).unwrap();
    let client = HttpAssist::new(&server.url, None, Duration::from_secs(30)).unwrap();
    let r = convert(&g, None, Some(&client));
    assert_eq!(server.hits(), 2);
    assert!(r.warnings.iter().any(|w| w.contains("500")));
    assert_eq!(outputs(&r), outputs(&convert(&g, None, None)));
    assert_eq!(r.status(), Status::Complete);
}

#[test]
fn malformed_reply_is_not_retried() {
    let g = synthesize(5, 7).unwrap();
    let server = MockServer::start(|_, _| Reply { status: 200, body: r#"{"verdict": "looks fine"}"#.into() }).unwrap();
    let client = HttpAssist::new(&server.url, None, Duration::from_secs(30)).unwrap();
    let r = convert(&g, None, Some(&client));
    assert_eq!(server.hits(), 1);
    assert!(r.warnings.iter().any(|w| w.contains("malformed reply")), "{:?}", r.warnings);
}

#[test]
fn timeout_becomes_a_warning() {
    let g = synthesize(1, 3).unwrap();
    let server = MockServer::start(|_, _| {
        std::thread::sleep(Duration::from_millis(700));
        Reply { status: 200, body: "{}".into() }
    })
    .unwrap();
    let client = HttpAssist::new(&server.url, None, Duration::from_millis(200)).unwrap();
    let r = convert(&g, None, Some(&client));
    assert!(r.warnings.iter().any(|w| w.starts_with("assist_unavailable")), "{:?}", r.warnings);
    assert_eq!(outputs(&r), outputs(&convert(&g, None, None)));
}

#[test]
fn extra_capacitor_lowers_concordance() {
    let g = synthesize(3, 10).unwrap();
    let truth = GoldenResponder::new(&g);
    let mock = MockAssist::new(move |req| {
        let mut r = truth.respond(req);
        if req.kind == Kind::DetectVerify {
            *r.counts.as_mut().unwrap().entry(ComponentType::Capacitor).or_insert(0) += 1;
        }
        Ok(r)
    });
    let r = convert(&g, None, Some(&mock));
    let c = r.concordance.as_ref().unwrap();
    assert!(c.score < 1.0);
    // 10 parts plus ground symbols; one extra capacitor in the union
    let total: usize = c.per_type.iter().map(|t| t.1).sum();
    assert!((c.score - total as f64 / (total + 1) as f64).abs() < 1e-12);
    assert!(r.flags.iter().any(|f| f.kind == FlagKind::TypeCountMismatch));
}

/// Drop the value label of one part: the rule engine flags it and falls back
/// to a default; the golden assist fills in the real value.
#[test]
fn flagged_missing_value_is_filled_in() {
    let g = synthesize(3, 10).unwrap();
    let mut ocr = g.ocr_doc();
    let victim = ocr.texts.iter().position(is_capacitance).expect("a capacitor value label");
    ocr.texts.remove(victim);
    let plain = convert(&g, Some(&ocr), None);
    assert!(plain.flags.iter().any(|f| f.kind == FlagKind::MissingValue && !f.is_resolved()));
    assert!(!netlists_equivalent(plain.netlist.as_ref().unwrap(), &g.netlist, EquivOptions::EXACT).unwrap().equivalent);

    let mock = MockAssist::golden(&g);
    let r = convert(&g, Some(&ocr), Some(&mock));
    assert_eq!(r.status(), Status::Complete, "{:?}", r.flags);
    assert!(netlists_equivalent(r.netlist.as_ref().unwrap(), &g.netlist, EquivOptions::EXACT).unwrap().equivalent);
    assert!(r.provenance.iter().any(|p| p.outcome == Outcome::Applied));
    // unflagged parts got suggestions too; each is logged as ignored or no-op
    assert!(r.provenance.iter().all(|p| p.outcome != Outcome::Dropped));
}

#[test]
fn unknown_component_suggestion_is_dropped() {
    let g = synthesize(3, 10).unwrap();
    let mut ocr = g.ocr_doc();
    let victim = ocr.texts.iter().position(is_capacitance).unwrap();
    ocr.texts.remove(victim);
    let mock = MockAssist::new(|_| {
        Ok(AssistResponse {
            counts: None,
            suggestions: Some(vec![Suggestion { component: 999, designator: None, value: Some("1u".into()) }]),
            rationale: None,
        })
    });
    let r = convert(&g, Some(&ocr), Some(&mock));
    assert!(r.provenance.iter().any(|p| p.component == 999 && p.outcome == Outcome::Dropped));
    assert!(r.flags.iter().any(|f| f.kind == FlagKind::MissingValue && !f.is_resolved()));
    // the verify call had no counts: that is a warning, not an error
    assert!(r.warnings.iter().any(|w| w.contains("no counts")));
}

#[test]
fn fuzz_seed_replies_parse() {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/assist_response");
    let mut n = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let bytes = std::fs::read(e.unwrap().path()).unwrap();
        let ok = serde_json::from_slice::<AssistResponse>(&bytes).is_ok() || serde_json::from_slice::<AssistRequest>(&bytes).is_ok();
        assert!(ok);
        n += 1;
    }
    assert!(n > 0);
}
