//! Review server: exposes jobs, takes overrides, regenerates netlists.
//!
//! A job is a subdirectory holding `image.pgm` or `image.png`, plus
//! `detections.json` and `texts.json` when present. Accepted overrides are
//! appended to `<job>/overrides.json` and replayed on startup.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use anyhow::Context as _;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::json;

use schemnet_assist::HttpAssist;
use schemnet_core::assist::Assist;
use schemnet_core::config::Config;
use schemnet_core::flags::Flag;
use schemnet_core::pipeline::{Override, Run, Status};

use crate::batch::discover;
use crate::convert::{self, parse_overrides, Inputs};

pub const OVERRIDES: &str = "overrides.json";

struct Job {
    dir: PathBuf,
    inputs: Arc<Inputs>,
    /// Bumped whenever the override log grows.
    generation: u64,
    run: Arc<Run>,
    /// Generation of the inputs `run` was made from.
    run_generation: u64,
}

#[derive(Clone)]
pub struct AppState {
    jobs: Arc<BTreeMap<String, Mutex<Job>>>,
    cfg: Arc<Config>,
    assist: Option<Arc<HttpAssist>>,
}

fn regenerate_run(inputs: &Inputs, cfg: &Config, assist: Option<&HttpAssist>) -> anyhow::Result<Run> {
    convert::execute(inputs, cfg, false, assist.map(|a| a as &dyn Assist))
}

fn persist(dir: &Path, log: &[Override]) -> anyhow::Result<()> {
    let tmp = dir.join(format!("{OVERRIDES}.tmp"));
    std::fs::write(&tmp, serde_json::to_string_pretty(log)? + "\n").with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, dir.join(OVERRIDES)).context("replacing overrides.json")
}

impl AppState {
    /// Load every job under `dir` and run it once with its saved overrides.
    /// Call this outside any async runtime: the assist client blocks.
    pub fn load(dir: &Path, cfg: Config) -> anyhow::Result<Self> {
        let assist = convert::assist_client(&cfg)?.map(Arc::new);
        let mut jobs = BTreeMap::new();
        for item in discover(dir, true)? {
            let Some(job_dir) = item.image.parent().map(Path::to_path_buf).filter(|p| p != dir) else { continue };
            let mut inputs = Inputs::load(&item.image, item.detections.as_deref(), item.ocr.as_deref(), None)?;
            let saved = job_dir.join(OVERRIDES);
            if saved.is_file() {
                let bytes = std::fs::read(&saved)?;
                inputs.overrides = parse_overrides(&bytes).map_err(anyhow::Error::msg).with_context(|| saved.display().to_string())?;
            }
            let run = regenerate_run(&inputs, &cfg, assist.as_deref()).with_context(|| format!("job {}", item.name))?;
            log::info!("job {}: {} components, {} open flags", item.name, run.components.len(), run.unresolved().count());
            jobs.insert(item.name, Mutex::new(Job { dir: job_dir, inputs: Arc::new(inputs), generation: 0, run: Arc::new(run), run_generation: 0 }));
        }
        Ok(Self { jobs: Arc::new(jobs), cfg: Arc::new(cfg), assist })
    }

    pub fn job_ids(&self) -> Vec<String> {
        self.jobs.keys().cloned().collect()
    }
}

fn error(status: StatusCode, body: serde_json::Value) -> Response {
    (status, Json(body)).into_response()
}

fn not_found(id: &str) -> Response {
    error(StatusCode::NOT_FOUND, json!({ "error": "unknown_job", "id": id }))
}

#[derive(Serialize)]
struct JobSummary<'a> {
    id: &'a str,
    status: Status,
    components: usize,
    flags: usize,
    unresolved: usize,
}

async fn list_jobs(State(s): State<AppState>) -> Response {
    let list: Vec<serde_json::Value> = s
        .jobs
        .iter()
        .map(|(id, job)| {
            let run = job.lock().expect("job lock").run.clone();
            json!(JobSummary { id, status: run.status(), components: run.components.len(), flags: run.flags.len(), unresolved: run.unresolved().count() })
        })
        .collect();
    Json(list).into_response()
}

async fn get_job(State(s): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    let Some(job) = s.jobs.get(&id) else { return not_found(&id) };
    let (run, log) = {
        let j = job.lock().expect("job lock");
        (j.run.clone(), j.inputs.overrides.clone())
    };
    Json(json!({
        "id": id,
        "status": run.status(),
        "netlist_text": run.spice(),
        "run": *run,
        "overrides": log,
    }))
    .into_response()
}

async fn get_image(State(s): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    let Some(job) = s.jobs.get(&id) else { return not_found(&id) };
    let inputs = job.lock().expect("job lock").inputs.clone();
    let png = tokio::task::spawn_blocking(move || inputs.image.to_png()).await.expect("png encoder");
    ([(header::CONTENT_TYPE, "image/png")], png).into_response()
}

async fn post_overrides(State(s): State<AppState>, UrlPath(id): UrlPath<String>, body: axum::body::Bytes) -> Response {
    let Some(job) = s.jobs.get(&id) else { return not_found(&id) };
    let submitted = match parse_overrides(&body) {
        Ok(v) => v,
        Err(reason) => return error(StatusCode::UNPROCESSABLE_ENTITY, json!({ "error": "invalid_override", "index": null, "reason": reason })),
    };
    let mut j = job.lock().expect("job lock");
    let mut accepted = Vec::with_capacity(submitted.len());
    for (index, o) in submitted.iter().enumerate() {
        match o.validate(&j.run) {
            Ok(o) => accepted.push(o),
            Err(reason) => return error(StatusCode::UNPROCESSABLE_ENTITY, json!({ "error": "invalid_override", "index": index, "reason": reason })),
        }
    }
    let mut log = j.inputs.overrides.clone();
    log.extend(accepted.iter().cloned());
    if let Err(e) = persist(&j.dir, &log) {
        return error(StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": "persist_failed", "reason": format!("{e:#}") }));
    }
    let inputs = Inputs { image: j.inputs.image.clone(), detections: j.inputs.detections.clone(), ocr: j.inputs.ocr.clone(), overrides: log };
    j.inputs = Arc::new(inputs);
    j.generation += 1;
    Json(json!({ "accepted": accepted, "log_length": j.inputs.overrides.len() })).into_response()
}

#[derive(Serialize)]
struct Regenerated<'a> {
    status: Status,
    netlist_text: Option<String>,
    emit_error: Option<&'a str>,
    flags: Vec<&'a Flag>,
}

async fn regenerate(State(s): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    let Some(job) = s.jobs.get(&id) else { return not_found(&id) };
    let (snapshot, generation) = {
        let j = job.lock().expect("job lock");
        (j.inputs.clone(), j.generation)
    };
    let (cfg, assist) = (s.cfg.clone(), s.assist.clone());
    let result = tokio::task::spawn_blocking(move || regenerate_run(&snapshot, &cfg, assist.as_deref())).await.expect("pipeline task");
    let run = match result {
        Ok(r) => Arc::new(r),
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": "pipeline_failed", "reason": format!("{e:#}") })),
    };
    {
        let mut j = job.lock().expect("job lock");
        // a slower regenerate of older inputs must not clobber a newer run
        if generation >= j.run_generation {
            j.run = run.clone();
            j.run_generation = generation;
        }
    }
    Json(Regenerated { status: run.status(), netlist_text: run.spice(), emit_error: run.emit_error.as_deref(), flags: run.unresolved().collect() }).into_response()
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/jobs", get(list_jobs))
        .route("/api/jobs/{id}", get(get_job))
        .route("/api/jobs/{id}/image", get(get_image))
        .route("/api/jobs/{id}/overrides", post(post_overrides))
        .route("/api/jobs/{id}/regenerate", post(regenerate))
        .with_state(state)
}

/// A server on its own thread, for tests and embedding. Stops when dropped.
pub struct Server {
    pub addr: SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl Server {
    pub fn start(state: AppState, addr: SocketAddr) -> anyhow::Result<Self> {
        let listener = std::net::TcpListener::bind(addr).with_context(|| format!("binding {addr}"))?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let keep = state.clone();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener).expect("listener");
                let _ = axum::serve(listener, router(state))
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await;
            });
            drop(rt);
            // the blocking assist client must be dropped outside the runtime
            drop(keep);
        });
        Ok(Self { addr, shutdown: Some(tx), thread: Some(thread) })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Serve until Ctrl-C.
pub fn serve_forever(state: AppState, addr: SocketAddr) -> anyhow::Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    let keep = state.clone();
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
        log::info!("serving {} jobs on http://{}", state.jobs.len(), listener.local_addr()?);
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .context("server")
    })?;
    drop(rt);
    drop(keep);
    Ok(())
}
