//! Deterministic stand-ins for the assist service: an in-process [`Assist`]
//! and a local HTTP server speaking the same wire format.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::Router;

use schemnet_core::assist::{AssignContext, Assist, AssistError, Suggestion};
use schemnet_core::detect::{ingest_detections, type_counts, Component, ComponentType, DetectionDoc};
use schemnet_core::netlist::assign_designators;
use schemnet_core::pipeline::value_text;
use schemnet_core::raster::GrayImage;
use schemnet_core::synth::GoldenSchematic;
use schemnet_core::text::bind_text;

use crate::{assign_context, verify_context, AssistRequest, AssistResponse, Kind, PATH};

/// Answers from golden data: true type counts, and for every detection that
/// overlaps a golden symbol its golden designator and value.
#[derive(Debug, Clone)]
pub struct GoldenResponder {
    counts: BTreeMap<ComponentType, usize>,
    labels: Vec<(Component, String, String)>,
}

impl GoldenResponder {
    pub fn new(g: &GoldenSchematic) -> Self {
        let bound = bind_text(&g.components, &g.texts, 1.5);
        let (assignments, _) = assign_designators(&g.components, &bound.bindings, &g.texts);
        let labels = assignments
            .iter()
            .filter_map(|a| {
                let c = g.components.iter().find(|c| c.id == a.component)?;
                Some((c.clone(), a.designator.clone(), value_text(a.value.as_ref(), a.model.as_deref())))
            })
            .collect();
        Self { counts: type_counts(&g.components), labels }
    }

    pub fn respond(&self, req: &AssistRequest) -> AssistResponse {
        match req.kind {
            Kind::DetectVerify => AssistResponse { counts: Some(self.counts.clone()), ..Default::default() },
            Kind::DesignatorAssign => {
                let ids: Vec<usize> =
                    req.context.get("component_ids").and_then(|v| serde_json::from_value(v.clone()).ok()).unwrap_or_default();
                let doc: Option<DetectionDoc> = req.context.get("detections").and_then(|v| serde_json::from_value(v.clone()).ok());
                let comps = doc.and_then(|d| ingest_detections(&d, None).ok()).map(|i| i.components).unwrap_or_default();
                let mut suggestions = Vec::new();
                for (c, id) in comps.iter().zip(ids) {
                    let best = self
                        .labels
                        .iter()
                        .filter(|(g, _, _)| g.ctype == c.ctype)
                        .map(|l| (l.0.bbox.iou(&c.bbox), l))
                        .filter(|(iou, _)| *iou >= 0.5)
                        .max_by(|a, b| a.0.total_cmp(&b.0));
                    if let Some((_, (_, d, v))) = best {
                        suggestions.push(Suggestion { component: id, designator: Some(d.clone()), value: Some(v.clone()) });
                    }
                }
                AssistResponse { suggestions: Some(suggestions), rationale: Some("golden annotations".into()), ..Default::default() }
            }
        }
    }
}

type Handler = dyn Fn(&AssistRequest) -> Result<AssistResponse, AssistError> + Send + Sync;

/// In-process assist backed by a closure; counts calls.
pub struct MockAssist {
    handler: Box<Handler>,
    pub calls: AtomicUsize,
}

impl MockAssist {
    pub fn new(f: impl Fn(&AssistRequest) -> Result<AssistResponse, AssistError> + Send + Sync + 'static) -> Self {
        Self { handler: Box::new(f), calls: AtomicUsize::new(0) }
    }

    pub fn golden(g: &GoldenSchematic) -> Self {
        let r = GoldenResponder::new(g);
        Self::new(move |req| Ok(r.respond(req)))
    }

    pub fn failing(reason: &str) -> Self {
        let reason = reason.to_string();
        Self::new(move |_| Err(AssistError(reason.clone())))
    }

    fn call(&self, req: &AssistRequest) -> Result<AssistResponse, AssistError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        (self.handler)(req)
    }
}

impl Assist for MockAssist {
    fn verify(&self, image: &GrayImage, components: &[Component]) -> Result<BTreeMap<ComponentType, usize>, AssistError> {
        // the image is not inspected, so skip encoding it
        let req = AssistRequest { kind: Kind::DetectVerify, image: String::new(), context: verify_context(image, components) };
        self.call(&req)?.counts.ok_or_else(|| AssistError("reply has no counts".into()))
    }

    fn assign(&self, image: &GrayImage, ctx: &AssignContext<'_>) -> Result<Vec<Suggestion>, AssistError> {
        let req = AssistRequest { kind: Kind::DesignatorAssign, image: String::new(), context: assign_context(image, ctx) };
        self.call(&req)?.suggestions.ok_or_else(|| AssistError("reply has no suggestions".into()))
    }
}

/// What the mock server saw and should answer.
pub struct Reply {
    pub status: u16,
    pub body: String,
}

impl Reply {
    pub fn json(r: &AssistResponse) -> Self {
        Self { status: 200, body: serde_json::to_string(r).expect("response serializes") }
    }
}

type ServerHandler = dyn Fn(&AssistRequest, Option<&str>) -> Reply + Send + Sync;

#[derive(Clone)]
struct ServerState {
    handler: Arc<ServerHandler>,
    hits: Arc<AtomicUsize>,
}

async fn handle(State(s): State<ServerState>, headers: HeaderMap, body: String) -> (StatusCode, String) {
    s.hits.fetch_add(1, Ordering::SeqCst);
    let auth = headers.get("authorization").and_then(|v| v.to_str().ok()).and_then(|v| v.strip_prefix("Bearer "));
    let reply = match serde_json::from_str::<AssistRequest>(&body) {
        Ok(req) => (s.handler)(&req, auth),
        Err(e) => Reply { status: 400, body: e.to_string() },
    };
    (StatusCode::from_u16(reply.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR), reply.body)
}

/// Local HTTP assist server on an ephemeral port. Stops when dropped.
pub struct MockServer {
    pub url: String,
    hits: Arc<AtomicUsize>,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl MockServer {
    pub fn start(handler: impl Fn(&AssistRequest, Option<&str>) -> Reply + Send + Sync + 'static) -> std::io::Result<Self> {
        let listener = std::net::TcpListener::bind("127.0.0.1:0")?;
        listener.set_nonblocking(true)?;
        let url = format!("http://{}", listener.local_addr()?);
        let hits = Arc::new(AtomicUsize::new(0));
        let state = ServerState { handler: Arc::new(handler), hits: hits.clone() };
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
        let thread = std::thread::spawn(move || {
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener).expect("listener");
                let app = Router::new().route(PATH, post(handle)).with_state(state);
                let _ = axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await;
            });
        });
        Ok(Self { url, hits, shutdown: Some(tx), thread: Some(thread) })
    }

    /// Serve golden answers, requiring `key` as bearer token when given.
    pub fn golden(g: &GoldenSchematic, key: Option<&str>) -> std::io::Result<Self> {
        let r = GoldenResponder::new(g);
        let key = key.map(str::to_string);
        Self::start(move |req, auth| {
            if key.is_some() && auth != key.as_deref() {
                return Reply { status: 401, body: "bad key".into() };
            }
            Reply::json(&r.respond(req))
        })
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
