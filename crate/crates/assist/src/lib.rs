//! Client for the optional assist service, plus mocks.
//!
//! The service sees `POST <url>/v1/assist` with an [`AssistRequest`] and
//! answers with an [`AssistResponse`]. Every failure turns into an
//! [`AssistError`], which the pipeline records as a warning and moves on.

pub mod mock;

use std::collections::BTreeMap;
use std::io::Read;
use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};

use schemnet_core::assist::{AssignContext, Assist, AssistError, Suggestion};
use schemnet_core::detect::{Component, ComponentType, DetectionDoc};
use schemnet_core::raster::GrayImage;
use schemnet_core::text::OcrDoc;

/// Cap on request and response bodies.
pub const MAX_PAYLOAD: usize = 8 << 20;
pub const API_KEY_VAR: &str = "ASSIST_API_KEY";
pub const PATH: &str = "/v1/assist";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    DetectVerify,
    DesignatorAssign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssistRequest {
    pub kind: Kind,
    /// Base64 PNG of the input image.
    pub image: String,
    pub context: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssistResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<BTreeMap<ComponentType, usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggestions: Option<Vec<Suggestion>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
}

/// Context of a `detect_verify` request: the detections in interchange form,
/// with ids equal to list positions.
pub fn verify_context(image: &GrayImage, components: &[Component]) -> serde_json::Value {
    let doc = DetectionDoc::from_components(components, image.width() as u32, image.height() as u32);
    serde_json::json!({ "detections": doc })
}

/// Context of a `designator_assign` request.
pub fn assign_context(image: &GrayImage, ctx: &AssignContext<'_>) -> serde_json::Value {
    serde_json::json!({
        "detections": DetectionDoc::from_components(ctx.components, image.width() as u32, image.height() as u32),
        "component_ids": ctx.components.iter().map(|c| c.id).collect::<Vec<_>>(),
        "ocr": OcrDoc::from_texts(ctx.texts),
        "nodemap": ctx.nodemap,
        "assignments": ctx.assignments,
        "flags": ctx.flags,
    })
}

pub fn encode_image(image: &GrayImage) -> String {
    base64::engine::general_purpose::STANDARD.encode(image.to_png())
}

/// Blocking HTTP client. One retry on transport errors and 5xx replies.
pub struct HttpAssist {
    url: String,
    key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpAssist {
    pub fn new(url: &str, key: Option<String>, timeout: Duration) -> Result<Self, AssistError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| AssistError(format!("client setup: {e}")))?;
        Ok(Self { url: format!("{}{PATH}", url.trim_end_matches('/')), key, client })
    }

    /// Key from `ASSIST_API_KEY`, if set.
    pub fn from_env(url: &str, timeout: Duration) -> Result<Self, AssistError> {
        Self::new(url, std::env::var(API_KEY_VAR).ok().filter(|k| !k.is_empty()), timeout)
    }

    fn attempt(&self, body: &[u8]) -> Result<AssistResponse, (bool, AssistError)> {
        let mut req = self.client.post(&self.url).header("content-type", "application/json").body(body.to_vec());
        if let Some(k) = &self.key {
            req = req.bearer_auth(k);
        }
        let resp = req.send().map_err(|e| (true, AssistError(format!("request failed: {e}"))))?;
        let status = resp.status();
        if !status.is_success() {
            return Err((status.is_server_error(), AssistError(format!("service answered {status}"))));
        }
        let mut bytes = Vec::new();
        resp.take(MAX_PAYLOAD as u64 + 1).read_to_end(&mut bytes).map_err(|e| (true, AssistError(format!("reading reply: {e}"))))?;
        if bytes.len() > MAX_PAYLOAD {
            return Err((false, AssistError("reply larger than 8 MiB".into())));
        }
        serde_json::from_slice(&bytes).map_err(|e| (false, AssistError(format!("malformed reply: {e}"))))
    }

    pub fn call(&self, request: &AssistRequest) -> Result<AssistResponse, AssistError> {
        let body = serde_json::to_vec(request).map_err(|e| AssistError(e.to_string()))?;
        if body.len() > MAX_PAYLOAD {
            return Err(AssistError(format!("request of {} bytes exceeds 8 MiB", body.len())));
        }
        match self.attempt(&body) {
            Ok(r) => Ok(r),
            Err((true, e)) => {
                log::warn!("assist: {e}; retrying once");
                self.attempt(&body).map_err(|(_, e)| e)
            }
            Err((false, e)) => Err(e),
        }
    }
}

impl Assist for HttpAssist {
    fn verify(&self, image: &GrayImage, components: &[Component]) -> Result<BTreeMap<ComponentType, usize>, AssistError> {
        let req = AssistRequest { kind: Kind::DetectVerify, image: encode_image(image), context: verify_context(image, components) };
        self.call(&req)?.counts.ok_or_else(|| AssistError("reply has no counts".into()))
    }

    fn assign(&self, image: &GrayImage, ctx: &AssignContext<'_>) -> Result<Vec<Suggestion>, AssistError> {
        let req = AssistRequest { kind: Kind::DesignatorAssign, image: encode_image(image), context: assign_context(image, ctx) };
        self.call(&req)?.suggestions.ok_or_else(|| AssistError("reply has no suggestions".into()))
    }
}
