//! Text extraction and binding: the glyph recognizer, OCR document ingest,
//! proximity binding of labels to components and the label grammar.

mod glyphs;
pub mod label;

use serde::{Deserialize, Serialize};

use crate::detect::{Component, IngestError};
use crate::flags::{Flag, FlagKind, Subject};
use crate::geom::BBox;

pub use glyphs::{draw_text, recognize_glyphs};
use label::parse_designator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextBox {
    pub id: usize,
    pub string: String,
    pub bbox: BBox,
    pub confidence: f64,
}

impl TextBox {
    pub fn center(&self) -> (f64, f64) {
        self.bbox.center()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelBinding {
    pub component: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub designator_text: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_text: Option<usize>,
}

// ---- OCR interchange document --------------------------------------------

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcrEntry {
    pub string: String,
    pub bbox: [i32; 4],
    #[serde(default = "one")]
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcrDoc {
    pub texts: Vec<OcrEntry>,
}

impl OcrDoc {
    pub fn from_json(bytes: &[u8]) -> Result<Self, IngestError> {
        let de = &mut serde_json::Deserializer::from_slice(bytes);
        serde_path_to_error::deserialize(de)
            .map_err(|e| IngestError::Schema { path: e.path().to_string(), message: e.inner().to_string() })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ocr doc serializes")
    }

    pub fn from_texts(texts: &[TextBox]) -> Self {
        let texts = texts
            .iter()
            .map(|t| OcrEntry { string: t.string.clone(), bbox: [t.bbox.x, t.bbox.y, t.bbox.w, t.bbox.h], confidence: t.confidence })
            .collect();
        Self { texts }
    }
}

/// Validate OCR entries, drop empty strings and sort by `(y, x)`.
pub fn ingest_ocr(doc: &OcrDoc) -> Result<(Vec<TextBox>, Vec<String>), IngestError> {
    let mut warnings = Vec::new();
    let mut out = Vec::new();
    for (i, e) in doc.texts.iter().enumerate() {
        let [x, y, w, h] = e.bbox;
        if w < 1 || h < 1 {
            return Err(IngestError::Schema { path: format!("texts[{i}].bbox"), message: "width and height must be >= 1".into() });
        }
        if !(0.0..=1.0).contains(&e.confidence) {
            return Err(IngestError::Schema { path: format!("texts[{i}].confidence"), message: "must lie in [0, 1]".into() });
        }
        if e.string.trim().is_empty() {
            warnings.push(format!("texts[{i}]: empty string dropped"));
            continue;
        }
        out.push(TextBox { id: i, string: e.string.trim().to_string(), bbox: BBox::new(x, y, w, h), confidence: e.confidence });
    }
    out.sort_by_key(|t| (t.bbox.y, t.bbox.x, t.id));
    for (i, t) in out.iter_mut().enumerate() {
        t.id = i;
    }
    Ok((out, warnings))
}

// ---- binding ---------------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BindOutcome {
    /// One entry per card-emitting component, ordered by id.
    pub bindings: Vec<LabelBinding>,
    pub flags: Vec<Flag>,
}

/// Globally greedy nearest binding. A text may bind to a component when the
/// distance from its centre to the component box is at most
/// `factor * max(w, h)` of that component.
pub fn bind_text(comps: &[Component], texts: &[TextBox], factor: f64) -> BindOutcome {
    let targets: Vec<&Component> = comps.iter().filter(|c| c.ctype.emits_card()).collect();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for t in texts {
        let (cx, cy) = t.center();
        for c in &targets {
            let d = c.bbox.distance_to(cx, cy);
            if d <= factor * f64::from(c.bbox.w.max(c.bbox.h)) {
                pairs.push((d, t.id, c.id));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));

    let mut bindings: Vec<LabelBinding> =
        targets.iter().map(|c| LabelBinding { component: c.id, designator_text: None, value_text: None }).collect();
    bindings.sort_by_key(|b| b.component);
    let slot = |bindings: &[LabelBinding], comp: usize| bindings.binary_search_by_key(&comp, |b| b.component).expect("target");
    let mut consumed = std::collections::BTreeSet::new();
    let mut flags = Vec::new();
    for (_, tid, cid) in pairs {
        if consumed.contains(&tid) {
            continue;
        }
        let text = texts.iter().find(|t| t.id == tid).expect("text id");
        let k = slot(&bindings, cid);
        if parse_designator(&text.string).is_ok() {
            if bindings[k].designator_text.is_none() {
                bindings[k].designator_text = Some(tid);
            } else {
                flags.push(
                    Flag::new(
                        FlagKind::PrefixConflict,
                        Subject::Component(cid),
                        format!("second designator {:?} near this component left unbound", text.string),
                    )
                    .qualified(&format!("t{tid}")),
                );
            }
            consumed.insert(tid);
        } else if bindings[k].value_text.is_none() {
            bindings[k].value_text = Some(tid);
            consumed.insert(tid);
        }
    }
    let mut order: Vec<&TextBox> = texts.iter().collect();
    order.sort_by_key(|t| t.id);
    for t in order {
        if !consumed.contains(&t.id) {
            flags.push(Flag::new(FlagKind::UnboundText, Subject::Text(t.id), format!("text {:?} is not bound to any component", t.string)));
        }
    }
    BindOutcome { bindings, flags }
}
