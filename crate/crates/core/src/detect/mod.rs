//! Component detection: the shared component model, ingestion of external
//! detector output, the built-in template backend and the concordance
//! cross-check between two detectors.

mod template;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flags::{Flag, FlagKind, Subject};
use crate::geom::{BBox, Point};

pub use template::{detect_template, detect_with_library, estimate_scale, TemplateParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentType {
    Resistor,
    Capacitor,
    Inductor,
    Diode,
    VoltageSource,
    CurrentSource,
    Npn,
    Pnp,
    Nmos,
    Pmos,
    Ground,
}

impl ComponentType {
    pub const ALL: [ComponentType; 11] = [
        Self::Resistor,
        Self::Capacitor,
        Self::Inductor,
        Self::Diode,
        Self::VoltageSource,
        Self::CurrentSource,
        Self::Npn,
        Self::Pnp,
        Self::Nmos,
        Self::Pmos,
        Self::Ground,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Resistor => "resistor",
            Self::Capacitor => "capacitor",
            Self::Inductor => "inductor",
            Self::Diode => "diode",
            Self::VoltageSource => "voltage_source",
            Self::CurrentSource => "current_source",
            Self::Npn => "npn",
            Self::Pnp => "pnp",
            Self::Nmos => "nmos",
            Self::Pmos => "pmos",
            Self::Ground => "ground",
        }
    }

    /// SPICE card letter; `None` for ground.
    pub fn prefix(self) -> Option<char> {
        Some(match self {
            Self::Resistor => 'R',
            Self::Capacitor => 'C',
            Self::Inductor => 'L',
            Self::Diode => 'D',
            Self::VoltageSource => 'V',
            Self::CurrentSource => 'I',
            Self::Npn | Self::Pnp => 'Q',
            Self::Nmos | Self::Pmos => 'M',
            Self::Ground => return None,
        })
    }

    pub fn emits_card(self) -> bool {
        self != Self::Ground
    }

    /// Canonical terminal order; also the SPICE node order.
    pub fn roles(self) -> &'static [Role] {
        match self {
            Self::Npn | Self::Pnp => &[Role::Collector, Role::Base, Role::Emitter],
            Self::Nmos | Self::Pmos => &[Role::Drain, Role::Gate, Role::Source],
            Self::Ground => &[Role::Gnd],
            _ => &[Role::T1, Role::T2],
        }
    }

    pub fn terminal_count(self) -> usize {
        self.roles().len()
    }

    /// Types whose card carries a model name instead of a numeric value.
    pub fn uses_model(self) -> bool {
        matches!(self, Self::Diode | Self::Npn | Self::Pnp | Self::Nmos | Self::Pmos)
    }

    /// Two-terminal elements whose node order carries no meaning.
    pub fn is_symmetric(self) -> bool {
        matches!(self, Self::Resistor | Self::Capacitor | Self::Inductor)
    }
}

impl fmt::Display for ComponentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ComponentType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| format!("unknown component type {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    T1,
    T2,
    Collector,
    Base,
    Emitter,
    Drain,
    Gate,
    Source,
    Gnd,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::T1 => "t1",
            Self::T2 => "t2",
            Self::Collector => "collector",
            Self::Base => "base",
            Self::Emitter => "emitter",
            Self::Drain => "drain",
            Self::Gate => "gate",
            Self::Source => "source",
            Self::Gnd => "gnd",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Self::T1,
            Self::T2,
            Self::Collector,
            Self::Base,
            Self::Emitter,
            Self::Drain,
            Self::Gate,
            Self::Source,
            Self::Gnd,
        ]
        .into_iter()
        .find(|r| r.as_str() == s)
        .ok_or_else(|| format!("unknown terminal role {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Terminal {
    pub role: Role,
    pub xy: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub id: usize,
    pub ctype: ComponentType,
    pub bbox: BBox,
    pub confidence: f64,
    /// Empty until known; otherwise exactly `ctype.terminal_count()` entries.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terminals: Vec<Terminal>,
}

impl Component {
    pub fn terminal(&self, role: Role) -> Option<&Terminal> {
        self.terminals.iter().find(|t| t.role == role)
    }
}

/// Sort by `(y, x, previous id)` and renumber densely.
pub fn canonicalize(components: &mut [Component]) {
    components.sort_by_key(|c| (c.bbox.y, c.bbox.x, c.id));
    for (i, c) in components.iter_mut().enumerate() {
        c.id = i;
    }
}

// ---- detection interchange document -------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageDims {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalEntry {
    pub role: Role,
    pub xy: [i32; 2],
}

fn default_confidence() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionEntry {
    #[serde(rename = "type")]
    pub ctype: ComponentType,
    pub bbox: [i32; 4],
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminals: Option<Vec<TerminalEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionDoc {
    pub image: ImageDims,
    pub components: Vec<DetectionEntry>,
}

impl DetectionDoc {
    pub fn from_json(bytes: &[u8]) -> Result<Self, IngestError> {
        let de = &mut serde_json::Deserializer::from_slice(bytes);
        serde_path_to_error::deserialize(de)
            .map_err(|e| IngestError::Schema { path: e.path().to_string(), message: e.inner().to_string() })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("detection doc serializes")
    }

    /// Serialize components back into the interchange format.
    pub fn from_components(components: &[Component], width: u32, height: u32) -> Self {
        let components = components
            .iter()
            .map(|c| DetectionEntry {
                ctype: c.ctype,
                bbox: [c.bbox.x, c.bbox.y, c.bbox.w, c.bbox.h],
                confidence: c.confidence,
                terminals: (!c.terminals.is_empty()).then(|| {
                    c.terminals.iter().map(|t| TerminalEntry { role: t.role, xy: [t.xy.x, t.xy.y] }).collect()
                }),
            })
            .collect();
        Self { image: ImageDims { width, height }, components }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum IngestError {
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("image is {actual:?} but document declares {declared:?}")]
    DimensionMismatch { declared: (u32, u32), actual: (u32, u32) },
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub components: Vec<Component>,
    pub flags: Vec<Flag>,
    pub warnings: Vec<String>,
}

/// Validate and canonicalize an external detection document.
pub fn ingest_detections(doc: &DetectionDoc, dims: Option<(u32, u32)>) -> Result<Ingested, IngestError> {
    let (width, height) = (doc.image.width as i32, doc.image.height as i32);
    if let Some(actual) = dims {
        if actual != (doc.image.width, doc.image.height) {
            return Err(IngestError::DimensionMismatch { declared: (doc.image.width, doc.image.height), actual });
        }
    }
    if width < 1 || height < 1 {
        return Err(IngestError::Schema { path: "image".into(), message: "image dimensions must be >= 1".into() });
    }
    let mut out = Ingested::default();
    let mut terminal_issues: Vec<(usize, String)> = Vec::new();
    for (i, entry) in doc.components.iter().enumerate() {
        let path = |field: &str| format!("components[{i}].{field}");
        let [x, y, w, h] = entry.bbox;
        if w < 1 || h < 1 {
            return Err(IngestError::Schema { path: path("bbox"), message: "width and height must be >= 1".into() });
        }
        if !(0.0..=1.0).contains(&entry.confidence) {
            return Err(IngestError::Schema { path: path("confidence"), message: "must lie in [0, 1]".into() });
        }
        let raw = BBox::new(x, y, w, h);
        let overflow = (-x).max(-y).max(raw.right() - width).max(raw.bottom() - height);
        let bbox = match raw.clamp_to(width, height) {
            None => {
                return Err(IngestError::Schema { path: path("bbox"), message: "bbox lies entirely outside the image".into() })
            }
            Some(_) if overflow > 2 => {
                return Err(IngestError::Schema {
                    path: path("bbox"),
                    message: format!("bbox exceeds the image by {overflow} px"),
                })
            }
            Some(b) => {
                if overflow > 0 {
                    out.warnings.push(format!("{}: bbox clamped by {overflow} px", path("bbox")));
                }
                b
            }
        };
        let mut terminals = Vec::new();
        if let Some(entries) = &entry.terminals {
            let expected = entry.ctype.roles();
            for (k, t) in entries.iter().enumerate() {
                if !expected.contains(&t.role) {
                    return Err(IngestError::Schema {
                        path: format!("components[{i}].terminals[{k}].role"),
                        message: format!("role {} is not valid for {}", t.role, entry.ctype),
                    });
                }
            }
            let complete = entries.len() == expected.len() && expected.iter().all(|r| entries.iter().any(|t| t.role == *r));
            if complete {
                terminals = expected
                    .iter()
                    .map(|r| {
                        let t = entries.iter().find(|t| t.role == *r).expect("checked above");
                        Terminal { role: *r, xy: Point::new(t.xy[0], t.xy[1]) }
                    })
                    .collect();
            } else {
                terminal_issues.push((i, format!("{} terminals given, {} expected for {}", entries.len(), expected.len(), entry.ctype)));
            }
        }
        out.components.push(Component { id: i, ctype: entry.ctype, bbox, confidence: entry.confidence, terminals });
    }
    canonicalize(&mut out.components);
    // ids above were document indices; map issues to the new ids
    let mut order: Vec<usize> = (0..doc.components.len()).collect();
    order.sort_by_key(|&i| {
        let [x, y, ..] = doc.components[i].bbox;
        (y.max(0), x.max(0), i)
    });
    for (i, detail) in terminal_issues {
        let new_id = order.iter().position(|&k| k == i).expect("index present");
        out.flags.push(Flag::new(FlagKind::TerminalCountMismatch, Subject::Component(new_id), detail));
    }
    Ok(out)
}

// ---- concordance ---------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceReport {
    pub score: f64,
    pub per_type: Vec<(ComponentType, usize, usize)>,
    pub flags: Vec<Flag>,
}

pub fn type_counts(components: &[Component]) -> BTreeMap<ComponentType, usize> {
    let mut counts = BTreeMap::new();
    for c in components {
        *counts.entry(c.ctype).or_insert(0) += 1;
    }
    counts
}

/// Multiset Jaccard agreement between two type-count tables.
pub fn concordance_from_counts(a: &BTreeMap<ComponentType, usize>, b: &BTreeMap<ComponentType, usize>) -> ConcordanceReport {
    let mut types: Vec<ComponentType> = a.keys().chain(b.keys()).copied().collect();
    types.sort();
    types.dedup();
    let (mut num, mut den) = (0usize, 0usize);
    let mut per_type = Vec::new();
    let mut flags = Vec::new();
    for t in types {
        let ca = a.get(&t).copied().unwrap_or(0);
        let cb = b.get(&t).copied().unwrap_or(0);
        if ca == 0 && cb == 0 {
            continue;
        }
        num += ca.min(cb);
        den += ca.max(cb);
        per_type.push((t, ca, cb));
        if ca != cb {
            flags.push(Flag::new(
                FlagKind::TypeCountMismatch,
                Subject::Type(t),
                format!("{t}: primary detector found {ca}, cross-check found {cb}"),
            ));
        }
    }
    let score = if den == 0 { 1.0 } else { num as f64 / den as f64 };
    ConcordanceReport { score, per_type, flags }
}

pub fn verify_concordance(a: &[Component], b: &[Component]) -> ConcordanceReport {
    concordance_from_counts(&type_counts(a), &type_counts(b))
}
