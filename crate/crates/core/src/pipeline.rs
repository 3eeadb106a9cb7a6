//! The end-to-end run: image in, netlist and review flags out.
//!
//! Review overrides are applied at the stage they belong to, so a replay with
//! the same override list gives the same result as a fresh run.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assist::{apply_suggestions, parse_value_for, AssignContext, Assist, Provenance};
use crate::config::{Config, CrossCheck};
use crate::connect::{connect, NodeMap};
use crate::detect::{
    concordance_from_counts, detect_with_library, estimate_scale, ingest_detections, type_counts, Component, ComponentType,
    ConcordanceReport, DetectionDoc, Role,
};
use crate::flags::{dedupe_ids, Flag, FlagKind, Subject};
use crate::geom::BBox;
use crate::netlist::{assign_designators, Assignment, Card, Netlist, SpiceValue};
use crate::raster::{binarize, BinaryImage, GrayImage, LabelMap};
use crate::synth::library::SymbolLibrary;
use crate::text::label::parse_designator;
use crate::text::{bind_text, ingest_ocr, recognize_glyphs, LabelBinding, OcrDoc, TextBox};

#[derive(Debug, Error, PartialEq)]
#[error("{stage}: {message}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub message: String,
}

impl PipelineError {
    fn new(stage: &'static str, message: impl ToString) -> Self {
        Self { stage, message: message.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    SetType,
    SetDesignator,
    SetValue,
    BindTerminal,
    Accept,
}

/// One review decision. Targets a flag, a component, or both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Override {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<usize>,
    pub action: Action,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub payload: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TerminalPayload {
    role: Role,
    node: String,
}

impl Override {
    fn payload_str(&self) -> Result<&str, String> {
        self.payload.as_str().map(str::trim).filter(|s| !s.is_empty()).ok_or_else(|| "payload must be a non-empty string".to_string())
    }

    fn terminal(&self) -> Result<TerminalPayload, String> {
        serde_json::from_value(self.payload.clone()).map_err(|e| format!("payload must be {{\"role\", \"node\"}}: {e}"))
    }

    /// Last-writer-wins key.
    fn key(&self) -> (Action, Option<String>, Option<usize>, Option<Role>) {
        let role = if self.action == Action::BindTerminal { self.terminal().ok().map(|t| t.role) } else { None };
        (self.action, self.flag.clone(), self.component, role)
    }

    /// Check against a run and fill in the component from the flag subject.
    pub fn validate(&self, run: &Run) -> Result<Override, String> {
        let mut o = self.clone();
        if let Some(fid) = &o.flag {
            let f = run.flags.iter().find(|f| &f.id == fid).ok_or_else(|| format!("unknown flag {fid}"))?;
            if o.action != Action::Accept {
                match (f.subject, o.component) {
                    (Subject::Component(c), None) => o.component = Some(c),
                    (Subject::Component(c), Some(d)) if c != d => return Err(format!("flag {fid} is about component {c}, not {d}")),
                    (Subject::Component(_), Some(_)) => {}
                    (_, None) => return Err(format!("flag {fid} does not name a component")),
                    (_, Some(_)) => {}
                }
            }
        }
        if o.action == Action::Accept {
            return if o.flag.is_some() { Ok(o) } else { Err("accept needs a flag id".into()) };
        }
        let id = o.component.ok_or("override needs a flag or component id")?;
        let comp = run.components.iter().find(|c| c.id == id).ok_or_else(|| format!("unknown component {id}"))?;
        match o.action {
            Action::SetType => {
                ComponentType::from_str(o.payload_str()?).map_err(|e| e.to_string())?;
            }
            Action::SetDesignator => {
                let d = parse_designator(o.payload_str()?).map_err(|e| e.to_string())?;
                if Some(d.prefix) != comp.ctype.prefix() {
                    return Err(format!("designator {d} does not fit {}", comp.ctype));
                }
                let name = d.to_string();
                if run.assignments.iter().any(|a| a.component != id && a.designator == name) {
                    return Err(format!("designator {name} already used"));
                }
            }
            Action::SetValue => {
                if !comp.ctype.emits_card() {
                    return Err("ground has no value".into());
                }
                parse_value_for(comp.ctype, o.payload_str()?)?;
            }
            Action::BindTerminal => {
                let t = o.terminal()?;
                if !comp.ctype.roles().contains(&t.role) {
                    return Err(format!("{} has no {} terminal", comp.ctype, t.role));
                }
                if t.node.is_empty() || !t.node.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(format!("invalid node name {:?}", t.node));
                }
            }
            Action::Accept => unreachable!("handled above"),
        }
        Ok(o)
    }
}

/// Keep only the last override per subject, in first-seen order.
pub fn effective_overrides(log: &[Override]) -> Vec<Override> {
    let mut last: BTreeMap<_, usize> = BTreeMap::new();
    for (i, o) in log.iter().enumerate() {
        last.insert(o.key(), i);
    }
    let keep: BTreeSet<usize> = last.into_values().collect();
    log.iter().enumerate().filter(|(i, _)| keep.contains(i)).map(|(_, o)| o.clone()).collect()
}

pub struct Input<'a> {
    pub image: &'a GrayImage,
    pub detections: Option<&'a DetectionDoc>,
    pub ocr: Option<&'a OcrDoc>,
}

#[derive(Default)]
pub struct RunOptions<'a> {
    /// Emit even with unresolved dangling terminals (named `NC1`, `NC2`, ...).
    pub force: bool,
    pub overrides: &'a [Override],
    pub assist: Option<&'a dyn Assist>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Flagged,
    Complete,
}

#[derive(Debug, Clone, Serialize)]
pub struct Run {
    pub width: usize,
    pub height: usize,
    pub scale: u32,
    pub components: Vec<Component>,
    pub texts: Vec<TextBox>,
    pub nodemap: NodeMap,
    pub bindings: Vec<LabelBinding>,
    pub assignments: Vec<Assignment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concordance: Option<ConcordanceReport>,
    pub flags: Vec<Flag>,
    pub warnings: Vec<String>,
    pub provenance: Vec<Provenance>,
    pub netlist: Option<Netlist>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emit_error: Option<String>,
    #[serde(skip)]
    pub binary: BinaryImage,
    #[serde(skip)]
    pub wiring: BinaryImage,
    #[serde(skip)]
    pub labels: Option<LabelMap>,
}

impl Run {
    pub fn unresolved(&self) -> impl Iterator<Item = &Flag> {
        self.flags.iter().filter(|f| !f.is_resolved())
    }

    pub fn status(&self) -> Status {
        if self.unresolved().next().is_none() {
            Status::Complete
        } else {
            Status::Flagged
        }
    }

    pub fn spice(&self) -> Option<String> {
        self.netlist.as_ref().map(Netlist::to_spice)
    }
}

fn components_of(o: &[Override], action: Action) -> impl Iterator<Item = &Override> {
    o.iter().filter(move |x| x.action == action && x.component.is_some())
}

pub fn run(input: &Input<'_>, cfg: &Config, opts: &RunOptions<'_>) -> Result<Run, PipelineError> {
    let img = input.image;
    let (width, height) = (img.width(), img.height());
    let binary = binarize(img);
    let scale = cfg.scale.unwrap_or_else(|| estimate_scale(&binary));
    let mut flags: Vec<Flag> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();
    let overrides = effective_overrides(opts.overrides);

    // detection
    let lib = SymbolLibrary::new(scale);
    let templated = || detect_with_library(&binary, &lib, cfg.template_threshold);
    let mut components = match input.detections {
        Some(doc) => {
            let ing = ingest_detections(doc, Some((width as u32, height as u32))).map_err(|e| PipelineError::new("detect", e))?;
            flags.extend(ing.flags);
            warnings.extend(ing.warnings);
            ing.components
        }
        None => templated(),
    };
    for o in components_of(&overrides, Action::SetType) {
        let id = o.component.expect("filtered");
        let parsed = o.payload.as_str().and_then(|s| ComponentType::from_str(s.trim()).ok());
        match (components.iter_mut().find(|c| c.id == id), parsed) {
            (Some(c), Some(t)) => {
                if c.ctype.roles() != t.roles() {
                    c.terminals.clear();
                }
                c.ctype = t;
            }
            _ => warnings.push(format!("set_type override for component {id} no longer applies")),
        }
    }
    // detection-stage flags about changed components are stale now
    let retyped: BTreeSet<usize> = components_of(&overrides, Action::SetType).filter_map(|o| o.component).collect();
    flags.retain(|f| !(f.kind == FlagKind::TerminalCountMismatch && matches!(f.subject, Subject::Component(c) if retyped.contains(&c))));

    // concordance against a second opinion
    let mut second = None;
    if let Some(a) = opts.assist {
        match a.verify(img, &components) {
            Ok(counts) => second = Some(counts),
            Err(e) => warnings.push(e.to_string()),
        }
    }
    if second.is_none() && input.detections.is_some() && cfg.cross_check == CrossCheck::Template {
        second = Some(type_counts(&templated()));
    }
    let concordance = second.map(|b| concordance_from_counts(&type_counts(&components), &b));
    if let Some(c) = &concordance {
        flags.extend(c.flags.iter().cloned());
    }

    // text
    let boxes: Vec<BBox> = components.iter().map(|c| c.bbox).collect();
    let texts = match input.ocr {
        Some(doc) => {
            let (t, w) = ingest_ocr(doc).map_err(|e| PipelineError::new("text", e))?;
            warnings.extend(w);
            t
        }
        None => recognize_glyphs(&binary, &boxes, scale),
    };

    // connectivity
    let text_boxes: Vec<BBox> = texts.iter().map(|t| t.bbox).collect();
    let conn = connect(&binary, &components, &text_boxes, &cfg.connect_params());
    flags.extend(conn.flags);
    let mut nodemap = conn.nodemap;
    for o in components_of(&overrides, Action::BindTerminal) {
        let id = o.component.expect("filtered");
        let Ok(t) = o.terminal() else { continue };
        let slot = nodemap.bindings.iter_mut().find(|b| b.component == id).and_then(|b| b.terminals.iter_mut().find(|x| x.0 == t.role));
        match slot {
            Some(s) => {
                s.1 = Some(t.node.clone());
                resolve(&mut flags, id, FlagKind::DanglingTerminal, Some(t.role), "override: bind_terminal");
            }
            None => warnings.push(format!("bind_terminal override for component {id} no longer applies")),
        }
    }

    // binding and assignment
    let bound = bind_text(&components, &texts, cfg.bind_factor);
    flags.extend(bound.flags);
    let (mut assignments, more) = assign_designators(&components, &bound.bindings, &texts);
    flags.extend(more);

    let mut provenance = Vec::new();
    if let Some(a) = opts.assist {
        let gaps = flags.iter().any(|f| matches!(f.kind, FlagKind::MissingValue | FlagKind::PrefixConflict) && !f.is_resolved());
        if gaps {
            let ctx = AssignContext { components: &components, texts: &texts, nodemap: &nodemap, assignments: &assignments, flags: &flags };
            match a.assign(img, &ctx) {
                Ok(s) => provenance = apply_suggestions(&components, &mut assignments, &mut flags, &s),
                Err(e) => warnings.push(e.to_string()),
            }
        }
    }

    for o in components_of(&overrides, Action::SetDesignator) {
        let id = o.component.expect("filtered");
        let name = o.payload.as_str().and_then(|s| parse_designator(s.trim()).ok()).map(|d| d.to_string());
        let ctype = components.iter().find(|c| c.id == id).map(|c| c.ctype);
        let fits = name.as_ref().zip(ctype).is_some_and(|(n, t)| n.starts_with(t.prefix().unwrap_or('?')));
        let free = name.as_ref().is_some_and(|n| !assignments.iter().any(|a| a.component != id && &a.designator == n));
        match (assignments.iter_mut().find(|a| a.component == id), name) {
            (Some(a), Some(n)) if fits && free => {
                a.designator = n;
                resolve(&mut flags, id, FlagKind::PrefixConflict, None, "override: set_designator");
            }
            _ => warnings.push(format!("set_designator override for component {id} no longer applies")),
        }
    }
    for o in components_of(&overrides, Action::SetValue) {
        let id = o.component.expect("filtered");
        let ctype = components.iter().find(|c| c.id == id).map(|c| c.ctype);
        let parsed = ctype.zip(o.payload.as_str()).and_then(|(t, s)| parse_value_for(t, s).ok());
        match (assignments.iter_mut().find(|a| a.component == id), parsed) {
            (Some(a), Some((value, model))) => {
                a.value = value;
                a.model = model;
                resolve(&mut flags, id, FlagKind::MissingValue, None, "override: set_value");
            }
            _ => warnings.push(format!("set_value override for component {id} no longer applies")),
        }
    }

    dedupe_ids(&mut flags);
    for o in overrides.iter().filter(|o| o.action == Action::Accept) {
        match flags.iter_mut().find(|f| Some(&f.id) == o.flag.as_ref()) {
            Some(f) if !f.is_resolved() => f.resolution = Some("accepted".into()),
            Some(_) => {}
            None => warnings.push(format!("accepted flag {} no longer raised", o.flag.as_deref().unwrap_or("?"))),
        }
    }

    // emission
    let blocking: Vec<&str> =
        flags.iter().filter(|f| f.kind == FlagKind::DanglingTerminal && !f.is_resolved()).map(|f| f.id.as_str()).collect();
    let (netlist, emit_error) = if !blocking.is_empty() && !opts.force {
        (None, Some(format!("unresolved dangling terminals: {}", blocking.join(", "))))
    } else {
        (Some(emit(&components, &nodemap, &assignments)), None)
    };

    Ok(Run {
        width,
        height,
        scale,
        components,
        texts,
        nodemap,
        bindings: bound.bindings,
        assignments,
        concordance,
        flags,
        warnings,
        provenance,
        netlist,
        emit_error,
        binary,
        wiring: conn.masked,
        labels: Some(conn.labels),
    })
}

fn resolve(flags: &mut [Flag], id: usize, kind: FlagKind, role: Option<Role>, how: &str) {
    for f in flags.iter_mut() {
        let role_ok = role.is_none_or(|r| f.id.ends_with(&format!("/{}", r.as_str())));
        if f.kind == kind && f.subject == Subject::Component(id) && role_ok && !f.is_resolved() {
            f.resolution = Some(how.to_string());
        }
    }
}

/// Cards from node bindings and assignments. Unbound terminals get fresh
/// `NC` nodes so the netlist stays parseable.
pub fn emit(components: &[Component], nodemap: &NodeMap, assignments: &[Assignment]) -> Netlist {
    let mut nc = 0;
    let mut cards = Vec::new();
    for a in assignments {
        let Some(c) = components.iter().find(|c| c.id == a.component) else { continue };
        let bound = nodemap.terminals_of(c.id);
        let mut nodes: Vec<String> = c
            .ctype
            .roles()
            .iter()
            .map(|r| {
                bound.and_then(|b| b.terminals.iter().find(|t| t.0 == *r)).and_then(|t| t.1.clone()).unwrap_or_else(|| {
                    nc += 1;
                    format!("NC{nc}")
                })
            })
            .collect();
        if matches!(c.ctype, ComponentType::Nmos | ComponentType::Pmos) {
            nodes.push(nodes[2].clone());
        }
        cards.push(Card { designator: a.designator.clone(), ctype: c.ctype, nodes, value: a.value, model: a.model.clone() });
    }
    Netlist::new(cards)
}

/// Value shown for a component in reports, e.g. `10k` or `QNPN`.
pub fn value_text(value: Option<&SpiceValue>, model: Option<&str>) -> String {
    match (value, model) {
        (Some(v), _) => v.to_string(),
        (None, Some(m)) => m.to_string(),
        _ => String::new(),
    }
}
