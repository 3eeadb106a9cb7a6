//! Advisory second opinion from an external service.
//!
//! The rule engine stays authoritative: type counts only feed the
//! concordance check, and suggested designators or values are applied only
//! to components that already carry a `prefix_conflict` or `missing_value`
//! flag. Everything else is logged and ignored.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::connect::NodeMap;
use crate::detect::{Component, ComponentType};
use crate::flags::{Flag, FlagKind, Subject};
use crate::netlist::Assignment;
use crate::raster::GrayImage;
use crate::text::label::{parse_designator, parse_value};
use crate::text::TextBox;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("assist_unavailable: {0}")]
pub struct AssistError(pub String);

/// What the assigner gets to look at.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AssignContext<'a> {
    pub components: &'a [Component],
    pub texts: &'a [TextBox],
    pub nodemap: &'a NodeMap,
    pub assignments: &'a [Assignment],
    pub flags: &'a [Flag],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suggestion {
    pub component: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub designator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

pub trait Assist {
    /// Independent component type counts for the image.
    fn verify(&self, image: &GrayImage, components: &[Component]) -> Result<BTreeMap<ComponentType, usize>, AssistError>;

    /// Designator and value suggestions.
    fn assign(&self, image: &GrayImage, ctx: &AssignContext<'_>) -> Result<Vec<Suggestion>, AssistError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Applied,
    Ignored,
    Dropped,
}

/// One line of the override log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub component: usize,
    pub outcome: Outcome,
    pub detail: String,
}

fn open_flag(flags: &[Flag], id: usize, kind: FlagKind) -> bool {
    flags.iter().any(|f| f.kind == kind && f.subject == Subject::Component(id) && !f.is_resolved())
}

fn resolve(flags: &mut [Flag], id: usize, kind: FlagKind, how: &str) {
    for f in flags.iter_mut().filter(|f| f.kind == kind && f.subject == Subject::Component(id) && !f.is_resolved()) {
        f.resolution = Some(how.to_string());
    }
}

/// Parsed value text for a component type: numeric value or model name.
pub fn parse_value_for(t: ComponentType, s: &str) -> Result<(Option<crate::netlist::SpiceValue>, Option<String>), String> {
    let s = s.trim();
    if t.uses_model() {
        if crate::netlist::assign::is_model_name(s) && parse_designator(s).is_err() {
            Ok((None, Some(s.to_ascii_uppercase())))
        } else {
            Err(format!("`{s}` is not a model name"))
        }
    } else {
        parse_value(s).map(|v| (Some(v), None)).map_err(|e| format!("`{s}`: {e}"))
    }
}

/// Apply suggestions gated by open flags. Returns the provenance log.
pub fn apply_suggestions(
    comps: &[Component],
    assignments: &mut [Assignment],
    flags: &mut [Flag],
    suggestions: &[Suggestion],
) -> Vec<Provenance> {
    let mut log = Vec::new();
    for s in suggestions {
        let id = s.component;
        let Some(comp) = comps.iter().find(|c| c.id == id && c.ctype.emits_card()) else {
            log.push(Provenance { component: id, outcome: Outcome::Dropped, detail: "unknown component".into() });
            continue;
        };
        let Some(ai) = assignments.iter().position(|a| a.component == id) else {
            log.push(Provenance { component: id, outcome: Outcome::Dropped, detail: "component has no assignment".into() });
            continue;
        };
        if let Some(d) = &s.designator {
            let parsed = parse_designator(d);
            let name = d.trim().to_ascii_uppercase();
            if !open_flag(flags, id, FlagKind::PrefixConflict) {
                if name != assignments[ai].designator {
                    log.push(Provenance { component: id, outcome: Outcome::Ignored, detail: format!("designator {name}: component not flagged") });
                }
            } else if parsed.as_ref().map(|p| Some(p.prefix)) != Ok(comp.ctype.prefix()) {
                log.push(Provenance { component: id, outcome: Outcome::Dropped, detail: format!("designator {name} does not fit {}", comp.ctype) });
            } else if assignments.iter().any(|a| a.component != id && a.designator == name) {
                log.push(Provenance { component: id, outcome: Outcome::Dropped, detail: format!("designator {name} already used") });
            } else {
                assignments[ai].designator = name.clone();
                resolve(flags, id, FlagKind::PrefixConflict, &format!("assist: designator {name}"));
                log.push(Provenance { component: id, outcome: Outcome::Applied, detail: format!("designator {name}") });
            }
        }
        if let Some(v) = &s.value {
            if !open_flag(flags, id, FlagKind::MissingValue) {
                log.push(Provenance { component: id, outcome: Outcome::Ignored, detail: format!("value {v}: component not flagged") });
                continue;
            }
            match parse_value_for(comp.ctype, v) {
                Ok((value, model)) => {
                    assignments[ai].value = value;
                    assignments[ai].model = model;
                    resolve(flags, id, FlagKind::MissingValue, &format!("assist: value {}", v.trim()));
                    log.push(Provenance { component: id, outcome: Outcome::Applied, detail: format!("value {}", v.trim()) });
                }
                Err(e) => log.push(Provenance { component: id, outcome: Outcome::Dropped, detail: format!("value {e}") }),
            }
        }
    }
    log
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::BBox;
    use crate::netlist::{Multiplier, SpiceValue};

    fn comp(id: usize, t: ComponentType) -> Component {
        Component { id, ctype: t, bbox: BBox::new(10 * id as i32, 0, 5, 5), confidence: 1.0, terminals: vec![] }
    }

    fn setup() -> (Vec<Component>, Vec<Assignment>, Vec<Flag>) {
        let comps = vec![comp(0, ComponentType::Resistor), comp(1, ComponentType::Capacitor)];
        let asg = vec![
            Assignment { component: 0, designator: "R1".into(), value: Some(SpiceValue::new(10.0, Multiplier::Kilo)), model: None },
            Assignment { component: 1, designator: "C3".into(), value: Some(SpiceValue::new(1.0, Multiplier::Micro)), model: None },
        ];
        let flags = vec![Flag::new(FlagKind::MissingValue, Subject::Component(1), "no value; using default 1u")];
        (comps, asg, flags)
    }

    #[test]
    fn flagged_value_is_applied_and_resolved() {
        let (comps, mut asg, mut flags) = setup();
        let s = Suggestion { component: 1, designator: Some("C3".into()), value: Some("4.7u".into()) };
        let log = apply_suggestions(&comps, &mut asg, &mut flags, &[s]);
        assert_eq!(asg[1].value, Some(SpiceValue::new(4.7, Multiplier::Micro)));
        assert!(flags[0].is_resolved());
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].outcome, Outcome::Applied);
    }

    #[test]
    fn unflagged_component_is_ignored() {
        let (comps, mut asg, mut flags) = setup();
        let before = asg.clone();
        let log = apply_suggestions(&comps, &mut asg, &mut flags, &[Suggestion { component: 0, designator: None, value: Some("22k".into()) }]);
        assert_eq!(asg, before);
        assert_eq!(log[0].outcome, Outcome::Ignored);
    }

    #[test]
    fn unknown_component_is_dropped() {
        let (comps, mut asg, mut flags) = setup();
        let log = apply_suggestions(&comps, &mut asg, &mut flags, &[Suggestion { component: 9, designator: None, value: Some("1k".into()) }]);
        assert_eq!(log[0].outcome, Outcome::Dropped);
        assert!(!flags[0].is_resolved());
    }

    #[test]
    fn malformed_value_is_dropped_not_applied() {
        let (comps, mut asg, mut flags) = setup();
        let log = apply_suggestions(&comps, &mut asg, &mut flags, &[Suggestion { component: 1, designator: None, value: Some("10x".into()) }]);
        assert_eq!(log[0].outcome, Outcome::Dropped);
        assert_eq!(asg[1].value, Some(SpiceValue::new(1.0, Multiplier::Micro)));
    }
}
