//! Rule engine that turns bound labels into final designators and values.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::value::{Multiplier, SpiceValue};
use crate::detect::{Component, ComponentType};
use crate::flags::{Flag, FlagKind, Subject};
use crate::text::label::{parse_designator, parse_value};
use crate::text::{LabelBinding, TextBox};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub component: usize,
    pub designator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<SpiceValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

/// Value or model used when no label supplies one.
pub fn default_value(t: ComponentType) -> (Option<SpiceValue>, Option<String>) {
    use ComponentType::*;
    let v = |m: f64, mul: Multiplier| (Some(SpiceValue::new(m, mul)), None);
    let model = |name: &str| (None, Some(name.to_string()));
    match t {
        Resistor => v(1.0, Multiplier::Kilo),
        Capacitor => v(1.0, Multiplier::Micro),
        Inductor => v(1.0, Multiplier::Milli),
        VoltageSource => v(1.0, Multiplier::One),
        CurrentSource => v(1.0, Multiplier::Milli),
        Diode => model("DDEF"),
        Npn => model("QNPN"),
        Pnp => model("QPNP"),
        Nmos => model("MNMOS"),
        Pmos => model("MPMOS"),
        Ground => (None, None),
    }
}

/// A model name on a label: a letter followed by letters, digits or `_`.
pub fn is_model_name(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Final designator and value per non-ground component, ordered by id.
pub fn assign_designators(comps: &[Component], bindings: &[LabelBinding], texts: &[TextBox]) -> (Vec<Assignment>, Vec<Flag>) {
    let mut order: Vec<&Component> = comps.iter().filter(|c| c.ctype.emits_card()).collect();
    order.sort_by_key(|c| (c.bbox.y, c.bbox.x, c.id));
    let binding: BTreeMap<usize, &LabelBinding> = bindings.iter().map(|b| (b.component, b)).collect();
    let text = |id: Option<usize>| id.and_then(|i| texts.iter().find(|t| t.id == i)).map(|t| t.string.trim());

    let mut flags = Vec::new();
    let mut names: BTreeMap<usize, String> = BTreeMap::new();
    let mut taken: BTreeMap<char, BTreeSet<u64>> = BTreeMap::new();
    // first pass: keep bound designators; lower id wins duplicates
    let mut by_id: Vec<&Component> = order.clone();
    by_id.sort_by_key(|c| c.id);
    for c in &by_id {
        let prefix = c.ctype.prefix().expect("card type");
        let Some(s) = text(binding.get(&c.id).and_then(|b| b.designator_text)) else { continue };
        let Ok(d) = parse_designator(s) else { continue };
        if d.prefix != prefix {
            flags.push(Flag::new(
                FlagKind::PrefixConflict,
                Subject::Component(c.id),
                format!("label {s} does not fit a {}", c.ctype),
            ));
            continue;
        }
        let used = taken.entry(prefix).or_default();
        if !used.insert(u64::from(d.index)) {
            flags.push(Flag::new(
                FlagKind::PrefixConflict,
                Subject::Component(c.id),
                format!("designator {s} already used by a lower-numbered component"),
            ));
            continue;
        }
        names.insert(c.id, format!("{prefix}{}", d.index));
    }
    // second pass: number the rest in (y, x) order
    for c in &order {
        if names.contains_key(&c.id) {
            continue;
        }
        let prefix = c.ctype.prefix().expect("card type");
        let used = taken.entry(prefix).or_default();
        let idx = (1..).find(|i| !used.contains(i)).expect("unbounded range");
        used.insert(idx);
        names.insert(c.id, format!("{prefix}{idx}"));
    }

    let mut out = Vec::new();
    for c in &by_id {
        let vt = text(binding.get(&c.id).and_then(|b| b.value_text));
        let (mut value, mut model) = (None, None);
        let mut problem = None;
        match vt {
            None => problem = Some("no value label".to_string()),
            Some(s) if c.ctype.uses_model() => {
                if is_model_name(s) && parse_designator(s).is_err() {
                    model = Some(s.to_ascii_uppercase());
                } else {
                    problem = Some(format!("label {s:?} is not a model name"));
                }
            }
            Some(s) => match parse_value(s) {
                Ok(v) => value = Some(v),
                Err(e) => problem = Some(format!("label {s:?}: {e}")),
            },
        }
        if let Some(detail) = problem {
            (value, model) = default_value(c.ctype);
            let shown = value.map(|v| v.to_string()).or(model.clone()).unwrap_or_default();
            flags.push(Flag::new(FlagKind::MissingValue, Subject::Component(c.id), format!("{detail}; using default {shown}")));
        }
        out.push(Assignment { component: c.id, designator: names[&c.id].clone(), value, model });
    }
    (out, flags)
}
