//! SPICE netlist model: card formatting, parsing, designator assignment and
//! the structural-equivalence oracle.

pub mod assign;
pub mod equiv;
pub mod value;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::ComponentType;
pub use assign::{assign_designators, default_value, Assignment};
pub use equiv::{common_card_count, netlists_equivalent, CapacityError, EquivOptions, EquivalenceResult, MAX_NODES};
pub use value::{parse_spice_value, values_close, Multiplier, SpiceValue};

pub const TITLE: &str = "generated netlist";
pub const GROUND: &str = "0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Card {
    pub designator: String,
    pub ctype: ComponentType,
    /// Canonical terminal order; MOS cards carry the bulk as a fourth node.
    pub nodes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<SpiceValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

impl Card {
    pub fn prefix(&self) -> char {
        self.ctype.prefix().expect("cards never describe ground")
    }

    /// Numeric part of the designator, if any.
    pub fn index(&self) -> Option<u64> {
        self.designator.get(1..).and_then(|s| s.parse().ok())
    }

    fn sort_key(&self) -> (char, u64, String) {
        (self.prefix(), self.index().unwrap_or(u64::MAX), self.designator.clone())
    }
}

/// Number of nodes written on a card of this type.
pub fn card_node_count(t: ComponentType) -> usize {
    match t {
        ComponentType::Nmos | ComponentType::Pmos => 4,
        other => other.terminal_count(),
    }
}

/// `.model` kind keyword for model-carrying types.
pub fn model_kind(t: ComponentType) -> Option<&'static str> {
    Some(match t {
        ComponentType::Diode => "D",
        ComponentType::Npn => "NPN",
        ComponentType::Pnp => "PNP",
        ComponentType::Nmos => "NMOS",
        ComponentType::Pmos => "PMOS",
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Netlist {
    pub title: String,
    pub cards: Vec<Card>,
}

impl Netlist {
    pub fn new(mut cards: Vec<Card>) -> Self {
        cards.sort_by_key(Card::sort_key);
        Self { title: TITLE.to_string(), cards }
    }

    /// Model name to `.model` kind, sorted by name.
    pub fn models(&self) -> BTreeMap<String, &'static str> {
        self.cards
            .iter()
            .filter_map(|c| Some((c.model.clone()?, model_kind(c.ctype)?)))
            .collect()
    }

    /// Distinct node names in first-use order.
    pub fn nodes(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in &self.cards {
            for n in &c.nodes {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
        }
        out
    }

    /// SPICE text, LF line endings.
    pub fn to_spice(&self) -> String {
        let mut s = format!("* {}\n", self.title);
        for c in &self.cards {
            s.push_str(&c.designator);
            for n in &c.nodes {
                s.push(' ');
                s.push_str(n);
            }
            match c.ctype {
                ComponentType::VoltageSource | ComponentType::CurrentSource => {
                    if let Some(v) = &c.value {
                        let _ = write!(s, " DC {v}");
                    }
                }
                _ => {
                    if let Some(v) = &c.value {
                        let _ = write!(s, " {v}");
                    }
                    if let Some(m) = &c.model {
                        let _ = write!(s, " {m}");
                    }
                }
            }
            s.push('\n');
        }
        for (name, kind) in self.models() {
            let _ = writeln!(s, ".model {name} {kind}");
        }
        s.push_str(".end\n");
        s
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{message} at line {line}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn perr(line: usize, message: impl Into<String>) -> ParseError {
    ParseError { line, message: message.into() }
}

/// Parse the supported SPICE subset. Case-insensitive; designators and model
/// names are upper-cased, node names are kept as written.
pub fn parse_netlist(text: &str) -> Result<Netlist, ParseError> {
    let mut title = String::new();
    let mut lines: Vec<(usize, Vec<&str>)> = Vec::new();
    let mut models: BTreeMap<String, String> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('*') {
            if n == 1 {
                title = rest.trim().to_string();
            }
            continue;
        }
        if line.starts_with('+') {
            return Err(perr(n, "unsupported continuation line"));
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if let Some(directive) = toks[0].strip_prefix('.') {
            match directive.to_ascii_lowercase().as_str() {
                "end" => break,
                "model" => {
                    if toks.len() < 3 {
                        return Err(perr(n, "malformed .model"));
                    }
                    let kind = toks[2].split('(').next().unwrap_or("").to_ascii_uppercase();
                    if !["D", "NPN", "PNP", "NMOS", "PMOS"].contains(&kind.as_str()) {
                        return Err(perr(n, format!("unsupported model kind {kind}")));
                    }
                    models.insert(toks[1].to_ascii_uppercase(), kind);
                }
                "subckt" | "include" | "lib" => return Err(perr(n, format!("unsupported directive .{directive}"))),
                _ => {}
            }
            continue;
        }
        lines.push((n, toks));
    }
    let mut cards = Vec::new();
    let mut seen = BTreeMap::new();
    for (n, toks) in lines {
        let designator = toks[0].to_ascii_uppercase();
        let letter = designator.chars().next().expect("non-empty token");
        let value_at = |i: usize| -> Result<SpiceValue, ParseError> {
            let t = toks.get(i).ok_or_else(|| perr(n, format!("missing value for {designator}")))?;
            parse_spice_value(t).ok_or_else(|| perr(n, format!("malformed value {t:?}")))
        };
        let need = |count: usize| -> Result<(), ParseError> {
            if toks.len() != count {
                Err(perr(n, format!("wrong node count for {designator}")))
            } else {
                Ok(())
            }
        };
        let nodes = |k: usize| toks[1..1 + k].iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let model_of = |i: usize| toks[i].to_ascii_uppercase();
        let card = match letter {
            'R' | 'C' | 'L' => {
                need(4)?;
                let ctype = match letter {
                    'R' => ComponentType::Resistor,
                    'C' => ComponentType::Capacitor,
                    _ => ComponentType::Inductor,
                };
                Card { designator: designator.clone(), ctype, nodes: nodes(2), value: Some(value_at(3)?), model: None }
            }
            'V' | 'I' => {
                let vi = if toks.get(3).is_some_and(|t| t.eq_ignore_ascii_case("dc")) { 4 } else { 3 };
                need(vi + 1)?;
                let ctype = if letter == 'V' { ComponentType::VoltageSource } else { ComponentType::CurrentSource };
                Card { designator: designator.clone(), ctype, nodes: nodes(2), value: Some(value_at(vi)?), model: None }
            }
            'D' => {
                need(4)?;
                Card { designator: designator.clone(), ctype: ComponentType::Diode, nodes: nodes(2), value: None, model: Some(model_of(3)) }
            }
            'Q' | 'M' => {
                let k = if letter == 'Q' { 3 } else { 4 };
                need(k + 2)?;
                let model = model_of(k + 1);
                let kind = models.get(&model).cloned().unwrap_or_else(|| {
                    // library models without a .model line: guess from the name
                    let guess = if letter == 'Q' { ("PNP", "NPN") } else { ("PMOS", "NMOS") };
                    if model.contains(guess.0) { guess.0 } else { guess.1 }.to_string()
                });
                let ctype = match (letter, kind.as_str()) {
                    ('Q', "NPN") => ComponentType::Npn,
                    ('Q', "PNP") => ComponentType::Pnp,
                    ('M', "NMOS") => ComponentType::Nmos,
                    ('M', "PMOS") => ComponentType::Pmos,
                    _ => return Err(perr(n, format!("model {model} of kind {kind} does not fit {designator}"))),
                };
                Card { designator: designator.clone(), ctype, nodes: nodes(k), value: None, model: Some(model) }
            }
            other => return Err(perr(n, format!("unsupported card {other}"))),
        };
        if designator.len() < 2 {
            return Err(perr(n, format!("designator {designator} has no name")));
        }
        if let Some(prev) = seen.insert(designator.clone(), n) {
            return Err(perr(n, format!("duplicate designator {designator} (first at line {prev})")));
        }
        cards.push(card);
    }
    Ok(Netlist { title, cards: { cards.sort_by_key(Card::sort_key); cards } })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn card(d: &str, t: ComponentType, nodes: &[&str], v: Option<SpiceValue>, m: Option<&str>) -> Card {
        Card {
            designator: d.into(),
            ctype: t,
            nodes: nodes.iter().map(|s| s.to_string()).collect(),
            value: v,
            model: m.map(String::from),
        }
    }

    #[test]
    fn minimal_netlist_text() {
        let n = Netlist::new(vec![card("R1", ComponentType::Resistor, &["N1", "0"], Some(SpiceValue::new(1.0, Multiplier::Kilo)), None)]);
        assert_eq!(n.to_spice(), "* generated netlist\nR1 N1 0 1k\n.end\n");
    }

    #[test]
    fn card_formats_and_order() {
        use ComponentType::*;
        let n = Netlist::new(vec![
            card("M1", Nmos, &["N2", "N1", "0", "0"], None, Some("MNMOS")),
            card("R10", Resistor, &["N1", "N2"], Some(SpiceValue::new(10.0, Multiplier::Kilo)), None),
            card("Q1", Npn, &["N2", "N1", "0"], None, Some("QNPN")),
            card("R2", Resistor, &["N1", "0"], Some(SpiceValue::new(4.7, Multiplier::Mega)), None),
            card("V1", VoltageSource, &["N1", "0"], Some(SpiceValue::new(5.0, Multiplier::One)), None),
            card("D1", Diode, &["N1", "N2"], None, Some("D1N4148")),
        ]);
        let text = n.to_spice();
        assert_eq!(
            text,
            "* generated netlist\nD1 N1 N2 D1N4148\nM1 N2 N1 0 0 MNMOS\nQ1 N2 N1 0 QNPN\nR2 N1 0 4.7Meg\nR10 N1 N2 10k\nV1 N1 0 DC 5\n\
             .model D1N4148 D\n.model MNMOS NMOS\n.model QNPN NPN\n.end\n"
        );
        assert_eq!(parse_netlist(&text).unwrap(), n);
    }

    #[test]
    fn parse_values_and_errors() {
        let n = parse_netlist("R1 1 2 10k\n").unwrap();
        assert_eq!(n.cards[0].value.unwrap().base(), 10_000.0);
        let e = parse_netlist("* t\nR1 1 2 1k\nX1 1 2 SUB\n").unwrap_err();
        assert_eq!(e.to_string(), "unsupported card X at line 3");
        assert_eq!(parse_netlist("R1 1 2\n").unwrap_err().line, 1);
        assert!(parse_netlist("R1 1 2 abc\n").unwrap_err().message.contains("malformed value"));
        assert!(parse_netlist("Q1 1 2 QX\n").unwrap_err().message.contains("wrong node count"));
    }

    #[test]
    fn q_type_comes_from_model_line() {
        let n = parse_netlist("q1 c b e qa\n.model QA pnp\n.end\n").unwrap();
        assert_eq!(n.cards[0].ctype, ComponentType::Pnp);
        assert_eq!(n.cards[0].designator, "Q1");
        let n = parse_netlist("Q1 c b e Q2N3906PNP\n").unwrap();
        assert_eq!(n.cards[0].ctype, ComponentType::Pnp);
        assert!(parse_netlist("M1 d g s s QA\n.model QA NPN\n").is_err());
    }
}
