//! Grammar for designator and value labels.

use std::fmt;

use thiserror::Error;

use crate::netlist::value::{split_number, Multiplier, SpiceValue};

pub const DESIGNATOR_PREFIXES: [char; 8] = ['R', 'C', 'L', 'D', 'V', 'I', 'Q', 'M'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Designator {
    pub prefix: char,
    pub index: u32,
}

impl fmt::Display for Designator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.prefix, self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Label {
    Designator(Designator),
    Value(SpiceValue),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("empty label")]
    Empty,
    #[error("not a designator")]
    NotADesignator,
    #[error("not a number")]
    NotANumber,
    #[error("value must be positive")]
    NotPositive,
    #[error("bare M is ambiguous between milli and mega")]
    AmbiguousM,
    #[error("unknown unit {0:?}")]
    UnknownUnit(String),
}

pub fn parse_designator(s: &str) -> Result<Designator, LabelError> {
    let s = s.trim();
    let mut chars = s.chars();
    let first = chars.next().ok_or(LabelError::Empty)?;
    let prefix = first.to_ascii_uppercase();
    let digits = chars.as_str();
    if !DESIGNATOR_PREFIXES.contains(&prefix) || digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(LabelError::NotADesignator);
    }
    let index = digits.parse().map_err(|_| LabelError::NotADesignator)?;
    Ok(Designator { prefix, index })
}

const UNITS: [&str; 6] = ["Ω", "ohm", "F", "H", "V", "A"];

pub fn parse_value(s: &str) -> Result<SpiceValue, LabelError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(LabelError::Empty);
    }
    if s.starts_with(['+', '-']) {
        return Err(LabelError::NotANumber);
    }
    let (mantissa, rest) = split_number(s, false).ok_or(LabelError::NotANumber)?;
    if mantissa <= 0.0 {
        return Err(LabelError::NotPositive);
    }
    let (multiplier, unit) = if rest.len() >= 3 && rest.is_char_boundary(3) && rest[..3].eq_ignore_ascii_case("meg") {
        (Multiplier::Mega, &rest[3..])
    } else {
        let mut it = rest.chars();
        let m = match it.next() {
            Some('p' | 'P') => Some(Multiplier::Pico),
            Some('n' | 'N') => Some(Multiplier::Nano),
            Some('u' | 'U' | 'µ') => Some(Multiplier::Micro),
            Some('m') => Some(Multiplier::Milli),
            Some('M') => return Err(LabelError::AmbiguousM),
            Some('k' | 'K') => Some(Multiplier::Kilo),
            Some('g' | 'G') => Some(Multiplier::Giga),
            _ => None,
        };
        match m {
            Some(m) => (m, it.as_str()),
            None => (Multiplier::One, rest),
        }
    };
    if !unit.is_empty() && !UNITS.iter().any(|u| u.eq_ignore_ascii_case(unit) || *u == unit) {
        return Err(LabelError::UnknownUnit(unit.to_string()));
    }
    Ok(SpiceValue::new(mantissa, multiplier))
}

/// Designator first, then value.
pub fn parse_label(s: &str) -> Result<Label, LabelError> {
    if let Ok(d) = parse_designator(s) {
        return Ok(Label::Designator(d));
    }
    parse_value(s).map(Label::Value)
}

/// Value label as drawn on a schematic, e.g. `4.7kΩ` or `100nF`.
pub fn format_value(v: &SpiceValue, unit: &str) -> String {
    format!("{}{}{}", v.mantissa, v.multiplier.label_suffix(), unit)
}
