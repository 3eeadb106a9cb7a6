//! Numeric component values: a mantissa plus an SI multiplier, kept exactly
//! as written so that formatting and parsing round-trip.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Multiplier {
    #[serde(rename = "f")]
    Femto,
    #[serde(rename = "p")]
    Pico,
    #[serde(rename = "n")]
    Nano,
    #[serde(rename = "u")]
    Micro,
    #[serde(rename = "m")]
    Milli,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "k")]
    Kilo,
    #[serde(rename = "Meg")]
    Mega,
    #[serde(rename = "G")]
    Giga,
    #[serde(rename = "T")]
    Tera,
}

impl Multiplier {
    pub const ALL: [Multiplier; 10] = [
        Self::Femto,
        Self::Pico,
        Self::Nano,
        Self::Micro,
        Self::Milli,
        Self::One,
        Self::Kilo,
        Self::Mega,
        Self::Giga,
        Self::Tera,
    ];

    pub fn factor(self) -> f64 {
        match self {
            Self::Femto => 1e-15,
            Self::Pico => 1e-12,
            Self::Nano => 1e-9,
            Self::Micro => 1e-6,
            Self::Milli => 1e-3,
            Self::One => 1.0,
            Self::Kilo => 1e3,
            Self::Mega => 1e6,
            Self::Giga => 1e9,
            Self::Tera => 1e12,
        }
    }

    /// SPICE suffix.
    pub fn suffix(self) -> &'static str {
        match self {
            Self::Femto => "f",
            Self::Pico => "p",
            Self::Nano => "n",
            Self::Micro => "u",
            Self::Milli => "m",
            Self::One => "",
            Self::Kilo => "k",
            Self::Mega => "Meg",
            Self::Giga => "G",
            Self::Tera => "T",
        }
    }

    /// Suffix as printed on a schematic label.
    pub fn label_suffix(self) -> &'static str {
        match self {
            Self::Micro => "µ",
            other => other.suffix(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpiceValue {
    pub mantissa: f64,
    pub multiplier: Multiplier,
}

impl SpiceValue {
    pub const fn new(mantissa: f64, multiplier: Multiplier) -> Self {
        Self { mantissa, multiplier }
    }

    pub fn base(&self) -> f64 {
        self.mantissa * self.multiplier.factor()
    }

    pub fn approx_eq(&self, other: &SpiceValue) -> bool {
        values_close(self.base(), other.base())
    }
}

impl fmt::Display for SpiceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.mantissa, self.multiplier.suffix())
    }
}

/// Relative tolerance used for every value comparison.
pub const VALUE_RTOL: f64 = 1e-9;

pub fn values_close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= VALUE_RTOL * a.abs().max(b.abs())
}

/// Split a leading decimal number (optionally signed, optionally with an
/// exponent) off `s`. Returns the number and the remaining text.
pub fn split_number(s: &str, allow_exponent: bool) -> Option<(f64, &str)> {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return None;
    }
    if allow_exponent && i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        let exp_start = j;
        while j < b.len() && b[j].is_ascii_digit() {
            j += 1;
        }
        if j > exp_start {
            i = j;
        }
    }
    let v: f64 = s[..i].parse().ok()?;
    v.is_finite().then_some((v, &s[i..]))
}

/// SPICE number: `<number>[scale][unit letters]`, scale case-insensitive
/// with `M` meaning milli and `MEG` mega.
pub fn parse_spice_value(s: &str) -> Option<SpiceValue> {
    let (mantissa, rest) = split_number(s, true)?;
    let lower = rest.to_ascii_lowercase();
    let (multiplier, tail) = if let Some(tail) = lower.strip_prefix("meg") {
        (Multiplier::Mega, tail)
    } else {
        let m = match lower.chars().next() {
            Some('f') => Multiplier::Femto,
            Some('p') => Multiplier::Pico,
            Some('n') => Multiplier::Nano,
            Some('u') => Multiplier::Micro,
            Some('m') => Multiplier::Milli,
            Some('k') => Multiplier::Kilo,
            Some('g') => Multiplier::Giga,
            Some('t') => Multiplier::Tera,
            _ => Multiplier::One,
        };
        if m == Multiplier::One {
            (m, lower.as_str())
        } else {
            (m, &lower[1..])
        }
    };
    // µ is not ASCII and survives lowercasing untouched
    let (multiplier, tail) = match (multiplier, tail.strip_prefix('µ')) {
        (Multiplier::One, Some(t)) => (Multiplier::Micro, t),
        _ => (multiplier, tail),
    };
    tail.chars().all(|c| c.is_alphabetic()).then_some(SpiceValue::new(mantissa, multiplier))
}
