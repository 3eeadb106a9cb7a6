//! Random circuit topologies.
//!
//! Circuits grow as a chain of nodes starting from a source-to-ground loop.
//! Each step hangs parts off the newest node: a shunt to ground, a series
//! part (optionally with parallel parts) to a new node, or a transistor
//! stage whose control terminal sits on the node and whose output starts a
//! new one. Every node ends with degree at least two.

use serde::Serialize;

use super::prng::SplitMix64;
use crate::detect::ComponentType;
use crate::netlist::{Multiplier, SpiceValue};
use crate::text::label::format_value;

pub const MIN_PARTS: usize = 2;
pub const MAX_PARTS: usize = 20;

/// Component count used for corpus seed `seed`.
pub fn parts_for_seed(seed: u64) -> usize {
    MIN_PARTS + (seed % (MAX_PARTS - MIN_PARTS + 1) as u64) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Part {
    pub ctype: ComponentType,
    pub designator: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<SpiceValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// Draw with the first terminal away from the node the step starts at.
    pub reversed: bool,
}

impl Part {
    /// Text of the value label drawn under the designator.
    pub fn value_label(&self) -> String {
        match (&self.value, &self.model) {
            (Some(v), _) => format_value(v, unit(self.ctype)),
            (None, Some(m)) => m.clone(),
            (None, None) => String::new(),
        }
    }
}

fn unit(t: ComponentType) -> &'static str {
    match t {
        ComponentType::Resistor => "Ω",
        ComponentType::Capacitor => "F",
        ComponentType::Inductor => "H",
        ComponentType::VoltageSource => "V",
        ComponentType::CurrentSource => "A",
        _ => "",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    /// Part between the current node and ground.
    Shunt { part: usize },
    /// Part from the current node to a new node, plus parts in parallel with it.
    Series { part: usize, loops: Vec<usize> },
    /// Transistor: control on the current node, output to a new node, common to ground.
    Stage { part: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Circuit {
    pub seed: u64,
    pub parts: Vec<Part>,
    pub steps: Vec<Step>,
}

impl Circuit {
    /// Non-ground node count.
    pub fn node_count(&self) -> usize {
        1 + self.steps.iter().filter(|s| !matches!(s, Step::Shunt { .. })).count()
    }
}

const SHUNT_TYPES: [(ComponentType, u64); 6] = [
    (ComponentType::Resistor, 4),
    (ComponentType::Capacitor, 3),
    (ComponentType::Inductor, 2),
    (ComponentType::Diode, 2),
    (ComponentType::VoltageSource, 1),
    (ComponentType::CurrentSource, 2),
];
const SERIES_TYPES: [(ComponentType, u64); 4] = [
    (ComponentType::Resistor, 4),
    (ComponentType::Capacitor, 3),
    (ComponentType::Inductor, 2),
    (ComponentType::Diode, 2),
];
const STAGE_TYPES: [ComponentType; 4] = [ComponentType::Npn, ComponentType::Pnp, ComponentType::Nmos, ComponentType::Pmos];
const MAX_STAGES: usize = 4;

fn weighted<T: Copy>(rng: &mut SplitMix64, items: &[(T, u64)]) -> T {
    let total: u64 = items.iter().map(|i| i.1).sum();
    let mut r = rng.below(total);
    for &(item, w) in items {
        if r < w {
            return item;
        }
        r -= w;
    }
    unreachable!("weights sum to total")
}

fn sample_value(rng: &mut SplitMix64, t: ComponentType) -> (Option<SpiceValue>, Option<String>) {
    use ComponentType::*;
    use Multiplier::*;
    let num = |rng: &mut SplitMix64, mantissas: &[f64], mults: &[Multiplier]| {
        let m = *rng.pick(mantissas);
        let k = *rng.pick(mults);
        Some(SpiceValue::new(m, k))
    };
    let model = |rng: &mut SplitMix64, names: &[&str]| Some(rng.pick(names).to_string());
    match t {
        Resistor => (num(rng, &[1.0, 1.5, 2.2, 3.3, 4.7, 6.8, 10.0, 22.0, 47.0, 100.0, 220.0, 470.0], &[One, Kilo, Mega]), None),
        Capacitor => (num(rng, &[1.0, 2.2, 4.7, 10.0, 22.0, 47.0, 100.0, 220.0, 470.0], &[Pico, Nano, Micro]), None),
        Inductor => (num(rng, &[1.0, 2.2, 4.7, 10.0, 22.0, 47.0, 100.0], &[Micro, Milli]), None),
        VoltageSource => (num(rng, &[1.0, 1.5, 3.3, 5.0, 9.0, 12.0, 15.0], &[One]), None),
        CurrentSource => (num(rng, &[1.0, 2.0, 5.0, 10.0, 100.0], &[Micro, Milli]), None),
        Diode => (None, model(rng, &["DDEF", "D1N4148"])),
        Npn => (None, model(rng, &["QNPN", "Q2N3904"])),
        Pnp => (None, model(rng, &["QPNP", "Q2N3906"])),
        Nmos => (None, model(rng, &["MNMOS"])),
        Pmos => (None, model(rng, &["MPMOS"])),
        Ground => (None, None),
    }
}

struct Builder {
    rng: SplitMix64,
    parts: Vec<Part>,
    counters: [u32; 8],
}

impl Builder {
    fn part(&mut self, ctype: ComponentType) -> usize {
        let prefix = ctype.prefix().expect("card-emitting type");
        let slot = crate::text::label::DESIGNATOR_PREFIXES.iter().position(|&p| p == prefix).expect("known prefix");
        self.counters[slot] += 1;
        let (value, model) = sample_value(&mut self.rng, ctype);
        let reversed = self.rng.chance(1, 2);
        self.parts.push(Part { ctype, designator: format!("{prefix}{}", self.counters[slot]), value, model, reversed });
        self.parts.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("component count {0} outside {MIN_PARTS}..={MAX_PARTS}")]
pub struct CountError(pub usize);

pub fn generate_circuit(seed: u64, n: usize) -> Result<Circuit, CountError> {
    if !(MIN_PARTS..=MAX_PARTS).contains(&n) {
        return Err(CountError(n));
    }
    let mut b = Builder { rng: SplitMix64::new(seed), parts: Vec::new(), counters: [0; 8] };
    let v1 = b.part(ComponentType::VoltageSource);
    let mut steps = vec![Step::Shunt { part: v1 }];
    let mut remaining = n - 1;
    let mut stages = 0;
    while remaining > 0 {
        // a single part left can only close the newest node to ground
        let kind = if remaining == 1 {
            0
        } else {
            let stage_w = if stages < MAX_STAGES { 2 } else { 0 };
            weighted(&mut b.rng, &[(0u8, 3), (1, 4), (2, stage_w)])
        };
        match kind {
            0 => {
                let t = weighted(&mut b.rng, &SHUNT_TYPES);
                steps.push(Step::Shunt { part: b.part(t) });
                remaining -= 1;
            }
            1 => {
                let t = weighted(&mut b.rng, &SERIES_TYPES);
                let part = b.part(t);
                let want = weighted(&mut b.rng, &[(0usize, 6), (1, 3), (2, 1)]);
                let count = want.min(remaining - 2);
                let loops = (0..count)
                    .map(|_| {
                        let t = weighted(&mut b.rng, &SERIES_TYPES);
                        b.part(t)
                    })
                    .collect();
                steps.push(Step::Series { part, loops });
                remaining -= 1 + count;
            }
            _ => {
                let t = *b.rng.pick(&STAGE_TYPES);
                steps.push(Step::Stage { part: b.part(t) });
                stages += 1;
                remaining -= 1;
            }
        }
    }
    Ok(Circuit { seed, parts: b.parts, steps })
}
