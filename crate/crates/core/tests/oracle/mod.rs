//! Slow, obviously-correct reference implementations used as test oracles.
//! Shared with the acceptance harness through a `#[path]` include.
#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};

use schemnet_core::detect::ComponentType;
use schemnet_core::netlist::{Card, Multiplier, Netlist, SpiceValue};
use schemnet_core::synth::prng::SplitMix64;

/// Breadth-first flood fill. Labels start at 1 and follow the row-major
/// order of each region's first pixel; background is 0.
pub fn flood_labels(bits: &[bool], w: usize, h: usize, eight: bool) -> Vec<u32> {
    let mut out = vec![0u32; w * h];
    let mut next = 0;
    for start in 0..w * h {
        if !bits[start] || out[start] != 0 {
            continue;
        }
        next += 1;
        out[start] = next;
        let mut q = VecDeque::from([start]);
        while let Some(p) = q.pop_front() {
            let (x, y) = ((p % w) as i64, (p / w) as i64);
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    if (dx, dy) == (0, 0) || (!eight && dx != 0 && dy != 0) {
                        continue;
                    }
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let n = ny as usize * w + nx as usize;
                    if bits[n] && out[n] == 0 {
                        out[n] = next;
                        q.push_back(n);
                    }
                }
            }
        }
    }
    out
}

pub fn random_bits(rng: &mut SplitMix64, w: usize, h: usize, density_pct: u64) -> Vec<bool> {
    (0..w * h).map(|_| rng.below(100) < density_pct).collect()
}

fn card_key(c: &Card, map: &BTreeMap<&str, &str>, values: bool) -> String {
    let mut nodes: Vec<&str> = c.nodes.iter().map(|n| map[n.as_str()]).collect();
    if c.ctype.is_symmetric() {
        nodes.sort_unstable();
    }
    let value = match (&c.value, values) {
        (Some(v), true) => format!("{:.6e}", v.base()),
        _ => String::new(),
    };
    let model = if values { c.model.clone().unwrap_or_default() } else { String::new() };
    format!("{:?}|{}|{}|{}", c.ctype, nodes.join(","), value, model)
}

fn node_list(n: &Netlist) -> Vec<&str> {
    let mut v: Vec<&str> = n.cards.iter().flat_map(|c| c.nodes.iter().map(String::as_str)).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Try every bijection of `a`'s nodes onto `b`'s with ground pinned and
/// compare the card multisets.
pub fn brute_equivalent(a: &Netlist, b: &Netlist, values: bool) -> bool {
    let (na, nb) = (node_list(a), node_list(b));
    if na.len() != nb.len() || a.cards.len() != b.cards.len() || na.contains(&"0") != nb.contains(&"0") {
        return false;
    }
    let identity: BTreeMap<&str, &str> = nb.iter().map(|&n| (n, n)).collect();
    let mut want: Vec<String> = b.cards.iter().map(|c| card_key(c, &identity, values)).collect();
    want.sort();
    let free_a: Vec<&str> = na.iter().copied().filter(|&n| n != "0").collect();
    let mut free_b: Vec<&str> = nb.iter().copied().filter(|&n| n != "0").collect();
    let mut found = false;
    permutations(&mut free_b, 0, &mut |perm| {
        if found {
            return;
        }
        let mut map: BTreeMap<&str, &str> = free_a.iter().copied().zip(perm.iter().copied()).collect();
        map.insert("0", "0");
        let mut got: Vec<String> = a.cards.iter().map(|c| card_key(c, &map, values)).collect();
        got.sort();
        found = got == want;
    });
    found
}

fn permutations<'a>(v: &mut Vec<&'a str>, k: usize, f: &mut dyn FnMut(&[&'a str])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permutations(v, k + 1, f);
        v.swap(k, i);
    }
}

const TYPES: [ComponentType; 6] = [
    ComponentType::Resistor,
    ComponentType::Capacitor,
    ComponentType::Inductor,
    ComponentType::Diode,
    ComponentType::VoltageSource,
    ComponentType::Npn,
];

fn node_name(i: usize) -> String {
    if i == 0 {
        "0".into()
    } else {
        format!("N{i}")
    }
}

/// A random connected-ish netlist on at most `max_nodes` nodes (ground included).
pub fn random_netlist(rng: &mut SplitMix64, max_nodes: usize) -> Netlist {
    let nodes = 2 + rng.index(max_nodes - 1);
    let cards = 1 + rng.index(2 * nodes);
    let mut counters: BTreeMap<char, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for _ in 0..cards {
        let t = *rng.pick(&TYPES);
        let k = t.terminal_count();
        let ns: Vec<String> = (0..k).map(|_| node_name(rng.index(nodes))).collect();
        let p = t.prefix().expect("card types have a prefix");
        let idx = counters.entry(p).or_insert(0);
        *idx += 1;
        let (value, model) = if t.uses_model() {
            (None, Some(if rng.chance(1, 2) { "MA".to_string() } else { "MB".to_string() }))
        } else {
            (Some(SpiceValue::new(1.0 + rng.index(3) as f64, Multiplier::Kilo)), None)
        };
        out.push(Card { designator: format!("{p}{idx}"), ctype: t, nodes: ns, value, model });
    }
    Netlist::new(out)
}

/// Rename every non-ground node and shuffle the cards and designators.
pub fn relabel(n: &Netlist, rng: &mut SplitMix64) -> Netlist {
    let names = node_list(n);
    let mut fresh: Vec<String> = (0..names.len()).map(|i| format!("X{i}")).collect();
    rng.shuffle(&mut fresh);
    let map: BTreeMap<&str, String> = names.iter().zip(fresh).map(|(&a, b)| (a, if a == "0" { "0".into() } else { b })).collect();
    let mut cards: Vec<Card> = n
        .cards
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.nodes = c.nodes.iter().map(|x| map[x.as_str()].clone()).collect();
            if c.ctype.is_symmetric() && rng.chance(1, 2) {
                c.nodes.reverse();
            }
            c
        })
        .collect();
    rng.shuffle(&mut cards);
    Netlist::new(cards)
}

/// One local change: a value, a type, or one terminal moved.
pub fn mutate(n: &Netlist, rng: &mut SplitMix64) -> Netlist {
    let mut out = n.clone();
    let i = rng.index(out.cards.len());
    let names = node_list(n);
    let c = &mut out.cards[i];
    match rng.index(3) {
        0 if c.value.is_some() => c.value = Some(SpiceValue::new(c.value.unwrap().mantissa + 10.0, Multiplier::Kilo)),
        1 if c.ctype == ComponentType::Resistor => c.ctype = ComponentType::Capacitor,
        _ => {
            let t = rng.index(c.nodes.len());
            let cur = c.nodes[t].clone();
            let others: Vec<&str> = names.iter().copied().filter(|&x| x != cur).collect();
            c.nodes[t] = if others.is_empty() || rng.chance(1, 4) { "NEW".into() } else { rng.pick(&others).to_string() };
        }
    }
    out
}
