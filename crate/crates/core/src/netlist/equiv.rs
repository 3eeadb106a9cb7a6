//! Structural equivalence of two netlists up to node renaming.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{values_close, Card, Netlist, GROUND};
use crate::detect::ComponentType;

/// Node-count limit of the bijection search.
pub const MAX_NODES: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("netlist has {nodes} nodes; equivalence search is limited to {MAX_NODES}")]
pub struct CapacityError {
    pub nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EquivOptions {
    /// Compare values and model names; `false` checks structure only.
    pub compare_values: bool,
    /// Also require equal designators; off for structural comparison.
    pub compare_designators: bool,
}

impl EquivOptions {
    pub const STRUCTURE: EquivOptions = EquivOptions { compare_values: false, compare_designators: false };
    pub const EXACT: EquivOptions = EquivOptions { compare_values: true, compare_designators: true };
}

impl Default for EquivOptions {
    fn default() -> Self {
        Self { compare_values: true, compare_designators: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceResult {
    pub equivalent: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_mapping: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mismatch_reason: Option<String>,
}

impl EquivalenceResult {
    fn no(reason: impl Into<String>) -> Self {
        Self { equivalent: false, node_mapping: None, mismatch_reason: Some(reason.into()) }
    }
}

/// A card reduced to what equivalence looks at, with nodes as indices.
#[derive(Debug, Clone)]
struct Item {
    ctype: ComponentType,
    nodes: Vec<usize>,
    value: Option<f64>,
    model: Option<String>,
    designator: Option<String>,
}

impl Item {
    fn key_cmp(&self, other: &Item) -> Ordering {
        (self.ctype, &self.nodes, &self.model, &self.designator)
            .cmp(&(other.ctype, &other.nodes, &other.model, &other.designator))
            .then_with(|| match (self.value, other.value) {
                (Some(a), Some(b)) => a.total_cmp(&b),
                (a, b) => a.is_some().cmp(&b.is_some()),
            })
    }

    fn same(&self, other: &Item) -> bool {
        self.ctype == other.ctype
            && self.nodes == other.nodes
            && self.model == other.model
            && self.designator == other.designator
            && match (self.value, other.value) {
                (Some(a), Some(b)) => values_close(a, b),
                (a, b) => a.is_none() && b.is_none(),
            }
    }

    fn canonical(mut self) -> Item {
        if self.ctype.is_symmetric() {
            self.nodes.sort_unstable();
        }
        self
    }
}

struct Side {
    names: Vec<String>,
    items: Vec<Item>,
    /// Cards incident to each node.
    incident: Vec<Vec<usize>>,
    signature: Vec<Vec<(ComponentType, usize)>>,
    ground: Option<usize>,
}

impl Side {
    fn new(n: &Netlist, opts: EquivOptions) -> Side {
        let names = n.nodes();
        let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let items: Vec<Item> = n.cards.iter().map(|c: &Card| Item {
            ctype: c.ctype,
            nodes: c.nodes.iter().map(|s| index[s.as_str()]).collect(),
            value: if opts.compare_values { c.value.map(|v| v.base()) } else { None },
            model: if opts.compare_values { c.model.clone() } else { None },
            designator: opts.compare_designators.then(|| c.designator.to_ascii_uppercase()),
        })
        .collect();
        let mut incident = vec![Vec::new(); names.len()];
        let mut signature = vec![Vec::new(); names.len()];
        for (ci, it) in items.iter().enumerate() {
            for (pos, &v) in it.nodes.iter().enumerate() {
                if !incident[v].contains(&ci) {
                    incident[v].push(ci);
                }
                let p = if it.ctype.is_symmetric() { 0 } else { pos };
                signature[v].push((it.ctype, p));
            }
        }
        for s in &mut signature {
            s.sort_unstable();
        }
        let ground = index.get(GROUND).copied();
        Side { names, items, incident, signature, ground }
    }
}

/// Sort two item lists and compare them as multisets.
fn multiset_eq(a: &mut [Item], b: &mut [Item]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    a.sort_by(Item::key_cmp);
    b.sort_by(Item::key_cmp);
    a.iter().zip(b.iter()).all(|(x, y)| x.same(y))
}

/// Largest matching between two small item lists (greedy over sorted keys is
/// exact here because `same` is an equivalence on the sort key).
fn multiset_overlap(a: &mut [Item], b: &mut [Item]) -> usize {
    a.sort_by(Item::key_cmp);
    b.sort_by(Item::key_cmp);
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        if a[i].same(&b[j]) {
            n += 1;
            i += 1;
            j += 1;
        } else if a[i].key_cmp(&b[j]) == Ordering::Less {
            i += 1;
        } else {
            j += 1;
        }
    }
    n
}

/// Visit A's nodes so each one touches as many already-placed nodes as possible.
fn search_order(a: &Side) -> Vec<usize> {
    let n = a.names.len();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    if let Some(g) = a.ground {
        placed[g] = true;
        order.push(g);
    }
    while order.len() < n {
        let best = (0..n).filter(|&v| !placed[v]).max_by_key(|&v| {
            let linked = a.incident[v]
                .iter()
                .flat_map(|&c| a.items[c].nodes.iter())
                .filter(|&&u| u != v && placed[u])
                .count();
            (linked, a.signature[v].len(), std::cmp::Reverse(v))
        });
        let v = best.expect("unplaced node exists");
        placed[v] = true;
        order.push(v);
    }
    order
}

fn map_item(it: &Item, map: &[Option<usize>]) -> Item {
    Item {
        ctype: it.ctype,
        nodes: it.nodes.iter().map(|&v| map[v].expect("complete card")).collect(),
        value: it.value,
        model: it.model.clone(),
        designator: it.designator.clone(),
    }
    .canonical()
}

struct Search<'a> {
    a: &'a Side,
    b: &'a Side,
    order: Vec<usize>,
    map: Vec<Option<usize>>,
    used: Vec<bool>,
}

impl Search<'_> {
    /// Cards of A that become complete when `v` is assigned, mapped into B.
    fn newly_complete_a(&self, v: usize) -> Vec<Item> {
        self.a.incident[v]
            .iter()
            .map(|&c| &self.a.items[c])
            .filter(|it| it.nodes.iter().all(|&u| self.map[u].is_some()))
            .map(|it| map_item(it, &self.map))
            .collect()
    }

    fn newly_complete_b(&self, w: usize) -> Vec<Item> {
        self.b.incident[w]
            .iter()
            .map(|&c| &self.b.items[c])
            .filter(|it| it.nodes.iter().all(|&u| self.used[u]))
            .map(|it| it.clone().canonical())
            .collect()
    }

    fn assign(&mut self, v: usize, w: usize) -> bool {
        self.map[v] = Some(w);
        self.used[w] = true;
        let mut na = self.newly_complete_a(v);
        let mut nb = self.newly_complete_b(w);
        multiset_eq(&mut na, &mut nb)
    }

    fn unassign(&mut self, v: usize, w: usize) {
        self.map[v] = None;
        self.used[w] = false;
    }

    fn run(&mut self, depth: usize) -> bool {
        if depth == self.order.len() {
            return true;
        }
        let v = self.order[depth];
        let candidates: Vec<usize> = if Some(v) == self.a.ground {
            vec![self.b.ground.expect("ground presence checked")]
        } else {
            (0..self.b.names.len())
                .filter(|&w| !self.used[w] && Some(w) != self.b.ground && self.b.signature[w] == self.a.signature[v])
                .collect()
        };
        for w in candidates {
            if self.assign(v, w) && self.run(depth + 1) {
                return true;
            }
            self.unassign(v, w);
        }
        false
    }
}

fn type_counts(items: &[Item]) -> BTreeMap<ComponentType, usize> {
    let mut m = BTreeMap::new();
    for it in items {
        *m.entry(it.ctype).or_insert(0) += 1;
    }
    m
}

pub fn netlists_equivalent(a: &Netlist, b: &Netlist, opts: EquivOptions) -> Result<EquivalenceResult, CapacityError> {
    let sa = Side::new(a, opts);
    let sb = Side::new(b, opts);
    for s in [&sa, &sb] {
        if s.names.len() > MAX_NODES {
            return Err(CapacityError { nodes: s.names.len() });
        }
    }
    if sa.items.len() != sb.items.len() {
        return Ok(EquivalenceResult::no(format!("card count {} vs {}", sa.items.len(), sb.items.len())));
    }
    if type_counts(&sa.items) != type_counts(&sb.items) {
        return Ok(EquivalenceResult::no("component type counts differ"));
    }
    if sa.names.len() != sb.names.len() {
        return Ok(EquivalenceResult::no(format!("node count {} vs {}", sa.names.len(), sb.names.len())));
    }
    if sa.ground.is_some() != sb.ground.is_some() {
        return Ok(EquivalenceResult::no("ground node present in only one netlist"));
    }
    let mut sig_a: Vec<_> = sa.signature.clone();
    let mut sig_b: Vec<_> = sb.signature.clone();
    sig_a.sort();
    sig_b.sort();
    if sig_a != sig_b {
        return Ok(EquivalenceResult::no("node incidence signatures differ"));
    }
    if let (Some(ga), Some(gb)) = (sa.ground, sb.ground) {
        if sa.signature[ga] != sb.signature[gb] {
            return Ok(EquivalenceResult::no("ground incidence differs"));
        }
    }
    let n = sa.names.len();
    let mut s = Search { a: &sa, b: &sb, order: search_order(&sa), map: vec![None; n], used: vec![false; n] };
    if s.run(0) {
        let mapping = (0..n).map(|v| (sa.names[v].clone(), sb.names[s.map[v].expect("complete")].clone())).collect();
        Ok(EquivalenceResult { equivalent: true, node_mapping: Some(mapping), mismatch_reason: None })
    } else {
        Ok(EquivalenceResult::no("no node bijection makes the card sets equal"))
    }
}

/// Result of the common-subset search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommonCards {
    pub count: usize,
    /// False when the step budget ran out before the search finished.
    pub exact: bool,
}

struct Mcs<'a> {
    a: &'a Side,
    b: &'a Side,
    order: Vec<usize>,
    map: Vec<Option<usize>>,
    /// A node decided as "maps to nothing".
    dropped: Vec<bool>,
    used: Vec<bool>,
    best: usize,
    steps: usize,
    budget: usize,
}

impl Mcs<'_> {
    fn decided(&self, u: usize) -> bool {
        self.map[u].is_some() || self.dropped[u]
    }

    /// Cards of A still able to match: no node dropped.
    fn open_a(&self) -> usize {
        self.a
            .items
            .iter()
            .filter(|it| !it.nodes.iter().any(|&u| self.dropped[u]) && !it.nodes.iter().all(|&u| self.map[u].is_some()))
            .count()
    }

    fn gain(&self, v: usize, w: usize) -> usize {
        let mut na: Vec<Item> = self.a.incident[v]
            .iter()
            .map(|&c| &self.a.items[c])
            .filter(|it| it.nodes.iter().all(|&u| self.map[u].is_some()))
            .map(|it| map_item(it, &self.map))
            .collect();
        let mut nb: Vec<Item> = self.b.incident[w]
            .iter()
            .map(|&c| &self.b.items[c])
            .filter(|it| it.nodes.iter().all(|&u| self.used[u]))
            .map(|it| it.clone().canonical())
            .collect();
        multiset_overlap(&mut na, &mut nb)
    }

    fn run(&mut self, depth: usize, score: usize) {
        self.steps += 1;
        if score > self.best {
            self.best = score;
        }
        if depth == self.order.len() || self.steps > self.budget {
            return;
        }
        if score + self.open_a().min(self.b.items.len() - score) <= self.best {
            return;
        }
        let v = self.order[depth];
        let mut candidates: Vec<usize> = if Some(v) == self.a.ground {
            self.b.ground.into_iter().collect()
        } else {
            (0..self.b.names.len()).filter(|&w| !self.used[w] && Some(w) != self.b.ground).collect()
        };
        // most similar incidence first
        candidates.sort_by_key(|&w| {
            let common = self.a.signature[v].iter().filter(|s| self.b.signature[w].contains(s)).count();
            (std::cmp::Reverse(common), w)
        });
        for w in candidates {
            self.map[v] = Some(w);
            self.used[w] = true;
            let g = self.gain(v, w);
            self.run(depth + 1, score + g);
            self.map[v] = None;
            self.used[w] = false;
            if self.steps > self.budget {
                return;
            }
        }
        self.dropped[v] = true;
        self.run(depth + 1, score);
        self.dropped[v] = false;
        debug_assert!(!self.decided(v));
    }
}

/// Size of the largest card subset of `a` reproduced in `b` under one node
/// bijection. Branch and bound with a step budget.
pub fn common_card_count(a: &Netlist, b: &Netlist, opts: EquivOptions, budget: usize) -> Result<CommonCards, CapacityError> {
    let sa = Side::new(a, opts);
    let sb = Side::new(b, opts);
    for s in [&sa, &sb] {
        if s.names.len() > MAX_NODES {
            return Err(CapacityError { nodes: s.names.len() });
        }
    }
    let n = sa.names.len();
    let mut m = Mcs {
        a: &sa,
        b: &sb,
        order: search_order(&sa),
        map: vec![None; n],
        dropped: vec![false; n],
        used: vec![false; sb.names.len()],
        best: 0,
        steps: 0,
        budget,
    };
    m.run(0, 0);
    Ok(CommonCards { count: m.best, exact: m.steps <= m.budget })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::netlist::{Multiplier, SpiceValue};

    pub(crate) fn r(d: &str, a: &str, b: &str, v: f64) -> Card {
        Card {
            designator: d.into(),
            ctype: ComponentType::Resistor,
            nodes: vec![a.into(), b.into()],
            value: Some(SpiceValue::new(v, Multiplier::One)),
            model: None,
        }
    }

    /// Factorial oracle: every bijection with ground fixed.
    pub(crate) fn brute_equivalent(a: &Netlist, b: &Netlist, opts: EquivOptions) -> bool {
        let sa = Side::new(a, opts);
        let sb = Side::new(b, opts);
        if sa.names.len() != sb.names.len() || sa.items.len() != sb.items.len() || sa.ground.is_some() != sb.ground.is_some() {
            return false;
        }
        let n = sa.names.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut found = false;
        permute(&mut perm, 0, &mut |p| {
            if let (Some(ga), Some(gb)) = (sa.ground, sb.ground) {
                if p[ga] != gb {
                    return;
                }
            }
            let map: Vec<Option<usize>> = p.iter().map(|&w| Some(w)).collect();
            let mut ma: Vec<Item> = sa.items.iter().map(|it| map_item(it, &map)).collect();
            let mut mb: Vec<Item> = sb.items.iter().map(|it| it.clone().canonical()).collect();
            if multiset_eq(&mut ma, &mut mb) {
                found = true;
            }
        });
        found
    }

    /// Factorial oracle for the common-subset size (partial injections).
    pub(crate) fn brute_common(a: &Netlist, b: &Netlist, opts: EquivOptions) -> usize {
        let sa = Side::new(a, opts);
        let sb = Side::new(b, opts);
        let mut best = 0;
        let mut map = vec![None; sa.names.len()];
        let mut used = vec![false; sb.names.len()];
        fn rec(v: usize, sa: &Side, sb: &Side, map: &mut Vec<Option<usize>>, used: &mut Vec<bool>, best: &mut usize) {
            if v == sa.names.len() {
                let mut ma: Vec<Item> = sa
                    .items
                    .iter()
                    .filter(|it| it.nodes.iter().all(|&u| map[u].is_some()))
                    .map(|it| map_item(it, map))
                    .collect();
                let mut mb: Vec<Item> = sb.items.iter().map(|it| it.clone().canonical()).collect();
                *best = (*best).max(multiset_overlap(&mut ma, &mut mb));
                return;
            }
            let forced = (Some(v) == sa.ground).then_some(sb.ground).flatten();
            for w in 0..sb.names.len() {
                if used[w] || (Some(v) == sa.ground) != (Some(w) == sb.ground) {
                    continue;
                }
                if forced.is_some_and(|g| g != w) {
                    continue;
                }
                map[v] = Some(w);
                used[w] = true;
                rec(v + 1, sa, sb, map, used, best);
                map[v] = None;
                used[w] = false;
            }
            rec(v + 1, sa, sb, map, used, best);
        }
        rec(0, &sa, &sb, &mut map, &mut used, &mut best);
        best
    }

    fn permute(p: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
        if k == p.len() {
            f(p);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            permute(p, k + 1, f);
            p.swap(k, i);
        }
    }

    fn divider() -> Netlist {
        Netlist::new(vec![r("R1", "N1", "N2", 10.0), r("R2", "N2", "0", 20.0), r("R3", "N1", "0", 30.0)])
    }

    #[test]
    fn relabel_is_equivalent() {
        let a = divider();
        let b = Netlist::new(vec![r("R7", "B", "A", 10.0), r("R8", "A", "0", 20.0), r("R9", "B", "0", 30.0)]);
        let res = netlists_equivalent(&a, &b, EquivOptions::default()).unwrap();
        assert!(res.equivalent, "{res:?}");
        let m = res.node_mapping.unwrap();
        assert_eq!(m["N1"], "B");
        assert_eq!(m["0"], "0");
    }

    #[test]
    fn missing_card_and_value_change() {
        let a = divider();
        let mut b = divider();
        b.cards.pop();
        assert!(!netlists_equivalent(&a, &b, EquivOptions::default()).unwrap().equivalent);
        let mut c = divider();
        c.cards[0].value = Some(SpiceValue::new(11.0, Multiplier::One));
        assert!(!netlists_equivalent(&a, &c, EquivOptions::default()).unwrap().equivalent);
        assert!(netlists_equivalent(&a, &c, EquivOptions::STRUCTURE).unwrap().equivalent);
        let mut d = divider();
        d.cards[0].value = Some(SpiceValue::new(0.01, Multiplier::Kilo));
        assert!(netlists_equivalent(&a, &d, EquivOptions::default()).unwrap().equivalent);
    }

    #[test]
    fn ground_is_pinned() {
        let a = Netlist::new(vec![r("R1", "N1", "0", 1.0), r("R2", "N1", "N2", 1.0)]);
        let b = Netlist::new(vec![r("R1", "N1", "N2", 1.0), r("R2", "N1", "0", 1.0)]);
        assert!(netlists_equivalent(&a, &b, EquivOptions::default()).unwrap().equivalent);
        let c = Netlist::new(vec![r("R1", "0", "N1", 1.0), r("R2", "N1", "N2", 1.0)]);
        assert!(netlists_equivalent(&a, &c, EquivOptions::default()).unwrap().equivalent);
        let d = Netlist::new(vec![r("R1", "N1", "N3", 1.0), r("R2", "N1", "N2", 1.0)]);
        assert!(!netlists_equivalent(&a, &d, EquivOptions::default()).unwrap().equivalent);
    }

    #[test]
    fn bridges_with_equal_degrees_agree_with_brute_force() {
        // two 5-resistor graphs on 4 nodes with degree sequence (3,3,2,2)
        let a = Netlist::new(vec![
            r("R1", "A", "B", 1.0),
            r("R2", "A", "C", 1.0),
            r("R3", "B", "D", 1.0),
            r("R4", "C", "D", 1.0),
            r("R5", "A", "B", 1.0),
        ]);
        let b = Netlist::new(vec![
            r("R1", "A", "B", 1.0),
            r("R2", "A", "C", 1.0),
            r("R3", "B", "D", 1.0),
            r("R4", "C", "D", 1.0),
            r("R5", "A", "D", 1.0),
        ]);
        let opts = EquivOptions::default();
        assert_eq!(netlists_equivalent(&a, &b, opts).unwrap().equivalent, brute_equivalent(&a, &b, opts));
        assert!(!brute_equivalent(&a, &b, opts));
    }

    #[test]
    fn capacity_error_above_limit() {
        let cards = (0..65).map(|i| r(&format!("R{i}"), &format!("N{i}"), &format!("N{}", i + 1), 1.0)).collect();
        let big = Netlist::new(cards);
        assert_eq!(netlists_equivalent(&big, &big, EquivOptions::default()).unwrap_err().nodes, 66);
    }

    #[test]
    fn common_subset_one_missing_of_ten() {
        let mut cards = Vec::new();
        for i in 0..10 {
            let a = format!("N{}", i % 5);
            let b = if i % 3 == 0 { "0".to_string() } else { format!("N{}", (i + 1) % 5) };
            cards.push(r(&format!("R{i}"), &a, &b, f64::from(i + 1)));
        }
        let gold = Netlist::new(cards.clone());
        let mut gen = cards;
        gen.remove(4);
        let gen = Netlist::new(gen);
        let opts = EquivOptions::default();
        let got = common_card_count(&gold, &gen, opts, 1_000_000).unwrap();
        assert!(got.exact);
        assert_eq!(got.count, 9);
        assert_eq!(brute_common(&gold, &gen, opts), 9);
    }
}
