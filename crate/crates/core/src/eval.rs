//! Scoring against golden data.
//!
//! Detection precision, recall and F1 pool TP/FP/FN over the whole corpus.
//! Netlist scores are computed per schematic and averaged without weights.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{Component, ComponentType};
use crate::netlist::{common_card_count, netlists_equivalent, CapacityError, Card, EquivOptions, Netlist};

/// Step budget of the common-subset search behind fractional scores.
pub const SEARCH_BUDGET: usize = 2_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("empty corpus: nothing to score")]
    EmptyCorpus,
    #[error(transparent)]
    Capacity(#[from] CapacityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub gold: usize,
    pub pred: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub matches: Vec<Match>,
    pub unmatched_gold: Vec<usize>,
    pub unmatched_pred: Vec<usize>,
}

impl Matching {
    pub fn tp(&self) -> usize {
        self.matches.len()
    }
    pub fn fp(&self) -> usize {
        self.unmatched_pred.len()
    }
    pub fn fn_(&self) -> usize {
        self.unmatched_gold.len()
    }
}

/// Greedy one-to-one matching: candidate pairs of equal type with
/// IoU >= `threshold`, taken by IoU descending, ties by (gold id, pred id).
pub fn match_detections(gold: &[Component], pred: &[Component], threshold: f64) -> Matching {
    let mut pairs: Vec<Match> = Vec::new();
    for g in gold {
        for p in pred.iter().filter(|p| p.ctype == g.ctype) {
            let iou = g.bbox.iou(&p.bbox);
            if iou >= threshold && iou > 0.0 {
                pairs.push(Match { gold: g.id, pred: p.id, iou });
            }
        }
    }
    pairs.sort_by(|a, b| b.iou.total_cmp(&a.iou).then(a.gold.cmp(&b.gold)).then(a.pred.cmp(&b.pred)));
    let mut out = Matching::default();
    let mut used_g = std::collections::BTreeSet::new();
    let mut used_p = std::collections::BTreeSet::new();
    for m in pairs {
        if !used_g.contains(&m.gold) && !used_p.contains(&m.pred) {
            used_g.insert(m.gold);
            used_p.insert(m.pred);
            out.matches.push(m);
        }
    }
    out.unmatched_gold = gold.iter().map(|g| g.id).filter(|id| !used_g.contains(id)).collect();
    out.unmatched_pred = pred.iter().map(|p| p.id).filter(|id| !used_p.contains(id)).collect();
    out
}

/// Harmonic mean; 0 when both inputs are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl DetectionMetrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if a + b == 0 { 0.0 } else { a as f64 / (a + b) as f64 };
        let (precision, recall) = (ratio(tp, fp), ratio(tp, fn_));
        Self { tp, fp, fn_, precision, recall, f1: f1(precision, recall) }
    }

    /// F1 recomputed from precision and recall rounded to two decimals, the
    /// way published tables usually state them.
    pub fn rounded_input_f1(&self) -> f64 {
        let r = |x: f64| (x * 100.0).round() / 100.0;
        f1(r(self.precision), r(self.recall))
    }
}

/// Pool matchings over a corpus.
pub fn detection_metrics(corpus: &[Matching]) -> Result<DetectionMetrics, EvalError> {
    if corpus.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let (tp, fp, fn_) = corpus.iter().fold((0, 0, 0), |(a, b, c), m| (a + m.tp(), b + m.fp(), c + m.fn_()));
    Ok(DetectionMetrics::from_counts(tp, fp, fn_))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetlistScores {
    pub text_accuracy: f64,
    pub structure: f64,
    pub overall: f64,
    /// Binary reading of overall: every card, value and designator right.
    pub overall_exact: bool,
    /// False when a fractional score came from a budget-limited search and is
    /// only a lower bound.
    pub search_complete: bool,
}

fn label_eq(a: &Card, b: &Card) -> bool {
    let values = match (&a.value, &b.value) {
        (Some(x), Some(y)) => x.approx_eq(y),
        (None, None) => true,
        _ => false,
    };
    a.ctype == b.ctype && a.designator.eq_ignore_ascii_case(&b.designator) && values && a.model == b.model
}

/// Per-schematic scores.
///
/// * text_accuracy: golden cards whose designator and value both appear
///   together on some generated card, each generated card used once, over
///   the golden card count.
/// * structure: 1 when equivalent ignoring values and designators, else the
///   largest common card subset over max(|golden|, |generated|).
/// * overall: the same with values, models and designators compared.
pub fn netlist_scores(generated: &Netlist, golden: &Netlist) -> Result<NetlistScores, EvalError> {
    let mut used = vec![false; generated.cards.len()];
    let mut hits = 0;
    for g in &golden.cards {
        if let Some(i) = (0..generated.cards.len()).find(|&i| !used[i] && label_eq(g, &generated.cards[i])) {
            used[i] = true;
            hits += 1;
        }
    }
    let text_accuracy = if golden.cards.is_empty() { 1.0 } else { hits as f64 / golden.cards.len() as f64 };

    let mut complete = true;
    let mut score = |opts: EquivOptions| -> Result<(f64, bool), EvalError> {
        if netlists_equivalent(golden, generated, opts)?.equivalent {
            return Ok((1.0, true));
        }
        let denom = golden.cards.len().max(generated.cards.len());
        let common = common_card_count(golden, generated, opts, SEARCH_BUDGET)?;
        complete &= common.exact;
        Ok((common.count as f64 / denom as f64, false))
    };
    let (structure, _) = score(EquivOptions::STRUCTURE)?;
    let (overall, overall_exact) = score(EquivOptions::EXACT)?;
    Ok(NetlistScores { text_accuracy, structure, overall, overall_exact, search_complete: complete })
}

/// One scored schematic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub gold_components: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub text_accuracy: f64,
    pub structure: f64,
    pub overall: f64,
    pub overall_exact: bool,
    pub search_complete: bool,
    pub flags: usize,
    pub unresolved_flags: usize,
    /// Flag kinds raised, for failure triage.
    pub flag_kinds: Vec<String>,
    pub seconds: f64,
}

impl Row {
    pub fn new(name: impl Into<String>, matching: &Matching, scores: NetlistScores) -> Self {
        Self {
            name: name.into(),
            gold_components: matching.tp() + matching.fn_(),
            tp: matching.tp(),
            fp: matching.fp(),
            fn_: matching.fn_(),
            text_accuracy: scores.text_accuracy,
            structure: scores.structure,
            overall: scores.overall,
            overall_exact: scores.overall_exact,
            search_complete: scores.search_complete,
            flags: 0,
            unresolved_flags: 0,
            flag_kinds: vec![],
            seconds: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schematics: usize,
    pub iou_threshold: f64,
    pub detection: DetectionMetrics,
    pub rounded_input_f1: f64,
    pub text_accuracy: f64,
    pub structure_accuracy: f64,
    pub overall_accuracy: f64,
    /// Share of schematics with a fully exact netlist.
    pub overall_exact_rate: f64,
    pub config: std::collections::BTreeMap<String, String>,
    pub per_schematic: Vec<Row>,
}

pub const METRIC_DEFINITIONS: &str = "\
precision/recall/f1   pooled TP/FP/FN over the corpus; greedy same-type IoU matching
rounded-input f1      f1 from precision and recall rounded to two decimals
text                  golden cards whose designator+value appear on a generated card / golden cards
structure             1 if equivalent ignoring values and designators, else common cards / max(golden, generated)
overall               1 if equivalent with values and designators, else common cards / max(golden, generated)
exact                 share of schematics with overall = 1
corpus scores         unweighted mean over schematics";

impl Report {
    pub fn build(rows: Vec<Row>, iou_threshold: f64, config: std::collections::BTreeMap<String, String>) -> Result<Self, EvalError> {
        if rows.is_empty() {
            return Err(EvalError::EmptyCorpus);
        }
        let (tp, fp, fn_) = rows.iter().fold((0, 0, 0), |(a, b, c), r| (a + r.tp, b + r.fp, c + r.fn_));
        let detection = DetectionMetrics::from_counts(tp, fp, fn_);
        let n = rows.len() as f64;
        let mean = |f: fn(&Row) -> f64| rows.iter().map(f).sum::<f64>() / n;
        Ok(Self {
            schematics: rows.len(),
            iou_threshold,
            detection,
            rounded_input_f1: detection.rounded_input_f1(),
            text_accuracy: mean(|r| r.text_accuracy),
            structure_accuracy: mean(|r| r.structure),
            overall_accuracy: mean(|r| r.overall),
            overall_exact_rate: mean(|r| f64::from(u8::from(r.overall_exact))),
            config,
            per_schematic: rows,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        for line in METRIC_DEFINITIONS.lines() {
            let _ = writeln!(s, "# {line}");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<16} {:>5} {:>4} {:>4} {:>4} {:>6} {:>6} {:>6} {:>5} {:>5}", "schematic", "gold", "tp", "fp", "fn", "text", "struct", "overall", "exact", "flags");
        for r in &self.per_schematic {
            let _ = writeln!(
                s,
                "{:<16} {:>5} {:>4} {:>4} {:>4} {:>6.3} {:>6.3} {:>7.3} {:>5} {:>5}{}",
                r.name,
                r.gold_components,
                r.tp,
                r.fp,
                r.fn_,
                r.text_accuracy,
                r.structure,
                r.overall,
                if r.overall_exact { "yes" } else { "no" },
                r.unresolved_flags,
                if r.search_complete { "" } else { "  (lower bound)" }
            );
        }
        let d = &self.detection;
        let _ = writeln!(s);
        let _ = writeln!(s, "schematics        {}", self.schematics);
        let _ = writeln!(s, "detection         P={:.4} R={:.4} F1={:.4} (TP={} FP={} FN={}, IoU>={})", d.precision, d.recall, d.f1, d.tp, d.fp, d.fn_, self.iou_threshold);
        let _ = writeln!(s, "rounded-input F1  {:.4}", self.rounded_input_f1);
        let _ = writeln!(s, "text accuracy     {:.4}", self.text_accuracy);
        let _ = writeln!(s, "structure         {:.4}", self.structure_accuracy);
        let _ = writeln!(s, "overall           {:.4}", self.overall_accuracy);
        let _ = writeln!(s, "overall (exact)   {:.4}", self.overall_exact_rate);
        s
    }
}

/// Score one pipeline run. A run that could not emit is scored on its
/// forced netlist, so pass a run made with `force`.
pub fn score_run(name: &str, gold: &[Component], golden: &Netlist, run: &crate::pipeline::Run, iou_threshold: f64) -> Result<Row, EvalError> {
    let m = match_detections(gold, &run.components, iou_threshold);
    let empty = Netlist::new(vec![]);
    let scores = netlist_scores(run.netlist.as_ref().unwrap_or(&empty), golden)?;
    let mut row = Row::new(name, &m, scores);
    row.flags = run.flags.len();
    row.unresolved_flags = run.unresolved().count();
    let mut kinds: Vec<String> = run.unresolved().map(|f| f.kind.as_str().to_string()).collect();
    kinds.dedup();
    row.flag_kinds = kinds;
    Ok(row)
}

/// Components of a golden schematic in the frame of a transformed image.
pub fn map_gold(gold: &[Component], f: impl Fn(crate::geom::BBox) -> crate::geom::BBox) -> Vec<Component> {
    gold.iter().map(|c| Component { bbox: f(c.bbox), terminals: vec![], ..c.clone() }).collect()
}

/// Count components by type, ground excluded.
pub fn card_types(n: &Netlist) -> std::collections::BTreeMap<ComponentType, usize> {
    let mut m = std::collections::BTreeMap::new();
    for c in &n.cards {
        *m.entry(c.ctype).or_insert(0) += 1;
    }
    m
}
