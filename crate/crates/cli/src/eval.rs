//! Score a corpus of cases, either from saved predictions or by running the
//! pipeline on each image.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context as _;

use schemnet_core::config::Config;
use schemnet_core::detect::{ingest_detections, DetectionDoc};
use schemnet_core::eval::{match_detections, netlist_scores, score_run, Report, Row};
use schemnet_core::netlist::{parse_netlist, Netlist};
use schemnet_core::pipeline::{self, Input, RunOptions};
use schemnet_core::synth::case::{load_case, Case, IMAGE};

/// Case directories under `corpus`, sorted by name.
pub fn case_dirs(corpus: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(corpus)
        .with_context(|| format!("reading {}", corpus.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(IMAGE).is_file())
        .collect();
    dirs.sort();
    Ok(dirs)
}

/// Score the pipeline's own output. Runs are forced so a flagged image is
/// still scored on the netlist it would have produced.
pub fn score_pipeline(case: &Case, cfg: &Config) -> anyhow::Result<Row> {
    let start = Instant::now();
    let input = Input { image: &case.image, detections: None, ocr: None };
    let run = pipeline::run(&input, cfg, &RunOptions { force: true, ..Default::default() })?;
    let mut row = score_run(&case.name, &case.gold_components, &case.golden, &run, cfg.iou_threshold)?;
    row.seconds = start.elapsed().as_secs_f64();
    Ok(row)
}

/// Score `<name>.cir`, `<name>.detections.json` and `<name>.flags.json` from
/// a predictions directory. A missing `.cir` scores as an empty netlist.
pub fn score_saved(case: &Case, dir: &Path, iou: f64) -> anyhow::Result<Row> {
    let path = |ext: &str| dir.join(format!("{}.{ext}", case.name));
    let netlist = match std::fs::read_to_string(path("cir")) {
        Ok(t) => parse_netlist(&t).with_context(|| path("cir").display().to_string())?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Netlist::new(vec![]),
        Err(e) => return Err(e).with_context(|| path("cir").display().to_string()),
    };
    let pred = match std::fs::read(path("detections.json")) {
        Ok(b) => {
            let doc = DetectionDoc::from_json(&b).with_context(|| path("detections.json").display().to_string())?;
            ingest_detections(&doc, None).with_context(|| path("detections.json").display().to_string())?.components
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => vec![],
        Err(e) => return Err(e).with_context(|| path("detections.json").display().to_string()),
    };
    let m = match_detections(&case.gold_components, &pred, iou);
    let mut row = Row::new(&case.name, &m, netlist_scores(&netlist, &case.golden)?);
    if let Ok(b) = std::fs::read(path("flags.json")) {
        let v: serde_json::Value = serde_json::from_slice(&b).with_context(|| path("flags.json").display().to_string())?;
        let flags = v["flags"].as_array().cloned().unwrap_or_default();
        row.flags = flags.len();
        let open: Vec<&serde_json::Value> = flags.iter().filter(|f| f["resolution"].is_null()).collect();
        row.unresolved_flags = open.len();
        let mut kinds: Vec<String> = open.iter().filter_map(|f| f["kind"].as_str().map(str::to_string)).collect();
        kinds.dedup();
        row.flag_kinds = kinds;
    }
    Ok(row)
}

pub fn evaluate(corpus: &Path, predictions: Option<&Path>, cfg: &Config) -> anyhow::Result<Report> {
    let mut rows = Vec::new();
    for dir in case_dirs(corpus)? {
        let case = load_case(&dir)?;
        let row = match predictions {
            Some(p) => score_saved(&case, p, cfg.iou_threshold)?,
            None => score_pipeline(&case, cfg)?,
        };
        log::info!("{}: structure {:.3} overall {:.3}", row.name, row.structure, row.overall);
        rows.push(row);
    }
    Report::build(rows, cfg.iou_threshold, cfg.to_map()).with_context(|| format!("no cases under {}", corpus.display()))
}
