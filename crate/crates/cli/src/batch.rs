//! Convert every image in a directory with a small worker pool.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context as _};
use serde::Serialize;

use schemnet_core::assist::Assist;
use schemnet_core::config::Config;
use schemnet_core::pipeline::Status;

use crate::convert::{self, Inputs, Stage, EXIT_CLEAN, EXIT_ERROR, EXIT_FLAGGED};

/// One image found in the input directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Item {
    pub name: String,
    pub image: PathBuf,
    pub detections: Option<PathBuf>,
    pub ocr: Option<PathBuf>,
}

fn is_image(p: &Path) -> bool {
    matches!(p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(), Some("png" | "pgm"))
}

/// Top-level `.png`/`.pgm` files, plus subdirectories holding `image.pgm`
/// or `image.png`. With `annotations`, a subdirectory's `detections.json`
/// and `texts.json` are used when present.
pub fn discover(dir: &Path, annotations: bool) -> anyhow::Result<Vec<Item>> {
    let mut items = Vec::new();
    let entries = std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))?;
    for e in entries {
        let p = e?.path();
        if p.is_file() && is_image(&p) {
            let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            items.push(Item { name, image: p, detections: None, ocr: None });
        } else if p.is_dir() {
            let Some(image) = ["image.pgm", "image.png"].iter().map(|f| p.join(f)).find(|f| f.is_file()) else { continue };
            let extra = |f: &str| Some(p.join(f)).filter(|f| annotations && f.is_file());
            let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
            items.push(Item { name, image, detections: extra("detections.json"), ocr: extra("texts.json") });
        }
    }
    items.sort_by(|a, b| a.name.cmp(&b.name));
    if let Some(w) = items.windows(2).find(|w| w[0].name == w[1].name) {
        bail!("two inputs are both named {:?}", w[0].name);
    }
    Ok(items)
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<Status>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub components: usize,
    pub flags: usize,
    pub unresolved: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub images: usize,
    pub complete: usize,
    pub flagged: usize,
    pub errors: usize,
    pub results: Vec<Outcome>,
}

impl Summary {
    pub fn exit_code(&self) -> u8 {
        if self.errors > 0 {
            EXIT_ERROR
        } else if self.flagged > 0 {
            EXIT_FLAGGED
        } else {
            EXIT_CLEAN
        }
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<24} {:<9} {:>5} {:>6}", "image", "status", "parts", "flags");
        for r in &self.results {
            let status = match (&r.status, &r.error) {
                (Some(Status::Complete), _) => "complete",
                (Some(Status::Flagged), _) => "flagged",
                _ => "error",
            };
            let _ = write!(s, "{:<24} {:<9} {:>5} {:>6}", r.name, status, r.components, r.unresolved);
            if let Some(e) = &r.error {
                let _ = write!(s, "  {e}");
            }
            s.push('\n');
        }
        let _ = writeln!(s, "{} images: {} complete, {} flagged, {} errors", self.images, self.complete, self.flagged, self.errors);
        s
    }
}

fn convert_one(item: &Item, out: &Path, cfg: &Config, force: bool, assist: Option<&dyn Assist>) -> anyhow::Result<Outcome> {
    let inputs = Inputs::load(&item.image, item.detections.as_deref(), item.ocr.as_deref(), None)?;
    let run = convert::execute(&inputs, cfg, force, assist)?;
    convert::write_outputs(&out.join(&item.name), &run, cfg, &[Stage::Detections])?;
    Ok(Outcome {
        name: item.name.clone(),
        status: Some(run.status()),
        error: None,
        components: run.components.len(),
        flags: run.flags.len(),
        unresolved: run.unresolved().count(),
    })
}

/// Convert `items` on `jobs` threads. Results come back sorted by name, so
/// the summary does not depend on scheduling.
pub fn run_batch(items: &[Item], out: &Path, cfg: &Config, force: bool, jobs: usize, assist: Option<&(dyn Assist + Sync)>) -> anyhow::Result<Summary> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(items.len()));
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                let o = convert_one(item, out, cfg, force, assist.map(|a| a as &dyn Assist)).unwrap_or_else(|e| {
                    log::error!("{}: {e:#}", item.name);
                    Outcome { name: item.name.clone(), status: None, error: Some(format!("{e:#}")), components: 0, flags: 0, unresolved: 0 }
                });
                results.lock().expect("no worker panicked").push(o);
            });
        }
    });
    let mut results = results.into_inner().expect("no worker panicked");
    results.sort_by(|a, b| a.name.cmp(&b.name));
    let count = |s: Status| results.iter().filter(|r| r.status == Some(s)).count();
    let summary = Summary {
        images: results.len(),
        complete: count(Status::Complete),
        flagged: count(Status::Flagged),
        errors: results.iter().filter(|r| r.error.is_some()).count(),
        results,
    };
    let json = serde_json::to_string_pretty(&summary)? + "\n";
    std::fs::write(out.join("summary.json"), json).context("writing summary.json")?;
    Ok(summary)
}
