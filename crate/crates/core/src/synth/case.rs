//! On-disk corpus cases: one directory per seed.
//!
//! Golden annotations always describe the undegraded drawing; `meta.json`
//! records the degradation so scorers can map boxes into the image frame.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Degrade, GoldenSchematic};
use crate::detect::{ingest_detections, Component, DetectionDoc};
use crate::netlist::{parse_netlist, Netlist};
use crate::raster::{load_image, GrayImage};

pub const IMAGE: &str = "image.pgm";
pub const DETECTIONS: &str = "detections.json";
pub const TEXTS: &str = "texts.json";
pub const GOLDEN: &str = "golden.cir";
pub const META: &str = "meta.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub seed: u64,
    pub n: usize,
    pub degrade: Degrade,
}

/// File name and contents of every file in a case directory.
pub fn case_files(g: &GoldenSchematic, d: &Degrade) -> Vec<(&'static str, Vec<u8>)> {
    let image = super::degrade(g, d);
    let meta = Meta { seed: g.seed, n: g.circuit.parts.len(), degrade: *d };
    vec![
        (IMAGE, image.to_pgm()),
        (DETECTIONS, g.detection_doc().to_json().into_bytes()),
        (TEXTS, g.ocr_doc().to_json().into_bytes()),
        (GOLDEN, g.netlist.to_spice().into_bytes()),
        (META, (serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n").into_bytes()),
    ]
}

pub fn write_case(dir: &Path, g: &GoldenSchematic, d: &Degrade) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in case_files(g, d) {
        fs::write(dir.join(name), bytes)?;
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

/// A case read back for scoring.
#[derive(Debug, Clone)]
pub struct Case {
    pub name: String,
    pub image: GrayImage,
    pub golden: Netlist,
    /// Golden components mapped into the image frame.
    pub gold_components: Vec<Component>,
    pub meta: Option<Meta>,
}

fn read(dir: &Path, name: &str) -> Result<Vec<u8>, CaseError> {
    let p = dir.join(name);
    fs::read(&p).map_err(|source| CaseError::Io { path: p.display().to_string(), source })
}

fn invalid(dir: &Path, name: &str, message: impl ToString) -> CaseError {
    CaseError::Invalid { path: dir.join(name).display().to_string(), message: message.to_string() }
}

/// Load a case directory. `meta.json` is optional; without it the image is
/// taken to be undegraded.
pub fn load_case(dir: &Path) -> Result<Case, CaseError> {
    let name = dir.file_name().map_or_else(|| dir.display().to_string(), |s| s.to_string_lossy().into_owned());
    let meta = match fs::read(dir.join(META)) {
        Ok(b) => Some(serde_json::from_slice::<Meta>(&b).map_err(|e| invalid(dir, META, e))?),
        Err(e) if e.kind() == io::ErrorKind::NotFound => None,
        Err(source) => return Err(CaseError::Io { path: dir.join(META).display().to_string(), source }),
    };
    let image = load_image(&read(dir, IMAGE)?).map_err(|e| invalid(dir, IMAGE, e))?;
    let text = String::from_utf8(read(dir, GOLDEN)?).map_err(|e| invalid(dir, GOLDEN, e))?;
    let golden = parse_netlist(&text).map_err(|e| invalid(dir, GOLDEN, e))?;
    let doc = DetectionDoc::from_json(&read(dir, DETECTIONS)?).map_err(|e| invalid(dir, DETECTIONS, e))?;
    let ing = ingest_detections(&doc, None).map_err(|e| invalid(dir, DETECTIONS, e))?;
    let d = meta.map(|m| m.degrade).unwrap_or_default();
    let width = doc.image.width as i32;
    let gold_components = ing.components.into_iter().map(|c| Component { bbox: d.map_bbox(c.bbox, width), terminals: vec![], ..c }).collect();
    Ok(Case { name, image, golden, gold_components, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::synthesize;

    #[test]
    fn written_case_loads_back() {
        let dir = std::env::temp_dir().join(format!("schemnet-case-{}", std::process::id()));
        let g = synthesize(2, 5).unwrap();
        let d = Degrade::corpus(2);
        write_case(&dir, &g, &d).unwrap();
        let c = load_case(&dir).unwrap();
        assert_eq!(c.meta, Some(Meta { seed: 2, n: 5, degrade: d }));
        assert_eq!(c.image.width(), 2 * g.width());
        assert_eq!(c.golden, g.netlist);
        assert_eq!(c.gold_components.len(), g.components.len());
        assert_eq!(c.gold_components[0].bbox, d.map_bbox(g.components[0].bbox, g.width() as i32));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn files_are_deterministic() {
        let g = synthesize(3, 10).unwrap();
        assert_eq!(case_files(&g, &Degrade::default()), case_files(&synthesize(3, 10).unwrap(), &Degrade::default()));
    }
}
