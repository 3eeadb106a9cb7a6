//! One image through the pipeline, and the files written for it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context as _;
use serde::Serialize;

use schemnet_assist::HttpAssist;
use schemnet_core::assist::{Assist, Provenance};
use schemnet_core::config::Config;
use schemnet_core::detect::{ConcordanceReport, DetectionDoc};
use schemnet_core::flags::Flag;
use schemnet_core::pipeline::{self, Action, Input, Override, Run, RunOptions, Status};
use schemnet_core::raster::{load_image, GrayImage};
use schemnet_core::text::OcrDoc;

/// Exit status of a run that finished: clean or flagged.
pub const EXIT_CLEAN: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_FLAGGED: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Stage {
    /// Binarized image (PGM).
    Binary,
    /// Wiring left after masking symbols and text (PGM).
    Wiring,
    /// Wire nets as JSON plus a label image (PGM).
    Nets,
    Detections,
    Texts,
    /// Netlist as JSON.
    Netlist,
    All,
}

const EVERY_STAGE: [Stage; 6] = [Stage::Binary, Stage::Wiring, Stage::Nets, Stage::Detections, Stage::Texts, Stage::Netlist];

/// Everything a run reads, already parsed.
pub struct Inputs {
    pub image: GrayImage,
    pub detections: Option<DetectionDoc>,
    pub ocr: Option<OcrDoc>,
    pub overrides: Vec<Override>,
}

fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

pub fn parse_overrides(bytes: &[u8]) -> Result<Vec<Override>, String> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        format!("{path}: {}", e.into_inner())
    })
}

impl Inputs {
    pub fn load(image: &Path, detections: Option<&Path>, ocr: Option<&Path>, overrides: Option<&Path>) -> anyhow::Result<Self> {
        let image = load_image(&read(image)?).with_context(|| format!("decoding {}", image.display()))?;
        let detections = match detections {
            Some(p) => Some(DetectionDoc::from_json(&read(p)?).with_context(|| p.display().to_string())?),
            None => None,
        };
        let ocr = match ocr {
            Some(p) => Some(OcrDoc::from_json(&read(p)?).with_context(|| p.display().to_string())?),
            None => None,
        };
        let overrides = match overrides {
            Some(p) => parse_overrides(&read(p)?).map_err(anyhow::Error::msg).with_context(|| p.display().to_string())?,
            None => vec![],
        };
        Ok(Self { image, detections, ocr, overrides })
    }
}

pub fn assist_client(cfg: &Config) -> anyhow::Result<Option<HttpAssist>> {
    match &cfg.assist_url {
        Some(url) => Ok(Some(HttpAssist::from_env(url, Duration::from_secs(cfg.assist_timeout_secs))?)),
        None => Ok(None),
    }
}

/// Run the pipeline. Overrides that name only a flag are first checked
/// against a run without overrides, which tells which component they mean.
pub fn execute(inputs: &Inputs, cfg: &Config, force: bool, assist: Option<&dyn Assist>) -> anyhow::Result<Run> {
    let input = Input { image: &inputs.image, detections: inputs.detections.as_ref(), ocr: inputs.ocr.as_ref() };
    let unresolved = |o: &Override| o.component.is_none() && o.action != Action::Accept;
    let resolved;
    let overrides = if inputs.overrides.iter().any(unresolved) {
        let base = pipeline::run(&input, cfg, &RunOptions { force, overrides: &[], assist })?;
        resolved = inputs
            .overrides
            .iter()
            .enumerate()
            .map(|(i, o)| o.validate(&base).map_err(|e| anyhow::anyhow!("override {i}: {e}")))
            .collect::<anyhow::Result<Vec<_>>>()?;
        &resolved[..]
    } else {
        &inputs.overrides[..]
    };
    let opts = RunOptions { force, overrides, assist };
    pipeline::run(&input, cfg, &opts).map_err(anyhow::Error::from)
}

/// Contents of `<out>.flags.json`.
#[derive(Debug, Serialize)]
pub struct FlagsReport<'a> {
    pub status: Status,
    pub unresolved: usize,
    pub flags: &'a [Flag],
    pub warnings: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emit_error: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concordance: Option<&'a ConcordanceReport>,
    #[serde(skip_serializing_if = "<[Provenance]>::is_empty")]
    pub provenance: &'a [Provenance],
    pub components: usize,
    pub config: BTreeMap<String, String>,
}

pub fn flags_json(run: &Run, cfg: &Config) -> String {
    let report = FlagsReport {
        status: run.status(),
        unresolved: run.unresolved().count(),
        flags: &run.flags,
        warnings: &run.warnings,
        emit_error: run.emit_error.as_deref(),
        concordance: run.concordance.as_ref(),
        provenance: &run.provenance,
        components: run.components.len(),
        config: cfg.to_map(),
    };
    serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
}

pub fn exit_code(run: &Run) -> u8 {
    match run.status() {
        Status::Complete => EXIT_CLEAN,
        Status::Flagged => EXIT_FLAGGED,
    }
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn json<T: Serialize + ?Sized>(v: &T) -> Vec<u8> {
    (serde_json::to_string_pretty(v).expect("serializes") + "\n").into_bytes()
}

/// Write `<out>.cir` (when a netlist exists), `<out>.flags.json` and any
/// requested stage dumps. A stale `.cir` from an earlier run is removed.
pub fn write_outputs(out: &Path, run: &Run, cfg: &Config, dumps: &[Stage]) -> anyhow::Result<Vec<PathBuf>> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut files: Vec<(PathBuf, Vec<u8>)> = Vec::new();
    let cir = with_ext(out, "cir");
    match run.spice() {
        Some(s) => files.push((cir, s.into_bytes())),
        None => match std::fs::remove_file(&cir) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(e).with_context(|| format!("removing stale {}", cir.display())),
        },
    }
    files.push((with_ext(out, "flags.json"), flags_json(run, cfg).into_bytes()));
    let stages: Vec<Stage> = if dumps.contains(&Stage::All) { EVERY_STAGE.to_vec() } else { dumps.to_vec() };
    for stage in stages {
        match stage {
            Stage::Binary => files.push((with_ext(out, "binary.pgm"), run.binary.to_gray().to_pgm())),
            Stage::Wiring => files.push((with_ext(out, "wiring.pgm"), run.wiring.to_gray().to_pgm())),
            Stage::Nets => {
                files.push((with_ext(out, "nets.json"), json(&run.nodemap)));
                if let Some(l) = &run.labels {
                    files.push((with_ext(out, "nets.pgm"), l.to_gray().to_pgm()));
                }
            }
            Stage::Detections => {
                let doc = DetectionDoc::from_components(&run.components, run.width as u32, run.height as u32);
                files.push((with_ext(out, "detections.json"), doc.to_json().into_bytes()));
            }
            Stage::Texts => files.push((with_ext(out, "texts.json"), OcrDoc::from_texts(&run.texts).to_json().into_bytes())),
            Stage::Netlist => files.push((with_ext(out, "netlist.json"), json(&run.netlist))),
            Stage::All => unreachable!("expanded above"),
        }
    }
    let mut written = Vec::new();
    for (path, bytes) in files {
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

/// Default output prefix: the image path without its extension.
pub fn default_prefix(image: &Path) -> PathBuf {
    image.with_extension("")
}
