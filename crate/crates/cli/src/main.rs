use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context as _};
use clap::{Parser, Subcommand};

use schemnet_cli::convert::{self, Inputs, Stage};
use schemnet_cli::options::ConfigArgs;
use schemnet_cli::{batch, eval, serve, synth};
use schemnet_core::assist::Assist;
use schemnet_core::synth::Degrade;

#[derive(Parser)]
#[command(name = "schemnet", version, about = "Turn schematic images into SPICE netlists")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert one image. Exits 0 when complete, 2 when flagged, 1 on error.
    Convert {
        image: PathBuf,
        /// Detections in interchange JSON; skips template detection.
        #[arg(long)]
        detections: Option<PathBuf>,
        /// OCR boxes in interchange JSON; skips glyph recognition.
        #[arg(long)]
        ocr: Option<PathBuf>,
        /// Output prefix; defaults to the image path without extension.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Emit despite dangling terminals, naming them NC1, NC2, ...
        #[arg(long)]
        force: bool,
        /// JSON list of review overrides to apply.
        #[arg(long)]
        overrides: Option<PathBuf>,
        /// Also write an intermediate stage; repeatable.
        #[arg(long, value_enum)]
        dump_stage: Vec<Stage>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Convert every image in a directory.
    Batch {
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        force: bool,
        /// Use `detections.json`/`texts.json` found beside case images.
        #[arg(long)]
        use_annotations: bool,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score a corpus against its golden netlists.
    Eval {
        corpus: PathBuf,
        /// Score saved outputs (`<case>.cir` etc.) instead of running the pipeline.
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Where to write report.json and report.txt.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Generate synthetic cases with golden annotations.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, conflicts_with = "seeds")]
        seed: Option<u64>,
        /// Inclusive range such as 0-199.
        #[arg(long)]
        seeds: Option<String>,
        /// Component count; defaults to 2 + seed % 19.
        #[arg(long)]
        n: Option<usize>,
        /// Degrade each image with the per-seed corpus setting.
        #[arg(long)]
        degraded: bool,
        #[arg(long, conflicts_with = "degraded")]
        scale: Option<u32>,
        #[arg(long, conflicts_with = "degraded")]
        gaps: Option<usize>,
        #[arg(long, conflicts_with = "degraded")]
        flip: bool,
        #[arg(long, conflicts_with = "degraded", allow_hyphen_values = true)]
        brightness: Option<i32>,
        /// Cut a piece out of the first source's lead.
        #[arg(long)]
        cut_lead: bool,
    },
    /// Serve jobs in a directory to the review UI.
    Serve {
        dir: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Convert { image, detections, ocr, out, force, overrides, dump_stage, config } => {
            let cfg = config.load()?;
            let inputs = Inputs::load(&image, detections.as_deref(), ocr.as_deref(), overrides.as_deref())?;
            let assist = convert::assist_client(&cfg)?;
            let run = convert::execute(&inputs, &cfg, force, assist.as_ref().map(|a| a as &dyn Assist))?;
            let out = out.unwrap_or_else(|| convert::default_prefix(&image));
            for p in convert::write_outputs(&out, &run, &cfg, &dump_stage)? {
                log::info!("wrote {}", p.display());
            }
            for f in run.unresolved() {
                eprintln!("flag {}: {}", f.id, f.detail);
            }
            if let Some(e) = &run.emit_error {
                eprintln!("no netlist: {e}");
            }
            Ok(convert::exit_code(&run))
        }
        Command::Batch { dir, out, jobs, force, use_annotations, config } => {
            let cfg = config.load()?;
            let items = batch::discover(&dir, use_annotations)?;
            if items.is_empty() {
                bail!("no images in {}", dir.display());
            }
            let assist = convert::assist_client(&cfg)?;
            let summary = batch::run_batch(&items, &out, &cfg, force, jobs, assist.as_ref().map(|a| a as _))?;
            print!("{}", summary.to_table());
            Ok(summary.exit_code())
        }
        Command::Eval { corpus, predictions, out, config } => {
            let cfg = config.load()?;
            let report = eval::evaluate(&corpus, predictions.as_deref(), &cfg)?;
            let table = report.to_table();
            print!("{table}");
            if let Some(out) = out {
                std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
                std::fs::write(out.join("report.json"), report.to_json()).context("writing report.json")?;
                std::fs::write(out.join("report.txt"), table).context("writing report.txt")?;
            }
            Ok(0)
        }
        Command::Synth { out, seed, seeds, n, degraded, scale, gaps, flip, brightness, cut_lead } => {
            let range = match (seed, seeds) {
                (Some(s), _) => s..=s,
                (None, Some(r)) => synth::parse_seeds(&r)?,
                (None, None) => 0..=0,
            };
            let plan = if degraded {
                synth::Plan::Corpus
            } else {
                let d = Degrade::default();
                synth::Plan::Fixed(Degrade {
                    scale: scale.unwrap_or(d.scale),
                    gaps: gaps.unwrap_or(d.gaps),
                    flip,
                    brightness: brightness.unwrap_or(d.brightness),
                    cut_lead,
                })
            };
            let plan = match plan {
                synth::Plan::Corpus if cut_lead => bail!("--cut-lead cannot be combined with --degraded"),
                p => p,
            };
            if let synth::Plan::Fixed(d) = &plan {
                if !matches!(d.scale, 1 | 2) {
                    bail!("--scale must be 1 or 2");
                }
            }
            let count = synth::write_corpus(&out, range, n, plan)?;
            eprintln!("wrote {count} cases to {}", out.display());
            Ok(0)
        }
        Command::Serve { dir, port, bind, config } => {
            let cfg = config.load()?;
            let state = serve::AppState::load(&dir, cfg)?;
            if state.job_ids().is_empty() {
                log::warn!("no jobs under {}", dir.display());
            }
            serve::serve_forever(state, SocketAddr::new(bind, port))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(convert::EXIT_ERROR)
        }
    }
}
