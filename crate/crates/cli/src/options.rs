//! Config flags shared by every subcommand that runs the pipeline.

use std::path::PathBuf;

use anyhow::Context as _;
use clap::Args;

use schemnet_core::config::Config;

#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// Config file of `key = value` lines.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Set any config key; repeatable, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Pixel connectivity for wire labeling: 4 or 8.
    #[arg(long)]
    pub connectivity: Option<String>,
    /// Morphological closing radius that heals small wire gaps.
    #[arg(long)]
    pub close_radius: Option<String>,
    /// Growth of component boxes before they are cut out of the wiring.
    #[arg(long)]
    pub mask_dilation: Option<String>,
    /// Smallest wire region kept, in pixels.
    #[arg(long)]
    pub min_area: Option<String>,
    /// Distance around a component box searched for terminal contacts.
    #[arg(long)]
    pub band: Option<String>,
    /// Max label distance as a multiple of the component's longer side.
    #[arg(long)]
    pub bind_factor: Option<String>,
    #[arg(long)]
    pub iou_threshold: Option<String>,
    #[arg(long)]
    pub template_threshold: Option<String>,
    /// Symbol scale, or `auto`.
    #[arg(long)]
    pub scale: Option<String>,
    /// Second opinion for ingested detections: template or none.
    #[arg(long)]
    pub cross_check: Option<String>,
    /// Base URL of the assist service; key from ASSIST_API_KEY.
    #[arg(long)]
    pub assist_url: Option<String>,
    /// Assist request timeout in seconds.
    #[arg(long)]
    pub assist_timeout: Option<String>,
}

impl ConfigArgs {
    fn flag_pairs(&self) -> Vec<(&'static str, &str)> {
        let named = [
            ("connectivity", &self.connectivity),
            ("close_radius", &self.close_radius),
            ("mask_dilation", &self.mask_dilation),
            ("min_area", &self.min_area),
            ("band", &self.band),
            ("bind_factor", &self.bind_factor),
            ("iou_threshold", &self.iou_threshold),
            ("template_threshold", &self.template_threshold),
            ("scale", &self.scale),
            ("cross_check", &self.cross_check),
            ("assist_url", &self.assist_url),
            ("assist_timeout", &self.assist_timeout),
        ];
        named.into_iter().filter_map(|(k, v)| v.as_deref().map(|v| (k, v))).collect()
    }

    /// Defaults, then the file, then named flags, then `--set`.
    pub fn load(&self) -> anyhow::Result<Config> {
        let mut cfg = Config::default();
        if let Some(p) = &self.config {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            cfg.apply_text(&text).with_context(|| format!("config {}", p.display()))?;
        }
        for (k, v) in self.flag_pairs() {
            cfg.set(k, v).with_context(|| format!("--{}", k.replace('_', "-")))?;
        }
        for s in &self.set {
            let (k, v) = s.split_once('=').with_context(|| format!("--set {s:?}: expected KEY=VALUE"))?;
            cfg.set(k.trim(), v).with_context(|| format!("--set {s:?}"))?;
        }
        Ok(cfg)
    }
}
