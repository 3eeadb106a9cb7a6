//! Write synthetic cases to disk.

use std::ops::RangeInclusive;
use std::path::Path;

use anyhow::{bail, Context as _};

use schemnet_core::synth::case::write_case;
use schemnet_core::synth::{parts_for_seed, synthesize, Degrade};

/// `7` or `0-199`.
pub fn parse_seeds(s: &str) -> anyhow::Result<RangeInclusive<u64>> {
    let (a, b) = s.split_once('-').unwrap_or((s, s));
    let a: u64 = a.trim().parse().with_context(|| format!("bad seed {a:?}"))?;
    let b: u64 = b.trim().parse().with_context(|| format!("bad seed {b:?}"))?;
    if a > b {
        bail!("empty seed range {s}");
    }
    Ok(a..=b)
}

/// Which degradation a seed gets.
#[derive(Debug, Clone, Copy)]
pub enum Plan {
    /// The per-seed corpus setting: every knob on.
    Corpus,
    Fixed(Degrade),
}

impl Plan {
    pub fn for_seed(&self, seed: u64) -> Degrade {
        match self {
            Plan::Corpus => Degrade::corpus(seed),
            Plan::Fixed(d) => *d,
        }
    }
}

/// Write one case directory per seed, named by the seed. Returns how many.
pub fn write_corpus(out: &Path, seeds: RangeInclusive<u64>, n: Option<usize>, plan: Plan) -> anyhow::Result<usize> {
    let mut count = 0;
    for seed in seeds {
        let g = synthesize(seed, n.unwrap_or_else(|| parts_for_seed(seed))).with_context(|| format!("seed {seed}"))?;
        let dir = out.join(seed.to_string());
        write_case(&dir, &g, &plan.for_seed(seed)).with_context(|| format!("writing {}", dir.display()))?;
        count += 1;
    }
    Ok(count)
}
