//! Image-only degradations for robustness runs. Golden files never change.

use serde::{Deserialize, Serialize};

use super::prng::SplitMix64;
use super::render::{GoldenSchematic, Wire};
use crate::detect::ComponentType;
use crate::geom::BBox;
use crate::raster::{BinaryImage, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Degrade {
    /// Nearest-neighbour upscale factor, 1 or 2.
    pub scale: u32,
    /// Number of wires that get a 1 px notch cut across them.
    pub gaps: usize,
    pub flip: bool,
    /// Added to every pixel, clamped to 0..=255.
    pub brightness: i32,
    /// Remove a 12 px piece of the first source's upper lead wire.
    #[serde(default)]
    pub cut_lead: bool,
}

impl Default for Degrade {
    fn default() -> Self {
        Self { scale: 1, gaps: 0, flip: false, brightness: 0, cut_lead: false }
    }
}

impl Degrade {
    /// Configuration of the degraded corpus for `seed`: every knob on,
    /// brightness sign alternating with seed parity.
    pub fn corpus(seed: u64) -> Self {
        Self { scale: 2, gaps: 3, flip: true, brightness: if seed.is_multiple_of(2) { 32 } else { -32 }, cut_lead: false }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::default()
    }

    /// Where a golden box of an undegraded image of width `width` ends up.
    pub fn map_bbox(&self, b: BBox, width: i32) -> BBox {
        let s = self.scale.max(1) as i32;
        let mut out = BBox::new(b.x * s, b.y * s, b.w * s, b.h * s);
        if self.flip {
            out.x = width * s - out.x - out.w;
        }
        out
    }
}

const NOTCH_MIN_LEN: i32 = 32;
/// Notches stay this far from wire ends and junctions.
const NOTCH_CLEARANCE: i32 = 12;

/// Pick notch sites as (wire index, position along the wire's axis).
fn notch_sites(wires: &[Wire], count: usize, seed: u64) -> Vec<(usize, i32)> {
    let mut rng = SplitMix64::new(seed ^ 0x6A95_0000_0000_0001);
    let mut candidates: Vec<usize> = (0..wires.len()).filter(|&i| wires[i].len() >= NOTCH_MIN_LEN).collect();
    rng.shuffle(&mut candidates);
    let mut out = Vec::new();
    for i in candidates {
        if out.len() == count {
            break;
        }
        let w = wires[i];
        let (lo, hi) = if w.is_horizontal() { (w.a.x.min(w.b.x), w.a.x.max(w.b.x)) } else { (w.a.y.min(w.b.y), w.a.y.max(w.b.y)) };
        // positions where another wire's end meets this one
        let joints: Vec<i32> = wires
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .flat_map(|(_, u)| [u.a, u.b])
            .filter(|p| w.rect().contains(*p))
            .map(|p| if w.is_horizontal() { p.x } else { p.y })
            .collect();
        let ok: Vec<i32> = (lo + NOTCH_CLEARANCE..=hi - NOTCH_CLEARANCE)
            .filter(|t| joints.iter().all(|j| (t - j).abs() >= NOTCH_CLEARANCE))
            .collect();
        if !ok.is_empty() {
            out.push((i, ok[rng.index(ok.len())]));
        }
    }
    out
}

fn cut_source_lead(g: &GoldenSchematic, img: &mut BinaryImage) {
    let Some(src) = g.components.iter().filter(|c| c.ctype == ComponentType::VoltageSource).min_by_key(|c| (c.bbox.x, c.bbox.y)) else {
        return;
    };
    let top = src.terminals.iter().min_by_key(|t| t.xy.y).expect("sources have terminals").xy;
    let Some(w) = g.wires.iter().find(|w| !w.is_horizontal() && (w.a == top || w.b == top)) else {
        return;
    };
    let mid = (w.a.y + w.b.y) / 2;
    img.clear_box(&BBox::new(top.x - 1, mid - 6, 3, 12));
}

pub fn degrade(g: &GoldenSchematic, d: &Degrade) -> GrayImage {
    let mut ink = g.ink();
    if d.cut_lead {
        cut_source_lead(g, &mut ink);
    }
    let s = d.scale.max(1) as usize;
    let (w1, h1) = (ink.width(), ink.height());
    let (w, h) = (w1 * s, h1 * s);
    let mut bits = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            bits[y * w + x] = ink.get(x / s, y / s);
        }
    }
    let si = s as i32;
    for (i, t) in notch_sites(&g.wires, d.gaps, g.seed) {
        let wire = g.wires[i];
        let r = wire.rect();
        // one output pixel thick, across the full scaled wire width
        let cut = if wire.is_horizontal() {
            BBox::new(t * si + si / 2, r.y * si, 1, r.h * si)
        } else {
            BBox::new(r.x * si, t * si + si / 2, r.w * si, 1)
        };
        for y in cut.y..cut.bottom() {
            for x in cut.x..cut.right() {
                bits[y as usize * w + x as usize] = false;
            }
        }
    }
    if d.flip {
        for row in bits.chunks_mut(w) {
            row.reverse();
        }
    }
    let data = bits
        .into_iter()
        .map(|ink| {
            let base: i32 = if ink { 0 } else { 255 };
            (base + d.brightness).clamp(0, 255) as u8
        })
        .collect();
    GrayImage::from_raw(w, h, data).expect("dimensions match")
}
