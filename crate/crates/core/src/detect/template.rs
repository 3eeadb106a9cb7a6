//! Built-in detector: exact template matching against the symbol library.

use crate::detect::{Component, Terminal};
use crate::geom::{BBox, Point};
use crate::raster::BinaryImage;
use crate::synth::library::{SymbolLibrary, Variant, LEAD_WIDTH};
use crate::synth::prng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateParams {
    /// Symbol scale; `None` estimates it from the stroke width.
    pub scale: Option<u32>,
    /// Minimum fraction of template ink that must be foreground.
    pub threshold: f64,
}

impl Default for TemplateParams {
    fn default() -> Self {
        Self { scale: None, threshold: 0.97 }
    }
}

/// Estimate the drawing scale from the width of long vertical strokes.
pub fn estimate_scale(img: &BinaryImage) -> u32 {
    const MIN_RUN: usize = 32;
    let (w, h) = (img.width(), img.height());
    let mut hist = [0usize; 64];
    for x in 0..w {
        let mut y = 0;
        while y < h {
            if !img.get(x, y) {
                y += 1;
                continue;
            }
            let start = y;
            while y < h && img.get(x, y) {
                y += 1;
            }
            if y - start >= MIN_RUN {
                let mid = (start + y) / 2;
                let mut l = x;
                while l > 0 && img.get(l - 1, mid) {
                    l -= 1;
                }
                let mut r = x;
                while r + 1 < w && img.get(r + 1, mid) {
                    r += 1;
                }
                let width = r - l + 1;
                if width < hist.len() {
                    hist[width] += 1;
                }
            }
        }
    }
    let mode = (1..hist.len()).max_by_key(|&i| (hist[i], std::cmp::Reverse(i))).filter(|&i| hist[i] > 0);
    match mode {
        Some(m) => ((m as f64 / LEAD_WIDTH as f64).round() as u32).max(1),
        None => 1,
    }
}

struct Candidate {
    variant: usize,
    origin: Point,
    score: f64,
    bbox: BBox,
}

/// Fraction of template ink that is foreground with the template placed at
/// `origin`, or `None` once more than `allowed` pixels miss.
fn match_at(img: &BinaryImage, v: &Variant, order: &[usize], origin: Point, allowed: usize) -> Option<usize> {
    let mut misses = 0;
    for &k in order {
        let (dx, dy) = v.ink[k];
        if !img.get((origin.x + dx) as usize, (origin.y + dy) as usize) {
            misses += 1;
            if misses > allowed {
                return None;
            }
        }
    }
    Some(misses)
}

pub fn detect_template(img: &BinaryImage, params: &TemplateParams) -> Vec<Component> {
    let scale = params.scale.unwrap_or_else(|| estimate_scale(img));
    let lib = SymbolLibrary::new(scale);
    detect_with_library(img, &lib, params.threshold)
}

pub fn detect_with_library(img: &BinaryImage, lib: &SymbolLibrary, threshold: f64) -> Vec<Component> {
    let (w, h) = (img.width() as i32, img.height() as i32);
    let ink: Vec<Point> = (0..h)
        .flat_map(|y| (0..w).map(move |x| Point::new(x, y)))
        .filter(|p| img.get(p.x as usize, p.y as usize))
        .collect();
    let mut candidates = Vec::new();
    let mut rng = SplitMix64::new(0x5EED);
    for (vi, v) in lib.variants().iter().enumerate() {
        let n = v.ink.len();
        let allowed = ((1.0 - threshold) * n as f64).floor() as usize;
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        let anchor = v.ink[0];
        for p in &ink {
            let origin = Point::new(p.x - anchor.0, p.y - anchor.1);
            if origin.x < 0 || origin.y < 0 || origin.x + v.width > w || origin.y + v.height > h {
                continue;
            }
            if let Some(misses) = match_at(img, v, &order, origin, allowed) {
                candidates.push(Candidate {
                    variant: vi,
                    origin,
                    score: 1.0 - misses as f64 / n as f64,
                    bbox: BBox::new(origin.x, origin.y, v.width, v.height),
                });
            }
        }
    }
    // the anchor may itself be a miss under damage; such placements are
    // simply not proposed, which only costs recall on damaged symbols
    candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then((a.bbox.y, a.bbox.x, a.variant).cmp(&(b.bbox.y, b.bbox.x, b.variant)))
    });
    let mut kept: Vec<Candidate> = Vec::new();
    for c in candidates {
        if kept.iter().all(|k| !k.bbox.intersects(&c.bbox)) {
            kept.push(c);
        }
    }
    let mut out: Vec<Component> = kept
        .into_iter()
        .map(|c| {
            let v = &lib.variants()[c.variant];
            Component {
                id: 0,
                ctype: v.ctype,
                bbox: c.bbox,
                confidence: c.score,
                terminals: v
                    .terminals
                    .iter()
                    .map(|&(role, p)| Terminal { role, xy: Point::new(c.origin.x + p.x, c.origin.y + p.y) })
                    .collect(),
            }
        })
        .collect();
    super::canonicalize(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::ComponentType;
    use crate::synth::library::Orientation;

    fn stamp(img: &mut BinaryImage, v: &Variant, ox: i32, oy: i32) {
        for &(x, y) in &v.ink {
            img.set((ox + x) as usize, (oy + y) as usize, true);
        }
    }

    #[test]
    fn finds_every_symbol_in_every_pose() {
        for scale in [1u32, 2] {
            let lib = SymbolLibrary::new(scale);
            for v in lib.variants() {
                let mut img = BinaryImage::new((v.width + 20) as usize, (v.height + 20) as usize);
                stamp(&mut img, v, 10, 7);
                let found = detect_with_library(&img, &lib, 0.97);
                assert_eq!(found.len(), 1, "{} {:?} x{scale}", v.ctype, v.orientation);
                assert_eq!(found[0].ctype, v.ctype);
                assert_eq!(found[0].bbox, BBox::new(10, 7, v.width, v.height));
                assert_eq!(found[0].confidence, 1.0);
            }
        }
    }

    #[test]
    fn blank_image_has_no_detections() {
        let img = BinaryImage::new(100, 100);
        assert!(detect_template(&img, &TemplateParams::default()).is_empty());
    }

    #[test]
    fn scale_estimate_from_wires() {
        for s in [1usize, 2, 3] {
            let mut img = BinaryImage::new(200, 200);
            for y in 10..150 {
                for x in 0..3 * s {
                    img.set(50 + x, y, true);
                    img.set(120 + x, y, true);
                }
            }
            assert_eq!(estimate_scale(&img), s as u32);
        }
        assert_eq!(estimate_scale(&BinaryImage::new(10, 10)), 1);
    }

    #[test]
    fn adjacent_symbols_are_separated() {
        let lib = SymbolLibrary::new(1);
        let r = lib.variant(ComponentType::Resistor, Orientation::R0);
        let c = lib.variant(ComponentType::Capacitor, Orientation::R90);
        let mut img = BinaryImage::new(160, 80);
        stamp(&mut img, r, 5, 5);
        stamp(&mut img, c, 60, 20);
        let found = detect_with_library(&img, &lib, 0.97);
        let types: Vec<_> = found.iter().map(|c| c.ctype).collect();
        assert_eq!(types, vec![ComponentType::Resistor, ComponentType::Capacitor]);
        assert_eq!(found[1].id, 1);
    }
}
