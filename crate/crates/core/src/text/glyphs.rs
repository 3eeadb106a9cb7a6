//! Exact bitmap-glyph recognizer for labels drawn in the synth font.

use crate::geom::BBox;
use crate::raster::BinaryImage;
use crate::synth::font::{self, ADVANCE, FONT_SCALE, GLYPH_H, GLYPH_W};
use crate::text::TextBox;

struct Pattern {
    ch: char,
    rows: &'static [u8; 7],
    /// Left-right mirrored, as in a flipped scan.
    mirrored: bool,
    /// First ink font-pixel in row-major order.
    first: (i32, i32),
}

impl Pattern {
    fn bit(&self, c: i32, r: i32) -> bool {
        let c = if self.mirrored && (0..GLYPH_W).contains(&c) { GLYPH_W - 1 - c } else { c };
        font::glyph_bit(self.rows, c, r)
    }
}

fn patterns() -> Vec<Pattern> {
    font::glyphs()
        .flat_map(|(ch, rows)| [false, true].map(|mirrored| (ch, rows, mirrored)))
        .map(|(ch, rows, mirrored)| {
            let mut p = Pattern { ch, rows, mirrored, first: (0, 0) };
            p.first = (0..GLYPH_H)
                .flat_map(|r| (0..GLYPH_W).map(move |c| (c, r)))
                .find(|&(c, r)| p.bit(c, r))
                .expect("glyphs have ink");
            p
        })
        .collect()
}

/// Every pixel of the `fs`-sized block at font cell (c, r) equals `ink`.
fn block_is(img: &BinaryImage, ox: i32, oy: i32, c: i32, r: i32, fs: i32, ink: bool) -> bool {
    let (x0, y0) = (ox + c * fs, oy + r * fs);
    (0..fs).all(|dy| (0..fs).all(|dx| img.get_i(x0 + dx, y0 + dy) == ink))
}

fn matches(img: &BinaryImage, p: &Pattern, ox: i32, oy: i32, fs: i32) -> bool {
    let (fx, fy) = p.first;
    if !block_is(img, ox, oy, fx, fy, fs, true) {
        return false;
    }
    for r in -1..=GLYPH_H {
        for c in -1..=GLYPH_W {
            let ink = p.bit(c, r);
            if !block_is(img, ox, oy, c, r, fs, ink) {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    ch: char,
    mirrored: bool,
    x: i32,
    y: i32,
}

/// Recognize glyph runs outside `mask`. `scale` is the drawing scale; glyphs
/// are drawn at `FONT_SCALE * scale` image pixels per font pixel.
///
/// Mirrored text is read too, and its string reversed back into reading
/// order.
pub fn recognize_glyphs(img: &BinaryImage, mask: &[BBox], scale: u32) -> Vec<TextBox> {
    let fs = FONT_SCALE * scale.max(1) as i32;
    let (w, h) = (img.width() as i32, img.height() as i32);
    let pats = patterns();
    let masked = |x: i32, y: i32| mask.iter().any(|b| b.contains(crate::geom::Point::new(x, y)));
    let cell = BBox::new(0, 0, GLYPH_W * fs, GLYPH_H * fs);
    let mut hits = Vec::new();
    for y in 0..h {
        for x in 0..w {
            // only the top-left pixel of a glyph's first ink block can anchor it
            if !img.get_i(x, y) || img.get_i(x - 1, y) || img.get_i(x, y - 1) || masked(x, y) {
                continue;
            }
            for p in &pats {
                let (ox, oy) = (x - p.first.0 * fs, y - p.first.1 * fs);
                if ox < 0 || oy < 0 || ox + cell.w > w || oy + cell.h > h {
                    continue;
                }
                let placed = BBox::new(ox, oy, cell.w, cell.h);
                if mask.iter().any(|b| b.intersects(&placed)) {
                    continue;
                }
                if matches(img, p, ox, oy, fs) {
                    hits.push(Hit { ch: p.ch, mirrored: p.mirrored, x: ox, y: oy });
                }
            }
        }
    }
    hits.sort_by_key(|g| (g.y, g.x, g.mirrored));
    // one slot per glyph position, holding every reading of it
    let mut slots: Vec<Vec<Hit>> = Vec::new();
    for h in hits {
        match slots.last_mut() {
            Some(s) if (s[0].x, s[0].y) == (h.x, h.y) => s.push(h),
            _ => slots.push(vec![h]),
        }
    }
    let max_gap = GLYPH_W * fs;
    let mut runs: Vec<(std::ops::Range<usize>, BBox)> = Vec::new();
    let mut i = 0;
    while i < slots.len() {
        let (x0, y0) = (slots[i][0].x, slots[i][0].y);
        let mut bbox = BBox::new(x0, y0, cell.w, cell.h);
        let mut j = i + 1;
        while j < slots.len() && slots[j][0].y == y0 && slots[j][0].x - bbox.right() <= max_gap {
            bbox = bbox.union(&BBox::new(slots[j][0].x, y0, cell.w, cell.h));
            j += 1;
        }
        runs.push((i..j, bbox));
        i = j;
    }
    // Some(true) when a glyph only reads mirrored, Some(false) when one only
    // reads plain. Undecided runs follow the majority of the image.
    let decide = |r: &[Vec<Hit>]| {
        let only = |m: bool| r.iter().any(|s| s.iter().all(|h| h.mirrored == m));
        match (only(true), only(false)) {
            (true, false) => Some(true),
            (false, true) => Some(false),
            _ => None,
        }
    };
    let votes: Vec<Option<bool>> = runs.iter().map(|(r, _)| decide(&slots[r.clone()])).collect();
    let flipped = votes.iter().filter(|v| **v == Some(true)).count() > votes.iter().filter(|v| **v == Some(false)).count();
    let mut boxes: Vec<(String, BBox)> = Vec::new();
    for ((range, bbox), vote) in runs.into_iter().zip(votes) {
        let mirrored = vote.unwrap_or(flipped);
        // a glyph like '.' also reads in the other orientation at a shifted
        // position; such phantom slots drop out here
        let mut chars: Vec<char> =
            slots[range].iter().filter_map(|s| s.iter().find(|h| h.mirrored == mirrored)).map(|h| h.ch).collect();
        if mirrored {
            chars.reverse();
        }
        boxes.push((chars.into_iter().collect(), bbox));
    }
    boxes.sort_by_key(|b| (b.1.y, b.1.x));
    boxes
        .into_iter()
        .enumerate()
        .map(|(id, (string, bbox))| TextBox { id, string, bbox, confidence: 1.0 })
        .collect()
}

/// Draw `s` with its top-left cell corner at (x, y); used by the renderer and tests.
pub fn draw_text(img: &mut BinaryImage, s: &str, x: i32, y: i32, fs: i32) {
    for (k, ch) in s.chars().enumerate() {
        let rows = font::glyph(ch).unwrap_or_else(|| panic!("glyph {ch:?} not in font"));
        let gx = x + k as i32 * ADVANCE * fs;
        for r in 0..GLYPH_H {
            for c in 0..GLYPH_W {
                if font::glyph_bit(rows, c, r) {
                    for dy in 0..fs {
                        for dx in 0..fs {
                            let (px, py) = (gx + c * fs + dx, y + r * fs + dy);
                            if px >= 0 && py >= 0 && (px as usize) < img.width() && (py as usize) < img.height() {
                                img.set(px as usize, py as usize, true);
                            }
                        }
                    }
                }
            }
        }
    }
}
