//! Image ingestion, binarization, morphological gap repair and two-pass
//! connected-component labeling.

use std::io::Cursor;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{BBox, Point};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("decode error at byte {offset}: {reason}")]
pub struct DecodeError {
    pub offset: usize,
    pub reason: String,
}

impl DecodeError {
    fn new(offset: usize, reason: impl Into<String>) -> Self {
        Self { offset, reason: reason.into() }
    }
}

/// 8-bit luminance raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    /// Panics if a dimension is zero.
    pub fn new(width: usize, height: usize, fill: u8) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be >= 1");
        Self { width, height, data: vec![fill; width * height] }
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Option<Self> {
        (width >= 1 && height >= 1 && data.len() == width * height).then_some(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Binary PGM (P5, maxval 255).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    /// 8-bit grayscale PNG.
    pub fn to_png(&self) -> Vec<u8> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc.write_header().expect("png header to memory");
            writer.write_image_data(&self.data).expect("png data to memory");
        }
        out
    }
}

/// Foreground mask; `true` means ink regardless of source polarity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![false; width * height] }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Option<Self> {
        (bits.len() == width * height).then_some(Self { width, height, bits })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Out-of-bounds reads are background.
    pub fn get_i(&self, x: i32, y: i32) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height && self.get(x as usize, y as usize)
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Clear every pixel of `bbox` (clipped to the image).
    pub fn clear_box(&mut self, bbox: &BBox) {
        let Some(b) = bbox.clamp_to(self.width as i32, self.height as i32) else { return };
        for y in b.y..b.bottom() {
            let row = y as usize * self.width;
            self.bits[row + b.x as usize..row + b.right() as usize].fill(false);
        }
    }

    /// Render as a black-on-white gray image.
    pub fn to_gray(&self) -> GrayImage {
        let data = self.bits.iter().map(|&b| if b { 0 } else { 255 }).collect();
        GrayImage { width: self.width, height: self.height, data }
    }
}

/// Decode PNG (8-bit gray or RGB, alpha ignored) or binary PGM (P5).
pub fn load_image(bytes: &[u8]) -> Result<GrayImage, DecodeError> {
    if bytes.is_empty() {
        return Err(DecodeError::new(0, "empty input"));
    }
    if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png(bytes)
    } else {
        Err(DecodeError::new(0, "unrecognized image signature (expected PNG or P5 PGM)"))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, DecodeError> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (i, field) in fields.iter_mut().enumerate() {
        // whitespace and comments before each header number
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(DecodeError::new(pos, "truncated PGM header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(DecodeError::new(pos, format!("expected header field {}", ["width", "height", "maxval"][i])));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text.parse().map_err(|_| DecodeError::new(start, "header number out of range"))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(DecodeError::new(pos, "zero image dimension"));
    }
    if maxval != 255 {
        return Err(DecodeError::new(pos, format!("unsupported maxval {maxval} (expected 255)")));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(DecodeError::new(pos, "missing whitespace after maxval")),
    }
    let need = width.checked_mul(height).ok_or_else(|| DecodeError::new(pos, "image too large"))?;
    let payload = &bytes[pos..];
    if payload.len() < need {
        return Err(DecodeError::new(
            bytes.len(),
            format!("truncated payload: {} of {} bytes", payload.len(), need),
        ));
    }
    Ok(GrayImage { width, height, data: payload[..need].to_vec() })
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage, DecodeError> {
    let mut cursor = Cursor::new(bytes);
    let result = read_png(&mut cursor);
    result.map_err(|e| DecodeError::new(cursor.position() as usize, e.to_string()))
}

fn read_png(cursor: &mut Cursor<&[u8]>) -> Result<GrayImage, png::DecodingError> {
    let mut decoder = png::Decoder::new(cursor);
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info()?;
    let size = reader.output_buffer_size().ok_or(png::DecodingError::LimitsExceeded)?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf)?;
    let (width, height) = (info.width as usize, info.height as usize);
    if width == 0 || height == 0 {
        return Err(png::DecodingError::LimitsExceeded);
    }
    let channels = info.color_type.samples();
    let stride = info.line_size;
    let mut data = Vec::with_capacity(width * height);
    for row in buf.chunks(stride).take(height) {
        for px in row.chunks(channels).take(width) {
            let v = match channels {
                1 | 2 => px[0],
                _ => luminance(px[0], px[1], px[2]),
            };
            data.push(v);
        }
    }
    Ok(GrayImage { width, height, data })
}

/// `round(0.299 R + 0.587 G + 0.114 B)` in integer arithmetic.
pub fn luminance(r: u8, g: u8, b: u8) -> u8 {
    let sum = 299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b);
    ((sum + 500) / 1000) as u8
}

/// Otsu threshold `t` in `1..=255` splitting the histogram into `< t` and
/// `>= t`. `None` when the image has a single gray level.
pub fn otsu_threshold(img: &GrayImage) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &v in img.data() {
        hist[v as usize] += 1;
    }
    let total: u64 = hist.iter().sum();
    let total_sum: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();
    let mut best: Option<(u8, f64)> = None;
    let (mut n0, mut s0) = (0u64, 0u64);
    for t in 1..=255usize {
        n0 += hist[t - 1];
        s0 += (t as u64 - 1) * hist[t - 1];
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let s1 = total_sum - s0;
        let diff = i128::from(n1) * i128::from(s0) - i128::from(n0) * i128::from(s1);
        let score = (diff as f64) * (diff as f64) / (n0 as f64 * n1 as f64);
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((t as u8, score));
        }
    }
    best.map(|(t, _)| t)
}

/// Global Otsu binarization with polarity auto-detection.
pub fn binarize(img: &GrayImage) -> BinaryImage {
    let Some(t) = otsu_threshold(img) else {
        return BinaryImage::new(img.width, img.height);
    };
    let sum: u64 = img.data.iter().map(|&v| u64::from(v)).sum();
    let dark_ink = sum >= 128 * img.data.len() as u64;
    let bits = img.data.iter().map(|&v| if dark_ink { v < t } else { v >= t }).collect();
    BinaryImage { width: img.width, height: img.height, bits }
}

/// Square-window pass along rows (`horizontal`) or columns. With `any`, a
/// pixel is set if any in-bounds window pixel is set (dilation); otherwise
/// only if all in-bounds window pixels are set (erosion).
fn window_pass(src: &[bool], width: usize, height: usize, radius: usize, horizontal: bool, any: bool) -> Vec<bool> {
    let (lines, len) = if horizontal { (height, width) } else { (width, height) };
    let idx = |line: usize, i: usize| if horizontal { line * width + i } else { i * width + line };
    let mut out = vec![false; src.len()];
    let mut prefix = vec![0u32; len + 1];
    for line in 0..lines {
        for i in 0..len {
            let hit = src[idx(line, i)] == any;
            prefix[i + 1] = prefix[i] + u32::from(hit);
        }
        for i in 0..len {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius + 1).min(len);
            let hits = prefix[hi] - prefix[lo];
            out[idx(line, i)] = if any { hits > 0 } else { hits == 0 };
        }
    }
    out
}

/// Morphological closing with a `(2r+1)^2` square. Pixels outside the image
/// never contribute ink to the dilation and never erode the border.
pub fn close_gaps(img: &BinaryImage, radius: usize) -> BinaryImage {
    if radius == 0 {
        return img.clone();
    }
    let (w, h) = (img.width, img.height);
    let d = window_pass(&img.bits, w, h, radius, true, true);
    let d = window_pass(&d, w, h, radius, false, true);
    let e = window_pass(&d, w, h, radius, true, false);
    let e = window_pass(&e, w, h, radius, false, false);
    BinaryImage { width: w, height: h, bits: e }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Connectivity {
    #[serde(rename = "4")]
    Four,
    #[default]
    #[serde(rename = "8")]
    Eight,
}

impl std::str::FromStr for Connectivity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "4" | "4-conn" => Ok(Self::Four),
            "8" | "8-conn" => Ok(Self::Eight),
            other => Err(format!("connectivity must be 4 or 8, got {other:?}")),
        }
    }
}

impl std::fmt::Display for Connectivity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Four => "4",
            Self::Eight => "8",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionStats {
    pub area: usize,
    pub bbox: BBox,
    /// First pixel of the region in row-major order.
    pub anchor: Point,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    stats: Vec<RegionStats>,
}

impl LabelMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn region_count(&self) -> usize {
        self.stats.len()
    }

    /// Stats for label `l` (1-based).
    pub fn stats(&self, l: u32) -> &RegionStats {
        &self.stats[l as usize - 1]
    }

    pub fn region_stats(&self) -> &[RegionStats] {
        &self.stats
    }

    /// Little-endian dump of the label raster, for determinism checks.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.labels.iter().flat_map(|l| l.to_le_bytes()).collect()
    }

    /// Gray-level visualization: background white, regions spread over
    /// darker levels by a multiplicative hash of the label.
    pub fn to_gray(&self) -> GrayImage {
        let data = self
            .labels
            .iter()
            .map(|&l| if l == 0 { 255 } else { (l.wrapping_mul(2_654_435_761) >> 24) as u8 % 200 })
            .collect();
        GrayImage { width: self.width, height: self.height, data }
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) -> u32 {
    let ra = find(parent, a);
    let rb = find(parent, b);
    let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
    parent[hi as usize] = lo;
    lo
}

/// Two-pass labeling with union-find. Final labels are numbered by the
/// row-major position of each region's first pixel.
pub fn label_components(img: &BinaryImage, connectivity: Connectivity) -> LabelMap {
    let (w, h) = (img.width, img.height);
    let mut prov = vec![0u32; w * h];
    // parent[0] is a sentinel for background
    let mut parent: Vec<u32> = vec![0];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !img.bits[i] {
                continue;
            }
            let mut current = 0u32;
            let mut visit = |n: u32, parent: &mut Vec<u32>| {
                if n == 0 {
                    return;
                }
                current = if current == 0 { find(parent, n) } else { union(parent, current, n) };
            };
            if x > 0 {
                visit(prov[i - 1], &mut parent);
            }
            if y > 0 {
                let up = i - w;
                if connectivity == Connectivity::Eight && x > 0 {
                    visit(prov[up - 1], &mut parent);
                }
                visit(prov[up], &mut parent);
                if connectivity == Connectivity::Eight && x + 1 < w {
                    visit(prov[up + 1], &mut parent);
                }
            }
            if current == 0 {
                current = parent.len() as u32;
                parent.push(current);
            }
            prov[i] = current;
        }
    }

    let mut final_of_root = vec![0u32; parent.len()];
    let mut stats: Vec<RegionStats> = Vec::new();
    let mut labels = vec![0u32; w * h];
    let mut extents: Vec<(i32, i32, i32, i32)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if prov[i] == 0 {
                continue;
            }
            let root = find(&mut parent, prov[i]) as usize;
            if final_of_root[root] == 0 {
                stats.push(RegionStats {
                    area: 0,
                    bbox: BBox::new(x as i32, y as i32, 1, 1),
                    anchor: Point::new(x as i32, y as i32),
                });
                extents.push((x as i32, y as i32, x as i32, y as i32));
                final_of_root[root] = stats.len() as u32;
            }
            let l = final_of_root[root];
            labels[i] = l;
            let k = l as usize - 1;
            stats[k].area += 1;
            let e = &mut extents[k];
            e.0 = e.0.min(x as i32);
            e.2 = e.2.max(x as i32);
            e.3 = e.3.max(y as i32);
        }
    }
    for (s, e) in stats.iter_mut().zip(&extents) {
        s.bbox = BBox::new(e.0, e.1, e.2 - e.0 + 1, e.3 - e.1 + 1);
    }
    LabelMap { width: w, height: h, labels, stats }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Independent stack flood fill; labels in row-major first-pixel order.
    pub(crate) fn flood_fill_labels(img: &BinaryImage, conn: Connectivity) -> Vec<u32> {
        let (w, h) = (img.width() as i32, img.height() as i32);
        let mut out = vec![0u32; (w * h) as usize];
        let mut next = 0u32;
        let offsets: &[(i32, i32)] = match conn {
            Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
            Connectivity::Eight => &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)],
        };
        for y in 0..h {
            for x in 0..w {
                if !img.get_i(x, y) || out[(y * w + x) as usize] != 0 {
                    continue;
                }
                next += 1;
                let mut stack = vec![(x, y)];
                out[(y * w + x) as usize] = next;
                while let Some((cx, cy)) = stack.pop() {
                    for (dx, dy) in offsets {
                        let (nx, ny) = (cx + dx, cy + dy);
                        if img.get_i(nx, ny) && out[(ny * w + nx) as usize] == 0 {
                            out[(ny * w + nx) as usize] = next;
                            stack.push((nx, ny));
                        }
                    }
                }
            }
        }
        out
    }

    fn from_rows(rows: &[&str]) -> BinaryImage {
        let h = rows.len();
        let w = rows[0].len();
        let bits = rows.iter().flat_map(|r| r.bytes().map(|b| b == b'#')).collect();
        BinaryImage::from_bits(w, h, bits).unwrap()
    }

    #[test]
    fn pgm_identity() {
        let img = load_image(b"P5\n2 1\n255\n\x00\xff").unwrap();
        assert_eq!((img.width(), img.height()), (2, 1));
        assert_eq!(img.data(), &[0, 255]);
    }

    #[test]
    fn pgm_with_comment_and_roundtrip() {
        let img = load_image(b"P5 # c\n3 # w\n1\n255\n\x01\x02\x03").unwrap();
        assert_eq!(img.data(), &[1, 2, 3]);
        assert_eq!(load_image(&img.to_pgm()).unwrap(), img);
    }

    #[test]
    fn rgb_png_luminance() {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 1, 1);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            enc.write_header().unwrap().write_image_data(&[255, 0, 0]).unwrap();
        }
        // round(0.299 * 255) = 76
        assert_eq!(load_image(&out).unwrap().data(), &[76]);
    }

    #[test]
    fn rgba_png_ignores_alpha() {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 1, 1);
            enc.set_color(png::ColorType::Rgba);
            enc.set_depth(png::BitDepth::Eight);
            enc.write_header().unwrap().write_image_data(&[0, 0, 255, 0]).unwrap();
        }
        assert_eq!(load_image(&out).unwrap().data(), &[29]);
    }

    #[test]
    fn gray_png_roundtrip() {
        let img = GrayImage::from_raw(3, 2, vec![0, 10, 20, 30, 40, 255]).unwrap();
        assert_eq!(load_image(&img.to_png()).unwrap(), img);
    }

    #[test]
    fn decode_errors_name_offsets() {
        assert_eq!(load_image(b"").unwrap_err().offset, 0);
        let e = load_image(b"P5\n4 4\n255\n\x00\x00").unwrap_err();
        assert!(e.reason.contains("truncated"), "{e}");
        assert_eq!(e.offset, 13);
        let e = load_image(b"P5\n4 x\n255\n").unwrap_err();
        assert_eq!(e.offset, 5);
        assert!(load_image(b"P5\n1 1\n65535\n\x00\x00").is_err());
        let png = GrayImage::new(4, 4, 9).to_png();
        let e = load_image(&png[..png.len() - 20]).unwrap_err();
        assert!(e.offset > 8, "{e}");
    }

    #[test]
    fn binarize_constant_is_empty() {
        assert_eq!(binarize(&GrayImage::new(5, 5, 255)).count_ones(), 0);
        assert_eq!(binarize(&GrayImage::new(5, 5, 0)).count_ones(), 0);
    }

    #[test]
    fn binarize_dark_ink_on_light() {
        let mut img = GrayImage::new(4, 4, 255);
        img.set(2, 1, 0);
        let b = binarize(&img);
        assert_eq!(b.count_ones(), 1);
        assert!(b.get(2, 1));
    }

    #[test]
    fn binarize_light_ink_on_dark() {
        let mut img = GrayImage::new(4, 4, 0);
        img.set(1, 3, 250);
        let b = binarize(&img);
        assert_eq!(b.count_ones(), 1);
        assert!(b.get(1, 3));
    }

    fn brute_force_otsu(img: &GrayImage) -> Option<u8> {
        let mut best: Option<(u8, f64)> = None;
        for t in 1..=255u32 {
            let (mut n0, mut n1, mut s0, mut s1) = (0u64, 0u64, 0u64, 0u64);
            for &v in img.data() {
                if u32::from(v) < t {
                    n0 += 1;
                    s0 += u64::from(v);
                } else {
                    n1 += 1;
                    s1 += u64::from(v);
                }
            }
            if n0 == 0 || n1 == 0 {
                continue;
            }
            let diff = i128::from(n1) * i128::from(s0) - i128::from(n0) * i128::from(s1);
            let v = (diff as f64) * (diff as f64) / (n0 as f64 * n1 as f64);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((t as u8, v));
            }
        }
        best.map(|(t, _)| t)
    }

    #[test]
    fn otsu_bimodal_matches_exhaustive_scan() {
        let mut data = vec![50u8; 100];
        data.extend(std::iter::repeat_n(200u8, 100));
        let img = GrayImage::from_raw(20, 10, data).unwrap();
        let t = otsu_threshold(&img).unwrap();
        assert_eq!(Some(t), brute_force_otsu(&img));
        assert_eq!(t, 51);
        let b = binarize(&img);
        assert_eq!(b.count_ones(), 100);
    }

    #[test]
    fn otsu_matches_scan_on_ramps() {
        for k in 1..20u32 {
            let data: Vec<u8> = (0..400u32).map(|i| ((i * 37 * k + i * i) % 256) as u8).collect();
            let img = GrayImage::from_raw(20, 20, data).unwrap();
            assert_eq!(otsu_threshold(&img), brute_force_otsu(&img));
        }
    }

    #[test]
    fn close_radius_zero_is_identity() {
        let img = from_rows(&["#.#.", "..#.", "##.."]);
        assert_eq!(close_gaps(&img, 0), img);
    }

    #[test]
    fn close_bridges_one_pixel_gap() {
        let img = from_rows(&[
            "...........",
            "####.######",
            "####.######",
            "####.######",
            "...........",
        ]);
        let closed = close_gaps(&img, 1);
        let flood = flood_fill_labels(&closed, Connectivity::Four);
        assert_eq!(flood.iter().max(), Some(&1));
        assert_eq!(label_components(&closed, Connectivity::Eight).region_count(), 1);
        assert_eq!(label_components(&img, Connectivity::Eight).region_count(), 2);
    }

    #[test]
    fn close_keeps_isolated_pixel() {
        let img = from_rows(&[".....", ".....", "..#..", ".....", "....."]);
        assert_eq!(close_gaps(&img, 1), img);
        let corner = from_rows(&["#..", "...", "..."]);
        assert_eq!(close_gaps(&corner, 1), corner);
    }

    #[test]
    fn label_blank_and_line() {
        assert_eq!(label_components(&BinaryImage::new(8, 8), Connectivity::Eight).region_count(), 0);
        let line = from_rows(&["..........", "##########", ".........."]);
        let lm = label_components(&line, Connectivity::Four);
        assert_eq!(lm.region_count(), 1);
        assert_eq!(lm.stats(1).area, 10);
        assert_eq!(lm.stats(1).bbox, BBox::new(0, 1, 10, 1));
    }

    #[test]
    fn label_diagonal_connectivity() {
        let img = from_rows(&["#.", ".#"]);
        assert_eq!(label_components(&img, Connectivity::Eight).region_count(), 1);
        assert_eq!(label_components(&img, Connectivity::Four).region_count(), 2);
        assert_eq!(*flood_fill_labels(&img, Connectivity::Eight).iter().max().unwrap(), 1);
        assert_eq!(*flood_fill_labels(&img, Connectivity::Four).iter().max().unwrap(), 2);
    }

    #[test]
    fn label_u_shape_merges_late() {
        let img = from_rows(&["#...#", "#...#", "#####"]);
        let lm = label_components(&img, Connectivity::Four);
        assert_eq!(lm.region_count(), 1);
        assert_eq!(lm.labels(), flood_fill_labels(&img, Connectivity::Four).as_slice());
        assert_eq!(lm.stats(1).anchor, Point::new(0, 0));
    }
}
