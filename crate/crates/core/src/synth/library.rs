//! Symbol library shared by the renderer and the template detector.
//!
//! Every symbol is a short stroke list drawn in a vertical base pose with its
//! first terminal on top. Ink is decided by the exact distance from a pixel
//! centre to the stroke, so rotating or mirroring the stroke list gives the
//! same pixels as rotating or mirroring the mask.

use crate::detect::{ComponentType, Role};
use crate::geom::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stroke {
    Line { a: (i32, i32), b: (i32, i32), width: i32 },
    Ring { c: (i32, i32), r: i32, width: i32 },
}

impl Stroke {
    fn covers(&self, px: i32, py: i32) -> bool {
        match *self {
            Stroke::Line { a, b, width } => {
                let (dx, dy) = (i64::from(b.0 - a.0), i64::from(b.1 - a.1));
                let (vx, vy) = (i64::from(px - a.0), i64::from(py - a.1));
                let w2 = i64::from(width * width);
                let len2 = dx * dx + dy * dy;
                let t = vx * dx + vy * dy;
                if len2 == 0 || t <= 0 {
                    4 * (vx * vx + vy * vy) <= w2
                } else if t >= len2 {
                    let (ux, uy) = (i64::from(px - b.0), i64::from(py - b.1));
                    4 * (ux * ux + uy * uy) <= w2
                } else {
                    4 * ((vx * vx + vy * vy) * len2 - t * t) <= w2 * len2
                }
            }
            Stroke::Ring { c, r, width } => {
                // | |p - c| - r | <= width / 2, squared without roots
                let (ux, uy) = (i64::from(px - c.0), i64::from(py - c.1));
                let d2 = 4 * (ux * ux + uy * uy);
                let lo = (2 * r - width).max(0) as i64;
                let hi = (2 * r + width) as i64;
                d2 >= lo * lo && d2 <= hi * hi
            }
        }
    }

    fn map(&self, f: impl Fn((i32, i32)) -> (i32, i32)) -> Stroke {
        match *self {
            Stroke::Line { a, b, width } => Stroke::Line { a: f(a), b: f(b), width },
            Stroke::Ring { c, r, width } => Stroke::Ring { c: f(c), r, width },
        }
    }
}

pub fn rasterize(strokes: &[Stroke], width: i32, height: i32) -> Vec<bool> {
    let mut mask = vec![false; (width * height) as usize];
    for y in 0..height {
        for x in 0..width {
            mask[(y * width + x) as usize] = strokes.iter().any(|s| s.covers(x, y));
        }
    }
    mask
}

/// Rotation is clockwise; `Mirrored*` flips left-right before rotating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Orientation {
    R0,
    R90,
    R180,
    R270,
    M0,
    M90,
    M180,
    M270,
}

impl Orientation {
    pub const ALL: [Orientation; 8] = [
        Self::R0,
        Self::R90,
        Self::R180,
        Self::R270,
        Self::M0,
        Self::M90,
        Self::M180,
        Self::M270,
    ];

    fn parts(self) -> (bool, u8) {
        match self {
            Self::R0 => (false, 0),
            Self::R90 => (false, 1),
            Self::R180 => (false, 2),
            Self::R270 => (false, 3),
            Self::M0 => (true, 0),
            Self::M90 => (true, 1),
            Self::M180 => (true, 2),
            Self::M270 => (true, 3),
        }
    }

    /// Pose after an additional left-right flip of the drawn symbol.
    pub fn flipped(self) -> Orientation {
        let (m, k) = self.parts();
        // flip . rot(k) . mirror^m == rot(-k) . mirror^(m+1)
        let k = (4 - k) % 4;
        let idx = if m { k } else { 4 + k };
        Self::ALL[idx as usize]
    }

    pub fn is_horizontal(self) -> bool {
        self.parts().1 % 2 == 1
    }

    /// Size of the transformed box.
    pub fn dims(self, w: i32, h: i32) -> (i32, i32) {
        if self.is_horizontal() {
            (h, w)
        } else {
            (w, h)
        }
    }

    pub fn apply(self, w: i32, h: i32, p: (i32, i32)) -> (i32, i32) {
        let (m, k) = self.parts();
        let (mut x, mut y) = p;
        if m {
            x = w - 1 - x;
        }
        let (mut cw, mut ch) = (w, h);
        for _ in 0..k {
            (x, y) = (ch - 1 - y, x);
            (cw, ch) = (ch, cw);
        }
        (x, y)
    }
}

#[derive(Debug, Clone)]
pub struct SymbolDef {
    pub ctype: ComponentType,
    pub width: i32,
    pub height: i32,
    pub strokes: Vec<Stroke>,
    pub terminals: Vec<(Role, (i32, i32))>,
}

fn line(a: (i32, i32), b: (i32, i32)) -> Stroke {
    Stroke::Line { a, b, width: 3 }
}

fn polyline(points: &[(i32, i32)]) -> impl Iterator<Item = Stroke> + '_ {
    points.windows(2).map(|w| line(w[0], w[1]))
}

pub const LEAD_WIDTH: i32 = 3;

/// Base pose definitions at unit scale.
pub fn symbol_def(ctype: ComponentType) -> SymbolDef {
    use ComponentType::*;
    let two = |strokes: Vec<Stroke>, w: i32| SymbolDef {
        ctype,
        width: w,
        height: 45,
        strokes,
        terminals: vec![(Role::T1, (w / 2, 0)), (Role::T2, (w / 2, 44))],
    };
    match ctype {
        Resistor => {
            let mut s = vec![line((10, 0), (10, 9)), line((10, 35), (10, 44))];
            s.extend(polyline(&[(10, 9), (4, 12), (16, 16), (4, 20), (16, 24), (4, 28), (16, 32), (10, 35)]));
            two(s, 21)
        }
        Capacitor => two(
            vec![line((10, 0), (10, 19)), line((1, 19), (19, 19)), line((1, 25), (19, 25)), line((10, 25), (10, 44))],
            21,
        ),
        Inductor => {
            let mut s = vec![line((10, 0), (10, 11)), line((10, 35), (10, 44))];
            for k in 0..3 {
                let y = 11 + 8 * k;
                s.extend(polyline(&[(10, y), (14, y + 1), (16, y + 3), (16, y + 5), (14, y + 7), (10, y + 8)]));
            }
            two(s, 21)
        }
        Diode => two(
            vec![
                line((10, 0), (10, 14)),
                line((3, 14), (17, 14)),
                line((3, 14), (10, 28)),
                line((17, 14), (10, 28)),
                line((3, 30), (17, 30)),
                line((10, 30), (10, 44)),
            ],
            21,
        ),
        VoltageSource => two(
            vec![
                line((15, 0), (15, 8)),
                line((15, 36), (15, 44)),
                Stroke::Ring { c: (15, 22), r: 13, width: 3 },
                line((15, 11), (15, 19)),
                line((10, 15), (20, 15)),
                line((10, 30), (20, 30)),
            ],
            31,
        ),
        CurrentSource => two(
            vec![
                line((15, 0), (15, 8)),
                line((15, 36), (15, 44)),
                Stroke::Ring { c: (15, 22), r: 13, width: 3 },
                line((15, 13), (15, 31)),
                line((10, 25), (15, 31)),
                line((20, 25), (15, 31)),
            ],
            31,
        ),
        Npn | Pnp => {
            let mut s = vec![line((0, 22), (9, 22)), line((10, 12), (10, 32))];
            s.extend(polyline(&[(10, 17), (24, 9), (24, 0)]));
            s.extend(polyline(&[(10, 27), (24, 35), (24, 44)]));
            if ctype == Npn {
                s.push(line((23, 35), (13, 35)));
                s.push(line((23, 35), (19, 25)));
            } else {
                s.push(line((11, 28), (22, 28)));
                s.push(line((11, 28), (15, 38)));
            }
            transistor(ctype, s, [Role::Base, Role::Collector, Role::Emitter])
        }
        Nmos | Pmos => {
            let mut s = vec![line((0, 22), (7, 22)), line((7, 12), (7, 32)), line((13, 10), (13, 34))];
            s.extend(polyline(&[(13, 13), (24, 13), (24, 0)]));
            s.extend(polyline(&[(13, 31), (24, 31), (24, 44)]));
            if ctype == Nmos {
                s.push(line((21, 31), (17, 27)));
                s.push(line((21, 31), (17, 35)));
            } else {
                s.push(line((17, 13), (21, 9)));
                s.push(line((17, 13), (21, 17)));
            }
            transistor(ctype, s, [Role::Gate, Role::Drain, Role::Source])
        }
        Ground => SymbolDef {
            ctype,
            width: 21,
            height: 17,
            strokes: vec![line((10, 0), (10, 7)), line((1, 7), (19, 7)), line((5, 11), (15, 11)), line((8, 15), (12, 15))],
            terminals: vec![(Role::Gnd, (10, 0))],
        },
    }
}

fn transistor(ctype: ComponentType, strokes: Vec<Stroke>, roles: [Role; 3]) -> SymbolDef {
    SymbolDef {
        ctype,
        width: 31,
        height: 45,
        strokes,
        terminals: vec![(roles[0], (0, 22)), (roles[1], (24, 0)), (roles[2], (24, 44))],
    }
}

#[derive(Debug, Clone)]
pub struct Variant {
    pub ctype: ComponentType,
    pub orientation: Orientation,
    pub width: i32,
    pub height: i32,
    pub mask: Vec<bool>,
    /// Ink pixel offsets in row-major order.
    pub ink: Vec<(i32, i32)>,
    /// Terminals in the type's canonical role order.
    pub terminals: Vec<(Role, Point)>,
    /// Unit-scale strokes in this pose.
    pub strokes: Vec<Stroke>,
}

impl Variant {
    pub fn get(&self, x: i32, y: i32) -> bool {
        x >= 0 && y >= 0 && x < self.width && y < self.height && self.mask[(y * self.width + x) as usize]
    }

    pub fn terminal(&self, role: Role) -> Point {
        self.terminals.iter().find(|t| t.0 == role).expect("role belongs to type").1
    }
}

fn scale_coord(v: i32, extent: i32, s: i32) -> i32 {
    if v == 0 {
        0
    } else if v == extent - 1 {
        extent * s - 1
    } else {
        v * s + s / 2
    }
}

fn build_variant(def: &SymbolDef, o: Orientation, scale: i32) -> Variant {
    let strokes: Vec<Stroke> = def.strokes.iter().map(|s| s.map(|p| o.apply(def.width, def.height, p))).collect();
    let (w1, h1) = o.dims(def.width, def.height);
    let unit = rasterize(&strokes, w1, h1);
    let (w, h) = (w1 * scale, h1 * scale);
    let mut mask = vec![false; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            mask[(y * w + x) as usize] = unit[((y / scale) * w1 + x / scale) as usize];
        }
    }
    let ink = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).filter(|&(x, y)| mask[(y * w + x) as usize]).collect();
    let mut terminals: Vec<(Role, Point)> = def
        .terminals
        .iter()
        .map(|&(r, p)| {
            let (x, y) = o.apply(def.width, def.height, p);
            (r, Point::new(scale_coord(x, w1, scale), scale_coord(y, h1, scale)))
        })
        .collect();
    let order = def.ctype.roles();
    terminals.sort_by_key(|t| order.iter().position(|r| *r == t.0));
    Variant { ctype: def.ctype, orientation: o, width: w, height: h, mask, ink, terminals, strokes }
}

#[derive(Debug, Clone)]
pub struct SymbolLibrary {
    scale: i32,
    variants: Vec<Variant>,
    /// `(type, orientation) -> index` of the first variant with the same mask.
    canonical: Vec<(ComponentType, Orientation, usize)>,
}

impl SymbolLibrary {
    pub fn new(scale: u32) -> Self {
        let scale = scale.max(1) as i32;
        let mut variants: Vec<Variant> = Vec::new();
        let mut canonical = Vec::new();
        for t in ComponentType::ALL {
            let def = symbol_def(t);
            for o in Orientation::ALL {
                let v = build_variant(&def, o, scale);
                let dup = variants
                    .iter()
                    .position(|u| u.ctype == t && u.width == v.width && u.height == v.height && u.mask == v.mask);
                let idx = dup.unwrap_or_else(|| {
                    variants.push(v);
                    variants.len() - 1
                });
                canonical.push((t, o, idx));
            }
        }
        Self { scale, variants, canonical }
    }

    pub fn scale(&self) -> u32 {
        self.scale as u32
    }

    pub fn variants(&self) -> &[Variant] {
        &self.variants
    }

    /// The stored variant drawn for `ctype` in pose `o`.
    pub fn variant(&self, ctype: ComponentType, o: Orientation) -> &Variant {
        let idx = self.canonical.iter().find(|c| c.0 == ctype && c.1 == o).expect("all poses present").2;
        &self.variants[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn overlap(a: &Variant, b: &Variant, dx: i32, dy: i32) -> f64 {
        let hits = a.ink.iter().filter(|&&(x, y)| b.get(x + dx, y + dy)).count();
        hits as f64 / a.ink.len() as f64
    }

    #[test]
    fn orientation_apply_matches_dims() {
        for o in Orientation::ALL {
            let (w, h) = o.dims(21, 45);
            for p in [(0, 0), (20, 0), (0, 44), (20, 44), (7, 13)] {
                let (x, y) = o.apply(21, 45, p);
                assert!(x >= 0 && x < w && y >= 0 && y < h, "{o:?} {p:?}");
            }
        }
        assert_eq!(Orientation::R90.apply(21, 45, (10, 0)), (44, 10));
        assert_eq!(Orientation::R270.apply(21, 45, (10, 0)), (0, 10));
    }

    #[test]
    fn flipped_matches_pixel_mirror() {
        let lib = SymbolLibrary::new(1);
        for t in ComponentType::ALL {
            for o in Orientation::ALL {
                let v = lib.variant(t, o);
                let f = lib.variant(t, o.flipped());
                assert_eq!((v.width, v.height), (f.width, f.height));
                for y in 0..v.height {
                    for x in 0..v.width {
                        assert_eq!(v.get(x, y), f.get(v.width - 1 - x, y), "{t} {o:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn strokes_reproduce_mask() {
        let lib = SymbolLibrary::new(1);
        for v in lib.variants() {
            assert_eq!(rasterize(&v.strokes, v.width, v.height), v.mask, "{} {:?}", v.ctype, v.orientation);
        }
    }

    #[test]
    fn terminals_lie_on_ink_at_the_border() {
        for scale in [1, 2] {
            let lib = SymbolLibrary::new(scale);
            for v in lib.variants() {
                assert_eq!(v.terminals.len(), v.ctype.terminal_count());
                for &(_, p) in &v.terminals {
                    assert!(v.get(p.x, p.y), "{} {:?} {p:?}", v.ctype, v.orientation);
                    let border = p.x == 0 || p.y == 0 || p.x == v.width - 1 || p.y == v.height - 1;
                    assert!(border, "{} {:?} {p:?}", v.ctype, v.orientation);
                }
            }
        }
    }

    #[test]
    fn no_template_matches_another_symbol() {
        let lib = SymbolLibrary::new(1);
        let vs = lib.variants();
        for (i, a) in vs.iter().enumerate() {
            for (j, b) in vs.iter().enumerate() {
                // a pose of the same type shifted by a pixel or two is harmless,
                // the exact pose scores 1.0 and wins suppression
                if i == j || a.ctype == b.ctype {
                    continue;
                }
                // placements the detector proposes: template anchor on ink
                for &(bx, by) in &b.ink {
                    let (dx, dy) = (bx - a.ink[0].0, by - a.ink[0].1);
                    let s = overlap(a, b, dx, dy);
                    assert!(s < 0.97, "{} {:?} on {} {:?} at ({dx},{dy}) scores {s}", a.ctype, a.orientation, b.ctype, b.orientation);
                }
            }
        }
    }

    #[test]
    fn polarity_pairs_differ_by_enough_ink() {
        let lib = SymbolLibrary::new(1);
        for (a, b) in [(ComponentType::Npn, ComponentType::Pnp), (ComponentType::Nmos, ComponentType::Pmos)] {
            let (va, vb) = (lib.variant(a, Orientation::R0), lib.variant(b, Orientation::R0));
            let s = overlap(va, vb, 0, 0).max(overlap(vb, va, 0, 0));
            assert!(s < 0.93, "{a} vs {b}: {s}");
        }
    }
}
