//! Layout and rasterization of generated circuits.
//!
//! Steps are laid out left to right in slots whose widths are multiples of
//! the 64 px grid cell. The chain of nodes runs along horizontal rows; a
//! transistor stage lifts the chain one row up. Shunt parts hang vertically
//! from the row and drop to a common ground baseline, each with its own
//! ground symbol. Parallel parts of a series step are drawn as loops above
//! the row.

use std::collections::BTreeMap;

use super::circuit::{Circuit, Part, Step};
use super::font::{text_height, text_width, FONT_SCALE};
use super::library::{Orientation, SymbolLibrary, Variant};
use crate::detect::{canonicalize, Component, ComponentType, DetectionDoc, Role, Terminal};
use crate::geom::{BBox, Point};
use crate::netlist::{Card, Netlist, GROUND};
use crate::raster::{BinaryImage, GrayImage};
use crate::text::{draw_text, OcrDoc, TextBox};

pub const CELL: i32 = 64;
pub const MARGIN: i32 = 32;
/// Vertical distance between chain rows and between stacked loops.
pub const ROW_PITCH: i32 = 128;
/// Chain row (level 0) to ground baseline.
const GROUND_DROP: i32 = 150;
/// Chain row (level 0) to the top terminal of a shunt part.
const SHUNT_TOP: i32 = 64;
pub const LABEL_GAP: i32 = 8;
const LINE_GAP: i32 = 4;
pub const CLEARANCE: i32 = 8;
const MAX_ATTEMPTS: usize = 100;
/// Maximum bind distance factor used by the text binder.
const BIND_FACTOR: f64 = 1.5;

/// Centre line of a 3 px wide Manhattan wire segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Wire {
    pub a: Point,
    pub b: Point,
    /// Node the wire belongs to, 0 = ground, chain nodes from 1.
    pub node: usize,
}

impl Wire {
    pub fn rect(&self) -> BBox {
        let (x0, x1) = (self.a.x.min(self.b.x), self.a.x.max(self.b.x));
        let (y0, y1) = (self.a.y.min(self.b.y), self.a.y.max(self.b.y));
        BBox::new(x0 - 1, y0 - 1, x1 - x0 + 3, y1 - y0 + 3)
    }

    pub fn is_horizontal(&self) -> bool {
        self.a.y == self.b.y
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> i32 {
        (self.a.x - self.b.x).abs() + (self.a.y - self.b.y).abs()
    }

    fn shifted(&self, dx: i32, dy: i32) -> Wire {
        Wire { a: Point::new(self.a.x + dx, self.a.y + dy), b: Point::new(self.b.x + dx, self.b.y + dy), node: self.node }
    }
}

#[derive(Debug, Clone)]
struct Placed {
    /// Index into the circuit parts; `None` for ground symbols.
    part: Option<usize>,
    ctype: ComponentType,
    orientation: Orientation,
    origin: Point,
    /// Node of each terminal, canonical role order.
    nodes: Vec<(Role, usize)>,
}

#[derive(Debug, Clone)]
struct Text {
    part: usize,
    string: String,
    at: Point,
}

#[derive(Default)]
struct Layout {
    symbols: Vec<Placed>,
    wires: Vec<Wire>,
    texts: Vec<Text>,
}

struct Row {
    node: usize,
    y: i32,
    x0: i32,
    x1: i32,
}

fn round_up(v: i32) -> i32 {
    (v + CELL - 1) / CELL * CELL
}

fn label_lines(p: &Part) -> [String; 2] {
    [p.designator.clone(), p.value_label()]
}

fn label_width(p: &Part, fs: i32) -> i32 {
    label_lines(p).iter().map(|s| text_width(s, fs)).max().unwrap_or(0)
}

impl Layout {
    fn symbol<'a>(&mut self, lib: &'a SymbolLibrary, part: Option<usize>, ctype: ComponentType, o: Orientation, origin: Point) -> &'a Variant {
        let v = lib.variant(ctype, o);
        self.symbols.push(Placed { part, ctype, orientation: v.orientation, origin, nodes: Vec::new() });
        v
    }

    /// Bind each terminal of the last placed symbol to a node.
    fn bind_last(&mut self, v: &Variant, node_of: impl Fn(Role, Point) -> usize) {
        let s = self.symbols.last_mut().expect("symbol placed");
        let o = s.origin;
        s.nodes = v.terminals.iter().map(|&(r, p)| (r, node_of(r, Point::new(o.x + p.x, o.y + p.y)))).collect();
    }

    fn wire(&mut self, a: (i32, i32), b: (i32, i32), node: usize) {
        self.wires.push(Wire { a: Point::new(a.0, a.1), b: Point::new(b.0, b.1), node });
    }

    fn ground(&mut self, lib: &SymbolLibrary, x: i32, y: i32) {
        let v = self.symbol(lib, None, ComponentType::Ground, Orientation::R0, Point::new(x - 10, y));
        let v = v.clone();
        self.bind_last(&v, |_, _| 0);
    }

    /// Two label lines, left aligned at `x` or centred on `cx`.
    fn label(&mut self, part: usize, p: &Part, x: i32, top: i32, centred: bool) {
        let fs = FONT_SCALE;
        let line_h = text_height(fs);
        for (k, s) in label_lines(p).into_iter().enumerate() {
            if s.is_empty() {
                continue;
            }
            let lx = if centred { x - text_width(&s, fs) / 2 } else { x };
            let y = top + k as i32 * (line_h + LINE_GAP);
            self.texts.push(Text { part, string: s, at: Point::new(lx, y) });
        }
    }
}

fn layout(lib: &SymbolLibrary, c: &Circuit, pad: i32) -> Layout {
    let fs = FONT_SCALE;
    let block_h = 2 * text_height(fs) + LINE_GAP;
    let ground_y = GROUND_DROP;
    let mut out = Layout::default();
    let mut rows: Vec<Row> = Vec::new();
    let mut cur = 1usize;
    let mut next_node = 2usize;
    let mut level = 0i32;
    let mut x = 0i32;
    // row segment of the current node, opened lazily
    let mut open: Option<Row> = None;

    for step in &c.steps {
        let row_y = -ROW_PITCH * level;
        match step {
            Step::Shunt { part } => {
                let p = &c.parts[*part];
                let o = if p.reversed { Orientation::R180 } else { Orientation::R0 };
                let v = lib.variant(p.ctype, o).clone();
                let dx = x + 32;
                let half = v.width / 2;
                out.symbol(lib, Some(*part), p.ctype, o, Point::new(dx - half, SHUNT_TOP));
                let bottom = SHUNT_TOP + v.height - 1;
                out.bind_last(&v, |_, pt| if pt.y == SHUNT_TOP { cur } else { 0 });
                out.wire((dx, row_y), (dx, SHUNT_TOP), cur);
                out.wire((dx, bottom), (dx, ground_y), 0);
                out.ground(lib, dx, ground_y);
                let lx = dx + half + 1 + LABEL_GAP;
                out.label(*part, p, lx, SHUNT_TOP + v.height / 2 - block_h / 2, false);
                let r = open.get_or_insert(Row { node: cur, y: row_y, x0: dx, x1: dx });
                r.x1 = r.x1.max(dx);
                x += round_up(lx - x + label_width(p, fs) + 24 + pad);
            }
            Step::Series { part, loops } => {
                let elems: Vec<usize> = std::iter::once(*part).chain(loops.iter().copied()).collect();
                let half = elems.iter().map(|&i| (label_width(&c.parts[i], fs) + 1) / 2).max().unwrap_or(0).max(23);
                let reach = |j: i32| half + 16 * j + 8;
                let width = round_up(2 * (reach(loops.len() as i32) + 24) + pad);
                let cx = x + width / 2;
                let new = next_node;
                next_node += 1;
                for (j, &i) in elems.iter().enumerate() {
                    let j = j as i32;
                    let p = &c.parts[i];
                    let o = if p.reversed { Orientation::R270 } else { Orientation::R90 };
                    let y = row_y - ROW_PITCH * j;
                    let v = lib.variant(p.ctype, o).clone();
                    out.symbol(lib, Some(i), p.ctype, o, Point::new(cx - 22, y - 10));
                    out.bind_last(&v, |_, pt| if pt.x < cx { cur } else { new });
                    if j > 0 {
                        let (xl, xr) = (cx - reach(j), cx + reach(j));
                        out.wire((xl, row_y), (xl, y), cur);
                        out.wire((xl, y), (cx - 22, y), cur);
                        out.wire((cx + 22, y), (xr, y), new);
                        out.wire((xr, y), (xr, row_y), new);
                    }
                    out.label(i, p, cx, y - 10 - LABEL_GAP - block_h, true);
                }
                let r = open.get_or_insert(Row { node: cur, y: row_y, x0: cx - 22, x1: cx - 22 });
                r.x1 = r.x1.max(cx - 22);
                rows.push(open.take().expect("row opened"));
                let xr = if loops.is_empty() { cx + 22 } else { cx + reach(loops.len() as i32) };
                open = Some(Row { node: new, y: row_y, x0: cx + 22, x1: xr });
                cur = new;
                x += width;
            }
            Step::Stage { part } => {
                let p = &c.parts[*part];
                let v = lib.variant(p.ctype, Orientation::R0).clone();
                let xb = x + 32;
                let top = row_y - 22;
                out.symbol(lib, Some(*part), p.ctype, Orientation::R0, Point::new(xb, top));
                let new = next_node;
                next_node += 1;
                let (control, output) = match p.ctype {
                    ComponentType::Nmos | ComponentType::Pmos => (Role::Gate, Role::Drain),
                    _ => (Role::Base, Role::Collector),
                };
                out.bind_last(&v, |r, _| {
                    if r == control {
                        cur
                    } else if r == output {
                        new
                    } else {
                        0
                    }
                });
                let xc = xb + 24;
                let up = row_y - ROW_PITCH;
                out.wire((xc, top), (xc, up), new);
                out.wire((xc, top + v.height - 1), (xc, ground_y), 0);
                out.ground(lib, xc, ground_y);
                let lx = xb + v.width + LABEL_GAP;
                out.label(*part, p, lx, row_y - block_h / 2, false);
                let r = open.get_or_insert(Row { node: cur, y: row_y, x0: xb, x1: xb });
                r.x1 = r.x1.max(xb);
                rows.push(open.take().expect("row opened"));
                open = Some(Row { node: new, y: up, x0: xc, x1: xc });
                cur = new;
                level += 1;
                x += round_up(lx - x + label_width(p, fs) + 24 + pad);
            }
        }
    }
    rows.extend(open);
    for r in rows {
        if r.x1 > r.x0 {
            out.wire((r.x0, r.y), (r.x1, r.y), r.node);
        }
    }
    out
}

fn symbol_box(lib: &SymbolLibrary, s: &Placed) -> BBox {
    let v = lib.variant(s.ctype, s.orientation);
    BBox::new(s.origin.x, s.origin.y, v.width, v.height)
}

fn text_box(t: &Text) -> BBox {
    BBox::new(t.at.x, t.at.y, text_width(&t.string, FONT_SCALE), text_height(FONT_SCALE))
}

/// Check the drawing rules: clearances between symbols, wires and labels, and
/// that every label is unambiguously nearest to its own part.
fn validate(lib: &SymbolLibrary, l: &Layout) -> Result<(), String> {
    let boxes: Vec<BBox> = l.symbols.iter().map(|s| symbol_box(lib, s)).collect();
    let terminals: Vec<Vec<Point>> = l
        .symbols
        .iter()
        .map(|s| lib.variant(s.ctype, s.orientation).terminals.iter().map(|t| Point::new(s.origin.x + t.1.x, s.origin.y + t.1.y)).collect())
        .collect();
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            if boxes[i].gap(&boxes[j]) < CLEARANCE {
                return Err(format!("symbols {i} and {j} too close"));
            }
        }
    }
    for (wi, w) in l.wires.iter().enumerate() {
        let r = w.rect();
        for (si, b) in boxes.iter().enumerate() {
            let attached = terminals[si].iter().any(|&t| t == w.a || t == w.b);
            if !attached && r.gap(b) < CLEARANCE {
                return Err(format!("wire {wi} passes symbol {si}"));
            }
        }
        for (wj, u) in l.wires.iter().enumerate().skip(wi + 1) {
            if u.node != w.node && r.gap(&u.rect()) < CLEARANCE {
                return Err(format!("wires {wi} and {wj} of different nodes too close"));
            }
        }
    }
    let tboxes: Vec<BBox> = l.texts.iter().map(text_box).collect();
    for (ti, (t, tb)) in l.texts.iter().zip(&tboxes).enumerate() {
        if let Some(w) = l.wires.iter().find(|w| w.rect().gap(tb) < CLEARANCE) {
            return Err(format!("text {:?} too close to wire {w:?}", t.string));
        }
        if let Some(si) = boxes.iter().position(|b| b.gap(tb) < CLEARANCE) {
            return Err(format!("text {:?} too close to symbol {si}", t.string));
        }
        for (tj, ub) in tboxes.iter().enumerate().skip(ti + 1) {
            if l.texts[tj].part != t.part && tb.gap(ub) < CLEARANCE {
                return Err(format!("texts {ti} and {tj} too close"));
            }
        }
        let (cx, cy) = tb.center();
        let owner = l.symbols.iter().position(|s| s.part == Some(t.part)).expect("label owner placed");
        let own = boxes[owner].distance_to(cx, cy);
        let limit = BIND_FACTOR * f64::from(boxes[owner].w.max(boxes[owner].h));
        if own > limit {
            return Err(format!("text {:?} too far from its part", t.string));
        }
        for (si, s) in l.symbols.iter().enumerate() {
            if si != owner && s.part.is_some() && boxes[si].distance_to(cx, cy) < own + f64::from(CLEARANCE) {
                return Err(format!("text {:?} ambiguous between symbols {owner} and {si}", t.string));
            }
        }
    }
    Ok(())
}

/// A rendered circuit with its pixel-exact annotations.
#[derive(Debug, Clone)]
pub struct GoldenSchematic {
    pub seed: u64,
    pub circuit: Circuit,
    pub image: GrayImage,
    /// Golden components, canonical (y, x) order, ground symbols included.
    pub components: Vec<Component>,
    pub texts: Vec<TextBox>,
    pub netlist: Netlist,
    pub wires: Vec<Wire>,
}

impl GoldenSchematic {
    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    pub fn detection_doc(&self) -> DetectionDoc {
        DetectionDoc::from_components(&self.components, self.width() as u32, self.height() as u32)
    }

    pub fn ocr_doc(&self) -> OcrDoc {
        OcrDoc::from_texts(&self.texts)
    }

    pub fn node_count(&self) -> usize {
        self.netlist.nodes().len()
    }

    /// Ink raster of the undegraded image.
    pub fn ink(&self) -> BinaryImage {
        let bits = self.image.data().iter().map(|&v| v < 128).collect();
        BinaryImage::from_bits(self.width(), self.height(), bits).expect("dimensions match")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no valid layout for seed {seed} after {attempts} attempts: {last}")]
pub struct LayoutError {
    pub seed: u64,
    pub attempts: usize,
    pub last: String,
}

fn node_name(n: usize) -> String {
    if n == 0 {
        GROUND.to_string()
    } else {
        format!("N{n}")
    }
}

pub fn render(c: &Circuit) -> Result<GoldenSchematic, LayoutError> {
    let lib = SymbolLibrary::new(1);
    let mut last = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        let l = layout(&lib, c, 32 * attempt as i32);
        match validate(&lib, &l) {
            Ok(()) => return Ok(draw(&lib, c, l)),
            Err(e) => {
                log::debug!("seed {} layout attempt {attempt}: {e}", c.seed);
                last = e;
            }
        }
    }
    Err(LayoutError { seed: c.seed, attempts: MAX_ATTEMPTS, last })
}

fn draw(lib: &SymbolLibrary, c: &Circuit, mut l: Layout) -> GoldenSchematic {
    // extent of everything drawn, then shift so it starts at the margin
    let mut ext: Option<BBox> = None;
    let mut grow = |b: BBox| ext = Some(ext.map_or(b, |e| e.union(&b)));
    l.symbols.iter().for_each(|s| grow(symbol_box(lib, s)));
    l.wires.iter().for_each(|w| grow(w.rect()));
    l.texts.iter().for_each(|t| grow(text_box(t)));
    let ext = ext.expect("circuits draw something");
    let (dx, dy) = (MARGIN - ext.x, MARGIN - ext.y);
    for s in &mut l.symbols {
        s.origin = Point::new(s.origin.x + dx, s.origin.y + dy);
    }
    for w in &mut l.wires {
        *w = w.shifted(dx, dy);
    }
    for t in &mut l.texts {
        t.at = Point::new(t.at.x + dx, t.at.y + dy);
    }
    let (width, height) = ((ext.w + 2 * MARGIN) as usize, (ext.h + 2 * MARGIN) as usize);

    let mut img = BinaryImage::new(width, height);
    for s in &l.symbols {
        let v = lib.variant(s.ctype, s.orientation);
        for &(x, y) in &v.ink {
            img.set((s.origin.x + x) as usize, (s.origin.y + y) as usize, true);
        }
    }
    for w in &l.wires {
        let r = w.rect();
        for y in r.y..r.bottom() {
            for x in r.x..r.right() {
                img.set(x as usize, y as usize, true);
            }
        }
    }
    for t in &l.texts {
        draw_text(&mut img, &t.string, t.at.x, t.at.y, FONT_SCALE);
    }

    let mut components: Vec<Component> = l
        .symbols
        .iter()
        .enumerate()
        .map(|(id, s)| {
            let v = lib.variant(s.ctype, s.orientation);
            Component {
                id,
                ctype: s.ctype,
                bbox: symbol_box(lib, s),
                confidence: 1.0,
                terminals: v
                    .terminals
                    .iter()
                    .map(|&(role, p)| Terminal { role, xy: Point::new(s.origin.x + p.x, s.origin.y + p.y) })
                    .collect(),
            }
        })
        .collect();
    canonicalize(&mut components);

    let mut texts: Vec<TextBox> = l
        .texts
        .iter()
        .map(|t| TextBox { id: 0, string: t.string.clone(), bbox: text_box(t), confidence: 1.0 })
        .collect();
    texts.sort_by_key(|t| (t.bbox.y, t.bbox.x));
    for (i, t) in texts.iter_mut().enumerate() {
        t.id = i;
    }

    let cards = l
        .symbols
        .iter()
        .filter_map(|s| {
            let part = &c.parts[s.part?];
            let by_role: BTreeMap<Role, usize> = s.nodes.iter().copied().collect();
            let mut nodes: Vec<String> = part.ctype.roles().iter().map(|r| node_name(by_role[r])).collect();
            if matches!(part.ctype, ComponentType::Nmos | ComponentType::Pmos) {
                nodes.push(nodes[2].clone());
            }
            Some(Card { designator: part.designator.clone(), ctype: part.ctype, nodes, value: part.value, model: part.model.clone() })
        })
        .collect();

    GoldenSchematic {
        seed: c.seed,
        circuit: c.clone(),
        image: img.to_gray(),
        components,
        texts,
        netlist: Netlist::new(cards),
        wires: l.wires,
    }
}
