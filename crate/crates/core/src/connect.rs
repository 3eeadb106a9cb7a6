//! Wire connectivity: mask components, label the remaining wiring, filter
//! artifacts, merge ground nets and bind terminals to named nodes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::detect::{Component, ComponentType, Role};
use crate::flags::{Flag, FlagKind, Subject};
use crate::geom::{BBox, Point};
use crate::netlist::GROUND;
use crate::raster::{close_gaps, label_components, BinaryImage, Connectivity, LabelMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectParams {
    pub connectivity: Connectivity,
    pub close_radius: usize,
    pub mask_dilation: i32,
    pub min_area: usize,
    pub band: i32,
}

impl Default for ConnectParams {
    fn default() -> Self {
        Self { connectivity: Connectivity::Eight, close_radius: 1, mask_dilation: 2, min_area: 15, band: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Touchpoint {
    pub component: usize,
    pub role: Role,
    pub contact: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireNet {
    pub net_id: usize,
    pub region_labels: Vec<u32>,
    pub pixel_bbox: BBox,
    pub area: usize,
    pub touchpoints: Vec<Touchpoint>,
    pub anchor: Point,
    /// Touches at least one ground symbol.
    pub ground: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentNodes {
    pub component: usize,
    /// Canonical role order; `None` for a dangling terminal.
    pub terminals: Vec<(Role, Option<String>)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeMap {
    pub nets: Vec<WireNet>,
    /// Node name per net id.
    pub names: Vec<String>,
    pub bindings: Vec<ComponentNodes>,
}

impl NodeMap {
    pub fn terminals_of(&self, component: usize) -> Option<&ComponentNodes> {
        self.bindings.iter().find(|b| b.component == component)
    }
}

/// Clear every box grown by `dilation`.
pub fn mask_components(img: &BinaryImage, boxes: &[BBox], dilation: i32) -> BinaryImage {
    let mut out = img.clone();
    for b in boxes {
        out.clear_box(&b.expand(dilation));
    }
    out
}

/// Position along the box perimeter, clockwise from the top-left corner.
fn perimeter_position(b: &BBox, p: (f64, f64)) -> f64 {
    let (x0, y0) = (f64::from(b.x), f64::from(b.y));
    let (x1, y1) = (f64::from(b.right() - 1), f64::from(b.bottom() - 1));
    let (w, h) = (x1 - x0, y1 - y0);
    let (px, py) = (p.0.clamp(x0, x1), p.1.clamp(y0, y1));
    // choose the nearest side of the original point
    let d = [p.1 - y0, x1 - p.0, y1 - p.1, p.0 - x0];
    let side = (0..4).min_by(|&a, &b| d[a].total_cmp(&d[b])).expect("four sides");
    match side {
        0 => px - x0,
        1 => w + (py - y0),
        2 => w + h + (x1 - px),
        _ => 2.0 * w + h + (y1 - py),
    }
}

/// Ring pixels of every component grouped by label.
fn ring_hits(labels: &LabelMap, comp: &Component, band: i32) -> BTreeMap<u32, Vec<Point>> {
    let (w, h) = (labels.width() as i32, labels.height() as i32);
    let outer = comp.bbox.expand(band);
    let mut hits: BTreeMap<u32, Vec<Point>> = BTreeMap::new();
    for y in outer.y.max(0)..outer.bottom().min(h) {
        for x in outer.x.max(0)..outer.right().min(w) {
            let p = Point::new(x, y);
            if comp.bbox.contains(p) {
                continue;
            }
            let l = labels.label(x as usize, y as usize);
            if l != 0 {
                hits.entry(l).or_default().push(p);
            }
        }
    }
    hits
}

fn nearest(points: &[Point], target: Point) -> Point {
    *points
        .iter()
        .min_by(|a, b| a.dist(target).total_cmp(&b.dist(target)).then((a.y, a.x).cmp(&(b.y, b.x))))
        .expect("non-empty")
}

/// Touchpoints of all regions. Components without terminals get synthetic
/// contacts, one per touching region, in clockwise perimeter order.
fn touchpoints(labels: &LabelMap, comps: &[Component], band: i32) -> BTreeMap<u32, Vec<Touchpoint>> {
    let mut per_region: BTreeMap<u32, Vec<Touchpoint>> = BTreeMap::new();
    for c in comps {
        let hits = ring_hits(labels, c, band);
        if !c.terminals.is_empty() {
            for (&l, pts) in &hits {
                let mut by_role: BTreeMap<Role, Vec<Point>> = BTreeMap::new();
                for &p in pts {
                    let t = c
                        .terminals
                        .iter()
                        .min_by(|a, b| a.xy.dist(p).total_cmp(&b.xy.dist(p)))
                        .expect("terminals present");
                    by_role.entry(t.role).or_default().push(p);
                }
                for (role, pts) in by_role {
                    let anchor = c.terminal(role).expect("role present").xy;
                    per_region.entry(l).or_default().push(Touchpoint { component: c.id, role, contact: nearest(&pts, anchor) });
                }
            }
        } else {
            let mut contacts: Vec<(f64, u32, Point)> = hits
                .iter()
                .map(|(&l, pts)| {
                    let n = pts.len() as f64;
                    let cx = pts.iter().map(|p| f64::from(p.x)).sum::<f64>() / n;
                    let cy = pts.iter().map(|p| f64::from(p.y)).sum::<f64>() / n;
                    let contact = nearest(pts, Point::new(cx.round() as i32, cy.round() as i32));
                    (perimeter_position(&c.bbox, (cx, cy)), l, contact)
                })
                .collect();
            contacts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for (role, (_, l, contact)) in c.ctype.roles().iter().zip(contacts) {
                per_region.entry(l).or_default().push(Touchpoint { component: c.id, role: *role, contact });
            }
        }
    }
    per_region
}

fn is_ground(comps: &[Component], id: usize) -> bool {
    comps.iter().any(|c| c.id == id && c.ctype == ComponentType::Ground)
}

/// Build, filter and flag nets from a label map of the masked wiring.
pub fn extract_nets(labels: &LabelMap, comps: &[Component], min_area: usize, band: i32) -> (Vec<WireNet>, Vec<Flag>) {
    let tps = touchpoints(labels, comps, band);
    let mut nets = Vec::new();
    let mut flags = Vec::new();
    for l in 1..=labels.region_count() as u32 {
        let stats = labels.stats(l);
        if stats.area < min_area {
            continue;
        }
        let touch = tps.get(&l).cloned().unwrap_or_default();
        let ground = touch.iter().any(|t| is_ground(comps, t.component));
        let distinct: BTreeSet<usize> = touch.iter().map(|t| t.component).collect();
        if distinct.len() < 2 && !ground {
            if touch.len() == 1 {
                let t = touch[0];
                flags.push(
                    Flag::new(
                        FlagKind::DanglingTerminal,
                        Subject::Component(t.component),
                        format!("wire at ({}, {}) reaches only this terminal", t.contact.x, t.contact.y),
                    )
                    .qualified(t.role.as_str()),
                );
            }
            continue;
        }
        nets.push(WireNet {
            net_id: 0,
            region_labels: vec![l],
            pixel_bbox: stats.bbox,
            area: stats.area,
            touchpoints: touch,
            anchor: stats.anchor,
            ground,
        });
    }
    renumber(&mut nets);
    (nets, flags)
}

fn renumber(nets: &mut [WireNet]) {
    nets.sort_by_key(|n| (n.anchor.y, n.anchor.x));
    for (i, n) in nets.iter_mut().enumerate() {
        n.net_id = i;
    }
}

/// Merge every ground-touching net into one and drop ground touchpoints.
pub fn merge_equipotential(nets: Vec<WireNet>, comps: &[Component]) -> Vec<WireNet> {
    let (grounded, mut rest): (Vec<WireNet>, Vec<WireNet>) = nets.into_iter().partition(|n| n.ground);
    if let Some(first) = grounded.first().cloned() {
        let merged = grounded.into_iter().skip(1).fold(first, |mut acc, n| {
            acc.region_labels.extend(n.region_labels);
            acc.pixel_bbox = acc.pixel_bbox.union(&n.pixel_bbox);
            acc.area += n.area;
            acc.touchpoints.extend(n.touchpoints);
            if (n.anchor.y, n.anchor.x) < (acc.anchor.y, acc.anchor.x) {
                acc.anchor = n.anchor;
            }
            acc
        });
        let mut merged = merged;
        merged.region_labels.sort_unstable();
        merged.touchpoints.retain(|t| !is_ground(comps, t.component));
        rest.push(merged);
    }
    renumber(&mut rest);
    rest
}

/// Name nodes and bind each expected terminal to the nearest touchpoint.
pub fn map_terminals(nets: Vec<WireNet>, comps: &[Component], band: i32) -> (NodeMap, Vec<Flag>) {
    let mut names = vec![String::new(); nets.len()];
    let mut k = 0;
    for n in &nets {
        names[n.net_id] = if n.ground {
            GROUND.to_string()
        } else {
            k += 1;
            format!("N{k}")
        };
    }
    let mut flags = Vec::new();
    let mut bindings = Vec::new();
    let reach = f64::from(2 * band);
    for c in comps.iter().filter(|c| c.ctype.emits_card()) {
        let mut terminals = Vec::new();
        for &role in c.ctype.roles() {
            let anchor = c.terminal(role).map(|t| t.xy);
            let best = nets
                .iter()
                .flat_map(|n| n.touchpoints.iter().map(move |t| (n.net_id, t)))
                .filter(|(_, t)| t.component == c.id && t.role == role)
                .map(|(id, t)| (anchor.map_or(0.0, |a| a.dist(t.contact)), id))
                .filter(|(d, _)| *d <= reach)
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            match best {
                Some((_, id)) => terminals.push((role, Some(names[id].clone()))),
                None => {
                    flags.push(
                        Flag::new(FlagKind::DanglingTerminal, Subject::Component(c.id), format!("{role} is not connected to any net"))
                            .qualified(role.as_str()),
                    );
                    terminals.push((role, None));
                }
            }
        }
        bindings.push(ComponentNodes { component: c.id, terminals });
    }
    (NodeMap { nets, names, bindings }, flags)
}

#[derive(Debug, Clone)]
pub struct Connected {
    pub masked: BinaryImage,
    pub labels: LabelMap,
    pub nodemap: NodeMap,
    pub flags: Vec<Flag>,
}

/// Full connectivity stage. `extra_masks` are text boxes, cleared with the
/// same dilation so labels never join the wiring.
pub fn connect(img: &BinaryImage, comps: &[Component], extra_masks: &[BBox], p: &ConnectParams) -> Connected {
    let boxes: Vec<BBox> = comps.iter().map(|c| c.bbox).chain(extra_masks.iter().copied()).collect();
    let masked = mask_components(img, &boxes, p.mask_dilation);
    let closed = if p.close_radius > 0 { close_gaps(&masked, p.close_radius) } else { masked };
    // closing must not grow wiring back into the masked boxes
    let masked = mask_components(&closed, &boxes, p.mask_dilation);
    let labels = label_components(&masked, p.connectivity);
    let (nets, mut flags) = extract_nets(&labels, comps, p.min_area, p.band);
    let nets = merge_equipotential(nets, comps);
    let (nodemap, more) = map_terminals(nets, comps, p.band);
    for f in more {
        if !flags.iter().any(|g| g.id == f.id) {
            flags.push(f);
        }
    }
    Connected { masked, labels, nodemap, flags }
}
