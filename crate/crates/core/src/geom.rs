//! Pixel-space rectangles and points shared by every stage.

use serde::{Deserialize, Serialize};

/// Integer pixel coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        let dx = f64::from(self.x - other.x);
        let dy = f64::from(self.y - other.y);
        (dx * dx + dy * dy).sqrt()
    }
}

/// Axis-aligned box, top-left corner plus size. `w` and `h` are at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x: i32,
    pub y: i32,
    pub w: i32,
    pub h: i32,
}

impl BBox {
    pub const fn new(x: i32, y: i32, w: i32, h: i32) -> Self {
        Self { x, y, w, h }
    }

    /// Exclusive right edge.
    pub const fn right(&self) -> i32 {
        self.x + self.w
    }

    /// Exclusive bottom edge.
    pub const fn bottom(&self) -> i32 {
        self.y + self.h
    }

    pub fn area(&self) -> i64 {
        i64::from(self.w) * i64::from(self.h)
    }

    pub fn center(&self) -> (f64, f64) {
        (
            f64::from(self.x) + f64::from(self.w - 1) / 2.0,
            f64::from(self.y) + f64::from(self.h - 1) / 2.0,
        )
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x && p.x < self.right() && p.y >= self.y && p.y < self.bottom()
    }

    /// Grow by `d` on every side.
    pub fn expand(&self, d: i32) -> BBox {
        BBox::new(self.x - d, self.y - d, self.w + 2 * d, self.h + 2 * d)
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        self.x < other.right() && other.x < self.right() && self.y < other.bottom() && other.y < self.bottom()
    }

    pub fn intersection_area(&self, other: &BBox) -> i64 {
        let w = self.right().min(other.right()) - self.x.max(other.x);
        let h = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if w <= 0 || h <= 0 {
            0
        } else {
            i64::from(w) * i64::from(h)
        }
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection_area(other);
        if inter == 0 {
            return 0.0;
        }
        inter as f64 / (self.area() + other.area() - inter) as f64
    }

    pub fn union(&self, other: &BBox) -> BBox {
        let x = self.x.min(other.x);
        let y = self.y.min(other.y);
        BBox::new(x, y, self.right().max(other.right()) - x, self.bottom().max(other.bottom()) - y)
    }

    /// Chebyshev gap between two boxes; 0 when they overlap or touch.
    pub fn gap(&self, other: &BBox) -> i32 {
        let dx = (other.x - self.right()).max(self.x - other.right()).max(0);
        let dy = (other.y - self.bottom()).max(self.y - other.bottom()).max(0);
        dx.max(dy)
    }

    /// Euclidean distance from a point to the nearest point of this box
    /// (0 when inside). Pixel centers are used for the box extent.
    pub fn distance_to(&self, px: f64, py: f64) -> f64 {
        let x0 = f64::from(self.x);
        let y0 = f64::from(self.y);
        let x1 = f64::from(self.right() - 1);
        let y1 = f64::from(self.bottom() - 1);
        let dx = if px < x0 {
            x0 - px
        } else if px > x1 {
            px - x1
        } else {
            0.0
        };
        let dy = if py < y0 {
            y0 - py
        } else if py > y1 {
            py - y1
        } else {
            0.0
        };
        (dx * dx + dy * dy).sqrt()
    }

    /// Clamp to `[0, width) x [0, height)`. Returns `None` if nothing remains.
    pub fn clamp_to(&self, width: i32, height: i32) -> Option<BBox> {
        let x0 = self.x.max(0);
        let y0 = self.y.max(0);
        let x1 = self.right().min(width);
        let y1 = self.bottom().min(height);
        if x1 <= x0 || y1 <= y0 {
            None
        } else {
            Some(BBox::new(x0, y0, x1 - x0, y1 - y0))
        }
    }
}
