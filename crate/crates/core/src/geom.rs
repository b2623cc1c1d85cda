//! Points, topological lines, boxes and annotations.
//!
//! Coordinates follow the image convention: origin at the top-left corner,
//! x to the right, y downward, cell centres at integer coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TllError};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn scaled(&self, factor: f64) -> Point {
        Point::new(self.x * factor, self.y * factor)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// A pedestrian instance: the somatic centre line from the top vertex (head)
/// to the bottom vertex (between the feet).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopoLine {
    pub top: Point,
    pub bottom: Point,
    pub score: f64,
}

impl TopoLine {
    pub fn new(top: Point, bottom: Point, score: f64) -> Self {
        Self { top, bottom, score }
    }

    pub fn length(&self) -> f64 {
        self.top.distance(&self.bottom)
    }

    pub fn midpoint(&self) -> Point {
        Point::new(0.5 * (self.top.x + self.bottom.x), 0.5 * (self.top.y + self.bottom.y))
    }

    /// Unit vector pointing from top to bottom.
    pub fn direction(&self) -> Result<(f64, f64)> {
        unit_direction(&self.top, &self.bottom)
    }

    /// Same line with both endpoints multiplied by `factor` (e.g. map stride).
    pub fn scaled(&self, factor: f64) -> TopoLine {
        TopoLine::new(self.top.scaled(factor), self.bottom.scaled(factor), self.score)
    }
}

pub(crate) fn unit_direction(from: &Point, to: &Point) -> Result<(f64, f64)> {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    let norm = dx.hypot(dy);
    if norm <= f64::EPSILON || !norm.is_finite() {
        return Err(TllError::ZeroLengthLine);
    }
    Ok((dx / norm, dy / norm))
}

/// Axis-aligned box in centre/size form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub score: f64,
}

impl BBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64, score: f64) -> Self {
        Self { cx, cy, w, h, score }
    }

    pub fn from_corners(x0: f64, y0: f64, x1: f64, y1: f64, score: f64) -> Self {
        Self::new(0.5 * (x0 + x1), 0.5 * (y0 + y1), x1 - x0, y1 - y0, score)
    }

    pub fn x0(&self) -> f64 {
        self.cx - 0.5 * self.w
    }
    pub fn x1(&self) -> f64 {
        self.cx + 0.5 * self.w
    }
    pub fn y0(&self) -> f64 {
        self.cy - 0.5 * self.h
    }
    pub fn y1(&self) -> f64 {
        self.cy + 0.5 * self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let iw = self.x1().min(other.x1()) - self.x0().max(other.x0());
        let ih = self.y1().min(other.y1()) - self.y0().max(other.y0());
        if iw <= 0.0 || ih <= 0.0 {
            0.0
        } else {
            iw * ih
        }
    }
}

/// A ground-truth instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    /// Score is unused for ground truth.
    pub line: TopoLine,
    pub occlusion_fraction: f64,
    pub ignore: bool,
}

impl Annotation {
    pub fn new(top: Point, bottom: Point) -> Self {
        Self {
            line: TopoLine::new(top, bottom, 1.0),
            occlusion_fraction: 0.0,
            ignore: false,
        }
    }

    pub fn with_occlusion(mut self, occlusion_fraction: f64) -> Self {
        self.occlusion_fraction = occlusion_fraction.clamp(0.0, 1.0);
        self
    }

    pub fn with_ignore(mut self, ignore: bool) -> Self {
        self.ignore = ignore;
        self
    }

    pub fn height(&self) -> f64 {
        self.line.length()
    }
}
