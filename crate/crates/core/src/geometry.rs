//! Axis-aligned boxes in page pixel space.
//!
//! Origin is the top-left corner of the rasterized page, x grows to the right
//! and y grows downward. Boxes are stored in center form and only converted to
//! corner form where a computation needs edges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A located region `(x_c, y_c, w, h)` in absolute page pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_c: f64,
    pub y_c: f64,
    pub w: f64,
    pub h: f64,
}

/// Corner form `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corners {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BoundingBox {
    /// Builds a box, rejecting non-positive or non-finite extents.
    pub fn new(x_c: f64, y_c: f64, w: f64, h: f64) -> Result<Self> {
        let b = BoundingBox { x_c, y_c, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_c, self.y_c, self.w, self.h]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidBox(format!("non-finite component in {self}")));
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(Error::InvalidBox(format!("non-positive extent in {self}")));
        }
        Ok(())
    }

    pub fn corners(&self) -> Corners {
        Corners {
            x0: self.x_c - self.w / 2.0,
            y0: self.y_c - self.h / 2.0,
            x1: self.x_c + self.w / 2.0,
            y1: self.y_c + self.h / 2.0,
        }
    }

    pub fn from_corners(c: Corners) -> Result<Self> {
        BoundingBox::new(
            (c.x0 + c.x1) / 2.0,
            (c.y0 + c.y1) / 2.0,
            c.x1 - c.x0,
            c.y1 - c.y0,
        )
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x_c, self.y_c)
    }
}

impl std::fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {}, {})", self.x_c, self.y_c, self.w, self.h)
    }
}

impl Corners {
    /// Intersection rectangle, `None` when the overlap has zero area.
    pub fn intersect(&self, other: &Corners) -> Option<Corners> {
        let c = Corners {
            x0: self.x0.max(other.x0),
            y0: self.y0.max(other.y0),
            x1: self.x1.min(other.x1),
            y1: self.y1.min(other.y1),
        };
        (c.x1 > c.x0 && c.y1 > c.y0).then_some(c)
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Intersection over union of two boxes, computed in corner form.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    Ok(iou_unchecked(a, b))
}

pub(crate) fn iou_unchecked(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ca, cb) = (a.corners(), b.corners());
    let inter = match ca.intersect(&cb) {
        Some(c) => c.area(),
        None => return 0.0,
    };
    let union = ca.area() + cb.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Euclidean distance between box centers.
pub fn center_distance(a: &BoundingBox, b: &BoundingBox) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    Ok(center_distance_unchecked(a, b))
}

pub(crate) fn center_distance_unchecked(a: &BoundingBox, b: &BoundingBox) -> f64 {
    (a.x_c - b.x_c).hypot(a.y_c - b.y_c)
}
