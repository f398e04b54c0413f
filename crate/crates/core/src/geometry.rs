//! Axis-aligned boxes in top-left/width/height form and the Kalman
//! measurement parameterization `(cx, cy, aspect, h)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A box in pixel coordinates, stored as top-left corner plus size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

/// Kalman measurement vector: center x, center y, aspect ratio (w/h), height.
pub type Measurement = [f64; 4];

impl BoundingBox {
    /// Builds a box, rejecting non-finite values and non-positive sizes.
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        let b = BoundingBox { x, y, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()) {
            return Err(Error::InvalidBox(format!("non-finite value in {self:?}")));
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(Error::InvalidBox(format!(
                "non-positive size {}x{}",
                self.w, self.h
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    #[inline]
    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    #[inline]
    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    #[inline]
    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        BoundingBox {
            x: self.x + dx,
            y: self.y + dy,
            ..*self
        }
    }
}

/// Intersection over union of two valid boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    Ok(iou_unchecked(a, b))
}

/// IoU without validation, for hot loops over boxes already known to be valid.
#[inline]
pub(crate) fn iou_unchecked(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = a.right().min(b.right()) - a.x.max(b.x);
    let ih = a.bottom().min(b.bottom()) - a.y.max(b.y);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

pub fn box_to_measurement(b: &BoundingBox) -> Result<Measurement> {
    b.validate()?;
    let (cx, cy) = b.center();
    Ok([cx, cy, b.w / b.h, b.h])
}

pub fn measurement_to_box(m: &Measurement) -> Result<BoundingBox> {
    let [cx, cy, aspect, h] = *m;
    if !(h > 0.0) || !(aspect > 0.0) {
        return Err(Error::InvalidMeasurement(format!(
            "aspect {aspect} and height {h} must be positive"
        )));
    }
    let w = aspect * h;
    BoundingBox::new(cx - w / 2.0, cy - h / 2.0, w, h)
}
