//! Box arithmetic: intersection-over-union and class-wise greedy NMS.
//!
//! Boxes use the corner convention `(x1, y1, x2, y2)` in continuous pixel
//! coordinates, so `width = x2 - x1` with no `+1` pixel term.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("box coordinates must be finite, got ({x1}, {y1}, {x2}, {y2})")]
    NonFinite { x1: f64, y1: f64, x2: f64, y2: f64 },
    #[error("box is not canonical: expected x1 <= x2 and y1 <= y2, got ({x1}, {y1}, {x2}, {y2})")]
    NonCanonical { x1: f64, y1: f64, x2: f64, y2: f64 },
    #[error("score {0} is outside [0, 1]")]
    ScoreOutOfRange(f64),
}

/// Axis-aligned rectangle in canonical corner form.
///
/// Serialized as a four-element array `[x1, y1, x2, y2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl BBox {
    /// Builds a box, rejecting non-finite or non-canonical corners.
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, GeometryError> {
        if !(x1.is_finite() && y1.is_finite() && x2.is_finite() && y2.is_finite()) {
            return Err(GeometryError::NonFinite { x1, y1, x2, y2 });
        }
        if x1 > x2 || y1 > y2 {
            return Err(GeometryError::NonCanonical { x1, y1, x2, y2 });
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    /// Builds a box from any two opposite corners, swapping as needed.
    pub fn from_corners(xa: f64, ya: f64, xb: f64, yb: f64) -> Result<Self, GeometryError> {
        Self::new(xa.min(xb), ya.min(yb), xa.max(xb), ya.max(yb))
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }

    pub fn y1(&self) -> f64 {
        self.y1
    }

    pub fn x2(&self) -> f64 {
        self.x2
    }

    pub fn y2(&self) -> f64 {
        self.y2
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    /// Shifts the box by `(dx, dy)`.
    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self {
            x1: self.x1 + dx,
            y1: self.y1 + dy,
            x2: self.x2 + dx,
            y2: self.y2 + dy,
        }
    }

    /// Clamps the box to `[0, width] x [0, height]`. The result may have zero area.
    pub fn clamp_to(&self, width: f64, height: f64) -> Self {
        let cx = |v: f64| v.clamp(0.0, width);
        let cy = |v: f64| v.clamp(0.0, height);
        Self {
            x1: cx(self.x1),
            y1: cy(self.y1),
            x2: cx(self.x2),
            y2: cy(self.y2),
        }
    }

    pub fn within(&self, width: f64, height: f64) -> bool {
        self.x1 >= 0.0 && self.y1 >= 0.0 && self.x2 <= width && self.y2 <= height
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = (self.x2.min(other.x2) - self.x1.max(other.x1)).max(0.0);
        let h = (self.y2.min(other.y2) - self.y1.max(other.y1)).max(0.0);
        w * h
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = GeometryError;

    fn try_from(v: [f64; 4]) -> Result<Self, Self::Error> {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        b.to_array()
    }
}

/// Intersection over union. Zero when the union has zero area.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// A detector output: box, confidence and category label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredBox {
    pub category: String,
    pub bbox: BBox,
    #[serde(deserialize_with = "de_score")]
    score: f64,
}

fn de_score<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    let s = f64::deserialize(d)?;
    check_score(s).map_err(serde::de::Error::custom)
}

fn check_score(score: f64) -> Result<f64, GeometryError> {
    if (0.0..=1.0).contains(&score) {
        Ok(score)
    } else {
        Err(GeometryError::ScoreOutOfRange(score))
    }
}

impl ScoredBox {
    pub fn new(category: impl Into<String>, bbox: BBox, score: f64) -> Result<Self, GeometryError> {
        Ok(Self {
            category: category.into(),
            bbox,
            score: check_score(score)?,
        })
    }

    pub fn score(&self) -> f64 {
        self.score
    }
}

/// Ranking order shared by NMS: score desc, then x1 asc, then y1 asc.
/// Callers append their own final tie-break (usually input index).
pub(crate) fn rank_cmp(a: &ScoredBox, b: &ScoredBox) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.bbox.x1.total_cmp(&b.bbox.x1))
        .then_with(|| a.bbox.y1.total_cmp(&b.bbox.y1))
}

/// Greedy class-wise non-maximum suppression.
///
/// Candidates are visited in order (score desc, x1 asc, y1 asc, input index
/// asc). A candidate is discarded when a previously kept box of the same
/// category overlaps it with IoU strictly greater than `iou_threshold`.
/// Output is in visiting order.
pub fn nms(candidates: &[ScoredBox], iou_threshold: f64) -> Vec<ScoredBox> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&i, &j| rank_cmp(&candidates[i], &candidates[j]).then(i.cmp(&j)));

    let mut kept: Vec<&ScoredBox> = Vec::new();
    for i in order {
        let cand = &candidates[i];
        let suppressed = kept
            .iter()
            .any(|k| k.category == cand.category && iou(&k.bbox, &cand.bbox) > iou_threshold);
        if !suppressed {
            kept.push(cand);
        }
    }
    kept.into_iter().cloned().collect()
}
