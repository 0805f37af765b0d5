//! Simulated detector: per-object misses, localization jitter, scored
//! background false positives, then NMS.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{fnv1a, SplitMix64};
use super::scene::sample_extent;
use super::SynthError;
use crate::dataset::labels::{extended_name, parse_extended};
use crate::dataset::{BaseCategory, DetectionFrame, FrameRecord, LabelScheme, TimeOfDay};
use crate::geometry::{nms, BBox, ScoredBox};

pub(crate) const DOMAIN_DETECTION: u64 = 3;
pub(crate) const DOMAIN_BACKGROUND: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassRates {
    pub pedestrian: f64,
    pub vehicle: f64,
    pub rider: f64,
}

impl Default for ClassRates {
    fn default() -> Self {
        Self::uniform(0.0)
    }
}

impl ClassRates {
    pub fn uniform(r: f64) -> Self {
        Self { pedestrian: r, vehicle: r, rider: r }
    }

    pub fn get(&self, c: BaseCategory) -> f64 {
        match c {
            BaseCategory::Pedestrian => self.pedestrian,
            BaseCategory::Vehicle => self.vehicle,
            BaseCategory::Rider => self.rider,
        }
    }

    pub fn set(&mut self, c: BaseCategory, r: f64) {
        match c {
            BaseCategory::Pedestrian => self.pedestrian = r,
            BaseCategory::Vehicle => self.vehicle = r,
            BaseCategory::Rider => self.rider = r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissRates {
    pub daytime: ClassRates,
    pub night: ClassRates,
}

impl MissRates {
    pub fn get(&self, c: BaseCategory, t: TimeOfDay) -> f64 {
        match t {
            TimeOfDay::Daytime => self.daytime.get(c),
            TimeOfDay::Night => self.night.get(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorModel {
    /// Per-corner Gaussian jitter at full resolution, in pixels.
    pub jitter_sigma: f64,
    /// Uniform score range `[low, high]` for detections of real objects.
    pub tp_score: [f64; 2],
    /// Uniform score range for background false positives.
    pub fp_score: [f64; 2],
    pub miss_rate: MissRates,
    /// Chance that each background slot fires in a frame.
    pub fp_rate: f64,
    pub fp_slots: u32,
    /// Input scale relative to full resolution; jitter is divided by it.
    pub resolution_factor: f64,
    pub nms_iou: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            jitter_sigma: 3.0,
            tp_score: [0.4, 1.0],
            fp_score: [0.05, 0.8],
            miss_rate: MissRates {
                daytime: ClassRates::uniform(0.1),
                night: ClassRates::uniform(0.25),
            },
            fp_rate: 0.2,
            fp_slots: 3,
            resolution_factor: 1.0,
            nms_iou: 0.5,
        }
    }
}

impl DetectorModel {
    /// No misses, no jitter, no false positives.
    pub fn perfect() -> Self {
        Self {
            jitter_sigma: 0.0,
            miss_rate: MissRates::default(),
            fp_rate: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidModel(m.to_string()));
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(self.jitter_sigma.is_finite() && self.jitter_sigma >= 0.0) {
            return bad("jitter_sigma must be finite and non-negative");
        }
        for [lo, hi] in [self.tp_score, self.fp_score] {
            if !(unit(lo) && unit(hi) && lo <= hi) {
                return bad("score ranges must satisfy 0 <= low <= high <= 1");
            }
        }
        let rates = [self.miss_rate.daytime, self.miss_rate.night];
        if !rates.iter().all(|r| BaseCategory::ALL.iter().all(|&c| unit(r.get(c)))) || !unit(self.fp_rate) {
            return bad("miss and false-positive rates must be in [0, 1]");
        }
        if !(self.resolution_factor.is_finite() && self.resolution_factor > 0.0) {
            return bad("resolution_factor must be positive");
        }
        if !unit(self.nms_iou) {
            return bad("nms_iou must be in [0, 1]");
        }
        Ok(())
    }

    fn effective_sigma(&self) -> f64 {
        self.jitter_sigma / self.resolution_factor
    }
}

/// Scheme of a record set: extended as soon as any object carries an
/// extended label.
fn scheme_of(records: &[FrameRecord]) -> LabelScheme {
    let extended = records
        .iter()
        .flat_map(|r| &r.objects)
        .any(|o| parse_extended(&o.category).is_some());
    if extended {
        LabelScheme::Extended6
    } else {
        LabelScheme::Base3
    }
}

fn base_of(label: &str) -> Result<BaseCategory, SynthError> {
    BaseCategory::parse(label)
        .or_else(|| parse_extended(label).map(|(_, c)| c))
        .ok_or_else(|| SynthError::UnknownCategory(label.to_string()))
}

fn simulate_frame(
    record: &FrameRecord,
    model: &DetectorModel,
    seed: u64,
    scheme: LabelScheme,
) -> Result<DetectionFrame, SynthError> {
    let seq_key = fnv1a(record.sequence_id.as_bytes());
    let (iw, ih) = (f64::from(record.image_width), f64::from(record.image_height));
    let sigma = model.effective_sigma();
    let mut candidates = Vec::new();

    for (i, obj) in record.objects.iter().enumerate() {
        let base = base_of(&obj.category)?;
        let mut rng = SplitMix64::keyed(seed, DOMAIN_DETECTION, seq_key, record.frame_index, i as u64);
        if rng.bernoulli(model.miss_rate.get(base, record.timeofday)) {
            continue;
        }
        let b = obj.bbox;
        let mut j = |v: f64| if sigma > 0.0 { v + sigma * rng.gaussian() } else { v };
        let (x1, y1, x2, y2) = (j(b.x1()), j(b.y1()), j(b.x2()), j(b.y2()));
        let Ok(jittered) = BBox::from_corners(x1, y1, x2, y2) else { continue };
        let bbox = jittered.clamp_to(iw, ih);
        if bbox.area() <= 0.0 {
            continue;
        }
        let score = rng.uniform(model.tp_score[0], model.tp_score[1]);
        candidates.push(ScoredBox::new(obj.category.clone(), bbox, score).expect("score within [0, 1]"));
    }

    let mut rng = SplitMix64::keyed(seed, DOMAIN_BACKGROUND, seq_key, record.frame_index, 0);
    for _ in 0..model.fp_slots {
        if !rng.bernoulli(model.fp_rate) {
            continue;
        }
        let base = BaseCategory::ALL[rng.below(3) as usize];
        let (w, h) = sample_extent(&mut rng, base, iw, ih);
        let x = rng.uniform(0.0, iw - w);
        let y = rng.uniform(0.0, ih - h);
        let score = rng.uniform(model.fp_score[0], model.fp_score[1]);
        let category = match scheme {
            LabelScheme::Base3 => base.as_str().to_string(),
            LabelScheme::Extended6 => extended_name(base, record.timeofday),
        };
        let bbox = BBox::new(x, y, (x + w).min(iw), (y + h).min(ih)).expect("background boxes are canonical");
        candidates.push(ScoredBox::new(category, bbox, score).expect("score within [0, 1]"));
    }

    Ok(DetectionFrame {
        sequence_id: record.sequence_id.clone(),
        frame_index: record.frame_index,
        detections: nms(&candidates, model.nms_iou),
    })
}

/// Emits one detection frame per ground-truth frame. Detections carry the
/// same label vocabulary as the ground truth (base or extended).
pub fn simulate_detector(
    records: &[FrameRecord],
    model: &DetectorModel,
    seed: u64,
) -> Result<Vec<DetectionFrame>, SynthError> {
    model.validate()?;
    let scheme = scheme_of(records);
    records
        .par_iter()
        .map(|r| simulate_frame(r, model, seed, scheme))
        .collect()
}
