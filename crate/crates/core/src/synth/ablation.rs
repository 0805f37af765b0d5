//! One-knob-at-a-time sweeps: each value runs its pipeline transform, then
//! a full evaluation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{generate_dataset, simulate_detector, DetectorModel, SceneModel, SynthError};
use crate::dataset::{extend_labels, parse_sampling_rate, sample_sequences, DetectionFrame, FrameRecord, LabelScheme, SamplePlan};
use crate::eval::{evaluate, EvalConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationAxis {
    /// Keep one frame in N per sequence of both GT and detections. Values
    /// are written `1`, `1/10`, `1/20`, ...
    SamplingRate,
    /// Scales detector jitter by `1 / factor`.
    ResolutionFactor,
    /// `base3` or `extended6`.
    LabelScheme,
}

impl AblationAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SamplingRate => "sampling_rate",
            Self::ResolutionFactor => "resolution_factor",
            Self::LabelScheme => "label_scheme",
        }
    }
}

impl fmt::Display for AblationAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AblationAxis {
    type Err = SynthError;
    fn from_str(s: &str) -> Result<Self, SynthError> {
        match s {
            "sampling_rate" => Ok(Self::SamplingRate),
            "resolution_factor" => Ok(Self::ResolutionFactor),
            "label_scheme" => Ok(Self::LabelScheme),
            _ => Err(SynthError::Config(format!(
                "unknown ablation axis {s:?} (expected sampling_rate, resolution_factor or label_scheme)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub value: String,
    /// Ground-truth frames evaluated.
    pub frames: usize,
    pub map_voc2012: Option<f64>,
    pub map_coco101: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub axis: AblationAxis,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    /// Columns `<axis>,frames,map_voc2012,map_coco101`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([self.axis.as_str(), "frames", "map_voc2012", "map_coco101"])
            .expect("writing to memory");
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for r in &self.rows {
            w.write_record([r.value.clone(), r.frames.to_string(), fmt(r.map_voc2012), fmt(r.map_coco101)])
                .expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv is UTF-8")
    }
}

fn invalid(axis: AblationAxis, value: &str, reason: impl Into<String>) -> SynthError {
    SynthError::InvalidAxisValue { axis: axis.as_str(), value: value.to_string(), reason: reason.into() }
}

fn parse_rate(value: &str) -> Result<usize, SynthError> {
    parse_sampling_rate(value).map_err(|e| invalid(AblationAxis::SamplingRate, value, e.to_string()))
}

fn parse_factor(value: &str) -> Result<f64, SynthError> {
    match value.trim().parse::<f64>() {
        Ok(f) if f.is_finite() && f > 0.0 => Ok(f),
        _ => Err(invalid(AblationAxis::ResolutionFactor, value, "factor must be a positive number")),
    }
}

fn parse_scheme(value: &str) -> Result<LabelScheme, SynthError> {
    match value.trim() {
        "base3" => Ok(LabelScheme::Base3),
        "extended6" => Ok(LabelScheme::Extended6),
        _ => Err(invalid(AblationAxis::LabelScheme, value, "expected base3 or extended6")),
    }
}

fn row(value: &str, gt: &[FrameRecord], det: &[DetectionFrame], cfg: &EvalConfig) -> Result<AblationRow, SynthError> {
    let report = evaluate(gt, det, cfg)?;
    Ok(AblationRow {
        value: value.trim().to_string(),
        frames: gt.len(),
        map_voc2012: report.map_voc2012,
        map_coco101: report.map_coco101,
    })
}

/// Runs one evaluation per value. All values are parsed before any work so a
/// bad value fails fast. Every row sees the same scene and detector seeds.
pub fn ablation_harness(
    scene: &SceneModel,
    detector: &DetectorModel,
    detector_seed: u64,
    axis: AblationAxis,
    values: &[String],
) -> Result<AblationTable, SynthError> {
    if values.is_empty() {
        return Err(SynthError::NoAxisValues);
    }
    detector.validate()?;
    let gt = generate_dataset(scene)?;
    let base_cfg = EvalConfig::default();

    let rows = match axis {
        AblationAxis::SamplingRate => {
            let rates = values.iter().map(|v| parse_rate(v)).collect::<Result<Vec<_>, _>>()?;
            let det = simulate_detector(&gt, detector, detector_seed)?;
            values
                .iter()
                .zip(rates)
                .map(|(v, n)| {
                    let plan = SamplePlan::from_keys(gt.iter().map(FrameRecord::key), n)?;
                    let sampled_gt = sample_sequences(gt.clone(), n)?;
                    let sampled_det: Vec<DetectionFrame> = det
                        .iter()
                        .filter(|d| plan.keeps(&d.sequence_id, d.frame_index))
                        .cloned()
                        .collect();
                    row(v, &sampled_gt, &sampled_det, &base_cfg)
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        AblationAxis::ResolutionFactor => {
            let factors = values.iter().map(|v| parse_factor(v)).collect::<Result<Vec<_>, _>>()?;
            values
                .iter()
                .zip(factors)
                .map(|(v, f)| {
                    let model = DetectorModel { resolution_factor: f, ..detector.clone() };
                    let det = simulate_detector(&gt, &model, detector_seed)?;
                    row(v, &gt, &det, &base_cfg)
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        AblationAxis::LabelScheme => {
            let schemes = values.iter().map(|v| parse_scheme(v)).collect::<Result<Vec<_>, _>>()?;
            values
                .iter()
                .zip(schemes)
                .map(|(v, scheme)| {
                    let gt = match scheme {
                        LabelScheme::Base3 => gt.clone(),
                        LabelScheme::Extended6 => extend_labels(gt.clone())?,
                    };
                    let det = simulate_detector(&gt, detector, detector_seed)?;
                    row(v, &gt, &det, &EvalConfig::for_scheme(scheme))
                })
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    Ok(AblationTable { axis, rows })
}
