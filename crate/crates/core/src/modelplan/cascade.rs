//! Positive/negative proposal assignment for a cascade of detection heads
//! trained at increasing IoU thresholds.

use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::dataset::GroundTruthObject;
use crate::geometry::{iou, BBox};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig {
    thresholds: Vec<f64>,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self { thresholds: vec![0.5, 0.6, 0.7] }
    }
}

impl CascadeConfig {
    /// Thresholds must be strictly increasing and lie in (0, 1].
    pub fn new(thresholds: Vec<f64>) -> Result<Self, PlanError> {
        if thresholds.is_empty() {
            return Err(PlanError::Cascade("at least one stage is required".into()));
        }
        if let Some(t) = thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(PlanError::Cascade(format!("threshold {t} is outside (0, 1]")));
        }
        if thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PlanError::Cascade("thresholds must be strictly increasing".into()));
        }
        Ok(Self { thresholds })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeAssignment {
    /// Best IoU of each proposal against any ground truth (0 without GT).
    pub best_iou: Vec<f64>,
    /// Index of that ground truth, if any.
    pub best_gt: Vec<Option<usize>>,
    /// `positive[stage][proposal]`.
    pub positive: Vec<Vec<bool>>,
}

impl CascadeAssignment {
    pub fn positives(&self, stage: usize) -> usize {
        self.positive[stage].iter().filter(|&&p| p).count()
    }
}

pub fn cascade_assign(proposals: &[BBox], gt: &[GroundTruthObject], config: &CascadeConfig) -> CascadeAssignment {
    let (best_iou, best_gt): (Vec<f64>, Vec<Option<usize>>) = proposals
        .iter()
        .map(|p| {
            gt.iter()
                .enumerate()
                .map(|(g, obj)| (iou(p, &obj.bbox), g))
                .fold((0.0, None), |(bv, bg), (v, g)| if v > bv { (v, Some(g)) } else { (bv, bg) })
        })
        .unzip();
    let positive = config
        .thresholds
        .iter()
        .map(|&t| best_iou.iter().map(|&v| v >= t).collect())
        .collect();
    CascadeAssignment { best_iou, best_gt, positive }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gt(b: BBox) -> GroundTruthObject {
        GroundTruthObject::new("vehicle", b)
    }

    #[test]
    fn stages_by_threshold() {
        let g = BBox::new(0.0, 0.0, 100.0, 100.0).unwrap();
        // IoU = 6500 / 10000 = 0.65
        let p = BBox::new(0.0, 0.0, 100.0, 65.0).unwrap();
        let a = cascade_assign(&[p, g], &[gt(g)], &CascadeConfig::default());
        assert!((a.best_iou[0] - 0.65).abs() < 1e-12);
        let col = |i: usize| a.positive.iter().map(|s| s[i]).collect::<Vec<_>>();
        assert_eq!(col(0), [true, true, false]);
        assert_eq!(col(1), [true, true, true]);
        assert_eq!(a.best_gt[1], Some(0));
    }

    #[test]
    fn no_gt_all_negative() {
        let p = BBox::new(0.0, 0.0, 1.0, 1.0).unwrap();
        let a = cascade_assign(&[p, p], &[], &CascadeConfig::default());
        assert!(a.positive.iter().flatten().all(|&x| !x));
        assert_eq!(a.best_gt, [None, None]);
    }

    #[test]
    fn config_validation() {
        assert!(CascadeConfig::new(vec![0.5, 0.5]).is_err());
        assert!(CascadeConfig::new(vec![0.7, 0.6]).is_err());
        assert!(CascadeConfig::new(vec![0.0, 0.6]).is_err());
        assert!(CascadeConfig::new(vec![0.5, 1.1]).is_err());
        assert!(CascadeConfig::new(vec![]).is_err());
        assert_eq!(CascadeConfig::new(vec![0.5, 0.6, 0.7]).unwrap(), CascadeConfig::default());
    }
}
