//! Precision/recall curves and the two average-precision interpolations.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
    pub tp: usize,
    pub fp: usize,
}

/// Cumulative precision/recall over a score-ranked list of detections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub gt_total: usize,
}

impl PrCurve {
    /// Builds the curve from ranked TP/FP flags. `None` when there is no
    /// ground truth, since recall is undefined.
    pub fn from_flags(flags: &[bool], gt_total: usize) -> Option<Self> {
        if gt_total == 0 {
            return None;
        }
        let mut tp = 0;
        let points = flags
            .iter()
            .enumerate()
            .map(|(i, &hit)| {
                tp += usize::from(hit);
                let rank = i + 1;
                PrPoint {
                    recall: tp as f64 / gt_total as f64,
                    precision: tp as f64 / rank as f64,
                    tp,
                    fp: rank - tp,
                }
            })
            .collect();
        Some(Self { points, gt_total })
    }

    /// `envelope[i]` = max precision over points `i..`.
    fn envelope(&self) -> Vec<f64> {
        let mut env: Vec<f64> = self.points.iter().map(|p| p.precision).collect();
        for i in (0..env.len().saturating_sub(1)).rev() {
            env[i] = env[i].max(env[i + 1]);
        }
        env
    }
}

pub fn pr_curve(flags: &[bool], gt_total: usize) -> Option<PrCurve> {
    PrCurve::from_flags(flags, gt_total)
}

/// All-point interpolated AP: the sum over each recall increase of
/// `(r_i - r_{i-1}) * p_interp(r_i)`, where `p_interp(r)` is the best
/// precision at any recall `>= r`.
pub fn ap_voc2012(curve: &PrCurve) -> f64 {
    let env = curve.envelope();
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (p, &best) in curve.points.iter().zip(&env) {
        if p.recall > prev_recall {
            ap += (p.recall - prev_recall) * best;
            prev_recall = p.recall;
        }
    }
    ap
}

/// Number of recall sample points of the 101-point interpolation.
pub const COCO_RECALL_POINTS: usize = 101;

/// 101-point interpolated AP: mean of `p_interp(r)` over
/// `r = 0.00, 0.01, ..., 1.00`, with `p_interp = 0` beyond the last recall.
pub fn ap_coco101(curve: &PrCurve) -> f64 {
    let env = curve.envelope();
    let mut sum = 0.0;
    for k in 0..COCO_RECALL_POINTS {
        let r = k as f64 / 100.0;
        let first = curve.points.partition_point(|p| p.recall < r);
        if let Some(&best) = env.get(first) {
            sum += best;
        }
    }
    sum / COCO_RECALL_POINTS as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    const TP: bool = true;
    const FP: bool = false;

    #[test]
    fn curve_points() {
        let c = pr_curve(&[TP], 1).unwrap();
        assert_eq!((c.points[0].recall, c.points[0].precision), (1.0, 1.0));

        let c = pr_curve(&[TP, FP, TP], 2).unwrap();
        let pts: Vec<_> = c.points.iter().map(|p| (p.recall, p.precision)).collect();
        assert_eq!(pts, [(0.5, 1.0), (0.5, 0.5), (1.0, 2.0 / 3.0)]);
        assert_eq!(c.points[2].tp, 2);
        assert_eq!(c.points[2].fp, 1);

        let c = pr_curve(&[FP, FP], 3).unwrap();
        assert!(c.points.iter().all(|p| p.recall == 0.0));
        assert!(pr_curve(&[TP], 0).is_none());
    }

    #[test]
    fn worked_fixture_diverges() {
        let c = pr_curve(&[TP, FP, TP], 2).unwrap();
        let voc = ap_voc2012(&c);
        let coco = ap_coco101(&c);
        assert!((voc - (0.5 + 0.5 * 2.0 / 3.0)).abs() < 1e-12);
        assert!((coco - (51.0 + 50.0 * 2.0 / 3.0) / 101.0).abs() < 1e-12);
        assert!((voc - 0.8333).abs() < 1e-4);
        assert!((coco - 0.8350).abs() < 1e-4);
        assert!(voc != coco);
    }

    #[test]
    fn perfect_and_empty() {
        let c = pr_curve(&[TP, TP, TP], 3).unwrap();
        assert_eq!(ap_voc2012(&c), 1.0);
        assert_eq!(ap_coco101(&c), 1.0);

        let none = pr_curve(&[FP, FP], 2).unwrap();
        assert_eq!(ap_voc2012(&none), 0.0);
        assert_eq!(ap_coco101(&none), 0.0);

        let blank = pr_curve(&[], 4).unwrap();
        assert_eq!(ap_voc2012(&blank), 0.0);
        assert_eq!(ap_coco101(&blank), 0.0);
    }

    #[test]
    fn partial_recall_is_capped() {
        // recall tops out at 0.5; points beyond contribute zero
        let c = pr_curve(&[TP], 2).unwrap();
        assert_eq!(ap_voc2012(&c), 0.5);
        assert!((ap_coco101(&c) - 51.0 / 101.0).abs() < 1e-15);
    }
}
