//! Greedy per-frame matching of detections to ground truth.

use std::cmp::Ordering;

use crate::geometry::{iou, BBox, ScoredBox};

/// Detection ranking: score desc, then x1, y1, x2, y2 ascending. Callers add
/// a final positional tie-break.
pub(crate) fn detection_cmp(a: &ScoredBox, b: &ScoredBox) -> Ordering {
    b.score()
        .total_cmp(&a.score())
        .then_with(|| a.bbox.x1().total_cmp(&b.bbox.x1()))
        .then_with(|| a.bbox.y1().total_cmp(&b.bbox.y1()))
        .then_with(|| a.bbox.x2().total_cmp(&b.bbox.x2()))
        .then_with(|| a.bbox.y2().total_cmp(&b.bbox.y2()))
}

/// Matches one frame's detections of a single category against its ground
/// truth. Returns TP flags aligned with `detections` input order.
///
/// Detections are visited by rank; each takes the unmatched ground-truth box
/// with the highest IoU (lowest index on ties) when that IoU is at least
/// `iou_threshold`.
pub fn match_frame(gt: &[BBox], detections: &[ScoredBox], iou_threshold: f64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&i, &j| detection_cmp(&detections[i], &detections[j]).then(i.cmp(&j)));

    let mut taken = vec![false; gt.len()];
    let mut flags = vec![false; detections.len()];
    for i in order {
        let best = gt
            .iter()
            .enumerate()
            .filter(|(g, _)| !taken[*g])
            .map(|(g, b)| (g, iou(b, &detections[i].bbox)))
            .fold(None::<(usize, f64)>, |acc, (g, v)| match acc {
                Some((_, bv)) if bv >= v => acc,
                _ => Some((g, v)),
            });
        if let Some((g, v)) = best {
            if v >= iou_threshold {
                taken[g] = true;
                flags[i] = true;
            }
        }
    }
    flags
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    fn det(b: BBox, s: f64) -> ScoredBox {
        ScoredBox::new("vehicle", b, s).unwrap()
    }

    #[test]
    fn single_gt_exhausted() {
        let gt = [bx(0.0, 0.0, 10.0, 10.0)];
        // IoU 0.9 each: 90 / 100
        let d1 = det(bx(0.0, 0.0, 10.0, 9.0), 0.6);
        let d2 = det(bx(0.0, 1.0, 10.0, 10.0), 0.8);
        assert!((iou(&gt[0], &d1.bbox) - 0.9).abs() < 1e-12);
        assert_eq!(match_frame(&gt, &[d2.clone(), d1.clone()], 0.5), [true, false]);
        assert_eq!(match_frame(&gt, &[d1, d2], 0.5), [false, true]);
    }

    #[test]
    fn no_detections() {
        assert!(match_frame(&[bx(0.0, 0.0, 1.0, 1.0)], &[], 0.5).is_empty());
    }

    #[test]
    fn threshold_is_inclusive() {
        // intersection 50, union 100 -> exactly 0.5
        let gt = [bx(0.0, 0.0, 10.0, 10.0)];
        let d = det(bx(0.0, 0.0, 10.0, 5.0), 0.9);
        assert_eq!(iou(&gt[0], &d.bbox), 0.5);
        assert_eq!(match_frame(&gt, std::slice::from_ref(&d), 0.5), [true]);
        assert_eq!(match_frame(&gt, &[d], 0.5000001), [false]);
    }

    #[test]
    fn prefers_best_unmatched_gt() {
        let gt = [bx(0.0, 0.0, 10.0, 10.0), bx(2.0, 0.0, 12.0, 10.0)];
        // first detection overlaps gt[1] best, second can still take gt[0]
        let a = det(bx(2.0, 0.0, 12.0, 10.0), 0.9);
        let b = det(bx(1.0, 0.0, 11.0, 10.0), 0.8);
        assert_eq!(match_frame(&gt, &[a, b], 0.5), [true, true]);
    }
}
