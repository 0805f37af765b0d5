//! Detection scoring: greedy IoU matching, precision/recall curves, AP under
//! the all-point (VOC2012) and 101-point (COCO) interpolations, and mAP.
//!
//! Both interpolations share one precision envelope; they differ only in
//! where the envelope is sampled, which is enough to make them disagree on
//! the same ranking.

mod ap;
mod matching;

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DetectionFrame, FrameKeys, FrameRecord, LabelScheme};
use crate::geometry::{BBox, ScoredBox};

pub use ap::{ap_coco101, ap_voc2012, pr_curve, PrCurve, PrPoint, COCO_RECALL_POINTS};
pub use matching::match_frame;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("IoU threshold must be in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("detections reference unknown frame ({sequence_id}, {frame_index})")]
    UnknownFrame { sequence_id: String, frame_index: u64 },
    #[error("{side} category {category:?} is not in the evaluated class set")]
    UnknownCategory { side: &'static str, category: String },
    #[error("duplicate {side} frame ({sequence_id}, {frame_index})")]
    DuplicateFrame {
        side: &'static str,
        sequence_id: String,
        frame_index: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApVariant {
    /// All-point interpolation.
    Voc2012,
    /// 101-point interpolation at a single IoU threshold.
    Coco101,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub iou_threshold: f64,
    pub variant: ApVariant,
    pub class_set: Vec<String>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            variant: ApVariant::Voc2012,
            class_set: LabelScheme::Base3.vocabulary(),
        }
    }
}

impl EvalConfig {
    pub fn for_scheme(scheme: LabelScheme) -> Self {
        Self { class_set: scheme.vocabulary(), ..Self::default() }
    }

    pub fn with_variant(mut self, variant: ApVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_iou_threshold(mut self, t: f64) -> Self {
        self.iou_threshold = t;
        self
    }

    fn validate(&self) -> Result<(), EvalError> {
        if self.iou_threshold > 0.0 && self.iou_threshold <= 1.0 {
            Ok(())
        } else {
            Err(EvalError::InvalidThreshold(self.iou_threshold))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassResult {
    pub class: String,
    pub gt: usize,
    pub tp: usize,
    pub fp: usize,
    /// `None` when the class has no ground truth.
    pub ap_voc2012: Option<f64>,
    pub ap_coco101: Option<f64>,
}

impl ClassResult {
    pub fn ap(&self, variant: ApVariant) -> Option<f64> {
        match variant {
            ApVariant::Voc2012 => self.ap_voc2012,
            ApVariant::Coco101 => self.ap_coco101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub classes: Vec<ClassResult>,
    /// Mean over classes with at least one ground-truth instance.
    pub map_voc2012: Option<f64>,
    pub map_coco101: Option<f64>,
    pub classes_without_gt: Vec<String>,
}

impl EvalReport {
    /// mAP under the configured variant.
    pub fn map(&self) -> Option<f64> {
        self.map_for(self.config.variant)
    }

    pub fn map_for(&self, variant: ApVariant) -> Option<f64> {
        match variant {
            ApVariant::Voc2012 => self.map_voc2012,
            ApVariant::Coco101 => self.map_coco101,
        }
    }

    pub fn class(&self, name: &str) -> Option<&ClassResult> {
        self.classes.iter().find(|c| c.class == name)
    }

    /// True when the two interpolations differ by more than `tol` on mAP.
    pub fn variants_diverge(&self, tol: f64) -> bool {
        match (self.map_voc2012, self.map_coco101) {
            (Some(a), Some(b)) => (a - b).abs() > tol,
            _ => false,
        }
    }

    /// Per-class table with a trailing mAP row:
    /// `class,gt,tp,fp,ap_voc2012,ap_coco101`. Classes without ground truth
    /// leave the AP fields empty.
    pub fn to_csv(&self) -> String {
        self.to_csv_for(&[ApVariant::Voc2012, ApVariant::Coco101])
    }

    /// Same table with only the AP columns of `variants`, in that order.
    pub fn to_csv_for(&self, variants: &[ApVariant]) -> String {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["class", "gt", "tp", "fp"];
        header.extend(variants.iter().map(|v| match v {
            ApVariant::Voc2012 => "ap_voc2012",
            ApVariant::Coco101 => "ap_coco101",
        }));
        w.write_record(&header).expect("writing to memory");
        for c in &self.classes {
            let mut rec = vec![c.class.clone(), c.gt.to_string(), c.tp.to_string(), c.fp.to_string()];
            rec.extend(variants.iter().map(|&v| fmt(c.ap(v))));
            w.write_record(&rec).expect("writing to memory");
        }
        let sum = |f: fn(&ClassResult) -> usize| self.classes.iter().map(f).sum::<usize>().to_string();
        let mut rec = vec!["mAP".to_string(), sum(|c| c.gt), sum(|c| c.tp), sum(|c| c.fp)];
        rec.extend(variants.iter().map(|&v| fmt(self.map_for(v))));
        w.write_record(&rec).expect("writing to memory");
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv is UTF-8")
    }
}

struct Ranked<'a> {
    det: &'a ScoredBox,
    sequence_id: &'a str,
    frame_index: u64,
    position: usize,
    tp: bool,
}

fn rank_cmp(a: &Ranked<'_>, b: &Ranked<'_>) -> std::cmp::Ordering {
    matching::detection_cmp(a.det, b.det)
        .then_with(|| a.sequence_id.cmp(b.sequence_id))
        .then_with(|| a.frame_index.cmp(&b.frame_index))
        .then_with(|| a.position.cmp(&b.position))
}

fn evaluate_class(
    class: &str,
    gt: &[FrameRecord],
    det_by_frame: &HashMap<(&str, u64), &DetectionFrame>,
    iou_threshold: f64,
) -> ClassResult {
    let mut gt_total = 0;
    let mut ranked: Vec<Ranked<'_>> = Vec::new();
    for frame in gt {
        let gt_boxes: Vec<BBox> = frame
            .objects
            .iter()
            .filter(|o| o.category == class)
            .map(|o| o.bbox)
            .collect();
        gt_total += gt_boxes.len();
        let Some(df) = det_by_frame.get(&(frame.sequence_id.as_str(), frame.frame_index)) else {
            continue;
        };
        let dets: Vec<ScoredBox> = df.detections.iter().filter(|d| d.category == class).cloned().collect();
        if dets.is_empty() {
            continue;
        }
        let flags = match_frame(&gt_boxes, &dets, iou_threshold);
        let class_dets = df.detections.iter().filter(|d| d.category == class);
        for (position, (det, tp)) in class_dets.zip(flags).enumerate() {
            ranked.push(Ranked {
                det,
                sequence_id: &frame.sequence_id,
                frame_index: frame.frame_index,
                position,
                tp,
            });
        }
    }
    ranked.sort_by(rank_cmp);
    let flags: Vec<bool> = ranked.iter().map(|r| r.tp).collect();
    let tp = flags.iter().filter(|&&f| f).count();
    let curve = pr_curve(&flags, gt_total);
    ClassResult {
        class: class.to_string(),
        gt: gt_total,
        tp,
        fp: flags.len() - tp,
        ap_voc2012: curve.as_ref().map(ap_voc2012),
        ap_coco101: curve.as_ref().map(ap_coco101),
    }
}

fn mean_ap(classes: &[ClassResult], variant: ApVariant) -> Option<f64> {
    let aps: Vec<f64> = classes.iter().filter_map(|c| c.ap(variant)).collect();
    (!aps.is_empty()).then(|| aps.iter().sum::<f64>() / aps.len() as f64)
}

fn evaluate_impl(
    gt: &[FrameRecord],
    detections: &[DetectionFrame],
    config: &EvalConfig,
    parallel: bool,
) -> Result<EvalReport, EvalError> {
    config.validate()?;
    let classes: BTreeSet<&str> = config.class_set.iter().map(String::as_str).collect();

    let mut keys = FrameKeys::default();
    for frame in gt {
        keys.insert(&frame.sequence_id, frame.frame_index)
            .map_err(|_| EvalError::DuplicateFrame {
                side: "ground-truth",
                sequence_id: frame.sequence_id.clone(),
                frame_index: frame.frame_index,
            })?;
        if let Some(o) = frame.objects.iter().find(|o| !classes.contains(o.category.as_str())) {
            return Err(EvalError::UnknownCategory { side: "ground-truth", category: o.category.clone() });
        }
    }

    let mut det_by_frame: HashMap<(&str, u64), &DetectionFrame> = HashMap::new();
    for df in detections {
        if !keys.contains(&df.sequence_id, df.frame_index) {
            return Err(EvalError::UnknownFrame {
                sequence_id: df.sequence_id.clone(),
                frame_index: df.frame_index,
            });
        }
        if let Some(d) = df.detections.iter().find(|d| !classes.contains(d.category.as_str())) {
            return Err(EvalError::UnknownCategory { side: "detection", category: d.category.clone() });
        }
        if det_by_frame.insert((&df.sequence_id, df.frame_index), df).is_some() {
            return Err(EvalError::DuplicateFrame {
                side: "detection",
                sequence_id: df.sequence_id.clone(),
                frame_index: df.frame_index,
            });
        }
    }

    let run = |class: &String| evaluate_class(class, gt, &det_by_frame, config.iou_threshold);
    let results: Vec<ClassResult> = if parallel {
        config.class_set.par_iter().map(run).collect()
    } else {
        config.class_set.iter().map(run).collect()
    };

    Ok(EvalReport {
        config: config.clone(),
        map_voc2012: mean_ap(&results, ApVariant::Voc2012),
        map_coco101: mean_ap(&results, ApVariant::Coco101),
        classes_without_gt: results.iter().filter(|c| c.gt == 0).map(|c| c.class.clone()).collect(),
        classes: results,
    })
}

/// Scores `detections` against `gt` for every class in `config.class_set`.
/// Classes are evaluated in parallel; the result equals a serial run.
pub fn evaluate(
    gt: &[FrameRecord],
    detections: &[DetectionFrame],
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    evaluate_impl(gt, detections, config, true)
}

/// Serial reference path of [`evaluate`].
pub fn evaluate_serial(
    gt: &[FrameRecord],
    detections: &[DetectionFrame],
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    evaluate_impl(gt, detections, config, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{GroundTruthObject, TimeOfDay};

    fn bx(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    fn gt_frame(seq: &str, idx: u64, objs: &[(&str, BBox)]) -> FrameRecord {
        FrameRecord {
            sequence_id: seq.into(),
            frame_index: idx,
            image_width: 100,
            image_height: 100,
            timeofday: TimeOfDay::Daytime,
            objects: objs.iter().map(|(c, b)| GroundTruthObject::new(*c, *b)).collect(),
        }
    }

    fn det_frame(seq: &str, idx: u64, dets: &[(&str, BBox, f64)]) -> DetectionFrame {
        DetectionFrame {
            sequence_id: seq.into(),
            frame_index: idx,
            detections: dets.iter().map(|(c, b, s)| ScoredBox::new(*c, *b, *s).unwrap()).collect(),
        }
    }

    /// Two vehicle GTs in two frames; ranking TP, FP, TP.
    pub(crate) fn worked_fixture() -> (Vec<FrameRecord>, Vec<DetectionFrame>) {
        let a = bx(0.0, 0.0, 10.0, 10.0);
        let b = bx(50.0, 50.0, 70.0, 70.0);
        let gt = vec![gt_frame("s", 0, &[("vehicle", a)]), gt_frame("s", 1, &[("vehicle", b)])];
        let det = vec![
            det_frame("s", 0, &[("vehicle", a, 0.9), ("vehicle", bx(80.0, 80.0, 90.0, 90.0), 0.8)]),
            det_frame("s", 1, &[("vehicle", b, 0.7)]),
        ];
        (gt, det)
    }

    #[test]
    fn worked_fixture_single_class() {
        let (gt, det) = worked_fixture();
        let r = evaluate(&gt, &det, &EvalConfig::default()).unwrap();
        let v = r.class("vehicle").unwrap();
        assert_eq!((v.gt, v.tp, v.fp), (2, 2, 1));
        let voc = v.ap_voc2012.unwrap();
        assert!((voc - 0.8333).abs() < 1e-4);
        assert!((v.ap_coco101.unwrap() - 0.8350).abs() < 1e-4);
        // pedestrian and rider have no GT and are excluded
        assert_eq!(r.classes_without_gt, ["pedestrian", "rider"]);
        assert_eq!(r.map_voc2012, Some(voc));
        assert!(r.variants_diverge(1e-6));
    }

    #[test]
    fn perfect_and_empty_detections() {
        let (gt, _) = worked_fixture();
        let perfect: Vec<DetectionFrame> = gt
            .iter()
            .map(|f| DetectionFrame {
                sequence_id: f.sequence_id.clone(),
                frame_index: f.frame_index,
                detections: f
                    .objects
                    .iter()
                    .map(|o| ScoredBox::new(o.category.clone(), o.bbox, 1.0).unwrap())
                    .collect(),
            })
            .collect();
        let r = evaluate(&gt, &perfect, &EvalConfig::default()).unwrap();
        assert_eq!(r.map_voc2012, Some(1.0));
        assert_eq!(r.map_coco101, Some(1.0));

        let r = evaluate(&gt, &[], &EvalConfig::default()).unwrap();
        assert_eq!(r.map_voc2012, Some(0.0));
        assert_eq!(r.map_coco101, Some(0.0));
    }

    #[test]
    fn no_ground_truth_at_all() {
        let r = evaluate(&[gt_frame("s", 0, &[])], &[], &EvalConfig::default()).unwrap();
        assert_eq!(r.map_voc2012, None);
        assert_eq!(r.classes_without_gt.len(), 3);
    }

    #[test]
    fn error_paths() {
        let (gt, det) = worked_fixture();
        let stray = vec![det_frame("other", 0, &[])];
        assert!(matches!(
            evaluate(&gt, &stray, &EvalConfig::default()),
            Err(EvalError::UnknownFrame { .. })
        ));
        let night = vec![det_frame("s", 0, &[("night_vehicle", bx(0.0, 0.0, 1.0, 1.0), 0.5)])];
        assert!(matches!(
            evaluate(&gt, &night, &EvalConfig::default()),
            Err(EvalError::UnknownCategory { side: "detection", .. })
        ));
        assert!(matches!(
            evaluate(&gt, &det, &EvalConfig::default().with_iou_threshold(0.0)),
            Err(EvalError::InvalidThreshold(_))
        ));
        let dup = vec![det[0].clone(), det[0].clone()];
        assert!(matches!(
            evaluate(&gt, &dup, &EvalConfig::default()),
            Err(EvalError::DuplicateFrame { side: "detection", .. })
        ));
    }

    #[test]
    fn csv_layout() {
        let (gt, det) = worked_fixture();
        let csv = evaluate(&gt, &det, &EvalConfig::default()).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "class,gt,tp,fp,ap_voc2012,ap_coco101");
        assert_eq!(lines[1], "pedestrian,0,0,0,,");
        assert_eq!(lines[2], "vehicle,2,2,1,0.833333,0.834983");
        assert_eq!(lines[4], "mAP,2,2,1,0.833333,0.834983");
    }

    #[test]
    fn parallel_equals_serial() {
        let (gt, det) = worked_fixture();
        let cfg = EvalConfig::default();
        assert_eq!(evaluate(&gt, &det, &cfg).unwrap(), evaluate_serial(&gt, &det, &cfg).unwrap());
    }
}
