//! Annotation records and the data transforms applied before training and
//! evaluation: category remapping, day/night label extension and merging,
//! and uniform per-sequence frame sampling.

mod bdd;
mod canonical;
mod detections;
pub mod labels;
mod remap;
mod sampling;

use std::collections::HashSet;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BBox, ScoredBox};

pub use bdd::{parse_bdd_annotations, BddOptions, BddParse, BddWarnings};
pub use canonical::{parse_canonical, write_canonical, CanonicalReader, CanonicalWriter, CANONICAL_HEADER};
pub use detections::{parse_detections, write_detections, DetectionFrame, DetectionReader};
pub use labels::{BaseCategory, LabelScheme, TimeOfDay};
pub use remap::{remap_categories, CategoryMap, RemapRule, RemapStats};
pub use sampling::{parse_sampling_rate, sample_sequences, SamplePlan};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("malformed annotation file at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("missing or unrecognized header line, expected {expected}")]
    Header { expected: String },
    #[error("duplicate frame ({sequence_id}, {frame_index})")]
    DuplicateFrame { sequence_id: String, frame_index: u64 },
    #[error("frame ({sequence_id}, {frame_index}): box {bbox:?} lies outside the {width}x{height} image")]
    BoxOutOfBounds {
        sequence_id: String,
        frame_index: u64,
        bbox: [f64; 4],
        width: u32,
        height: u32,
    },
    #[error("frame ({sequence_id}, {frame_index}): box {bbox:?} has zero area")]
    DegenerateBox { sequence_id: String, frame_index: u64, bbox: [f64; 4] },
    #[error("unknown timeofday value {0:?}")]
    UnknownTimeOfDay(String),
    #[error("no category rule for: {}", .0.join(", "))]
    UnknownCategories(Vec<String>),
    #[error("label {0:?} is already extended")]
    AlreadyExtended(String),
    #[error("label {0:?} is not an extended day/night label")]
    NotExtended(String),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("sampling rate denominator must be at least 1")]
    InvalidSamplingRate,
    #[error("invalid sampling rate {0:?}, expected N or 1/N with N >= 1")]
    BadSamplingRate(String),
    #[error("invalid category map: {0}")]
    CategoryMap(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl DatasetError {
    /// Attaches a 1-based line number to errors that do not carry one.
    pub fn at_line(self, line: usize) -> Self {
        match self {
            e @ (Self::Syntax { .. } | Self::Line { .. } | Self::Io(_)) => e,
            other => Self::Line { line, message: other.to_string() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthObject {
    pub category: String,
    pub bbox: BBox,
}

impl GroundTruthObject {
    pub fn new(category: impl Into<String>, bbox: BBox) -> Self {
        Self { category: category.into(), bbox }
    }
}

/// One annotated frame of a video sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub sequence_id: String,
    pub frame_index: u64,
    pub image_width: u32,
    pub image_height: u32,
    pub timeofday: TimeOfDay,
    pub objects: Vec<GroundTruthObject>,
}

impl FrameRecord {
    pub fn key(&self) -> (&str, u64) {
        (&self.sequence_id, self.frame_index)
    }

    /// Checks that every box lies inside the image and has positive area.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let (w, h) = (f64::from(self.image_width), f64::from(self.image_height));
        for obj in &self.objects {
            if !obj.bbox.within(w, h) {
                return Err(DatasetError::BoxOutOfBounds {
                    sequence_id: self.sequence_id.clone(),
                    frame_index: self.frame_index,
                    bbox: obj.bbox.to_array(),
                    width: self.image_width,
                    height: self.image_height,
                });
            }
            if obj.bbox.area() <= 0.0 {
                return Err(DatasetError::DegenerateBox {
                    sequence_id: self.sequence_id.clone(),
                    frame_index: self.frame_index,
                    bbox: obj.bbox.to_array(),
                });
            }
        }
        Ok(())
    }
}

/// Tracks `(sequence_id, frame_index)` pairs seen so far.
#[derive(Debug, Default)]
pub struct FrameKeys(HashSet<(String, u64)>);

impl FrameKeys {
    pub fn insert(&mut self, sequence_id: &str, frame_index: u64) -> Result<(), DatasetError> {
        if self.0.insert((sequence_id.to_string(), frame_index)) {
            Ok(())
        } else {
            Err(DatasetError::DuplicateFrame {
                sequence_id: sequence_id.to_string(),
                frame_index,
            })
        }
    }

    pub fn contains(&self, sequence_id: &str, frame_index: u64) -> bool {
        self.0.contains(&(sequence_id.to_string(), frame_index))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn validate_records(records: &[FrameRecord]) -> Result<(), DatasetError> {
    let mut keys = FrameKeys::default();
    for r in records {
        keys.insert(&r.sequence_id, r.frame_index)?;
        r.validate()?;
    }
    Ok(())
}

/// Items that carry category labels: ground-truth frames and detection frames.
pub trait Labeled {
    fn labels_mut(&mut self) -> Vec<&mut String>;
}

impl Labeled for FrameRecord {
    fn labels_mut(&mut self) -> Vec<&mut String> {
        self.objects.iter_mut().map(|o| &mut o.category).collect()
    }
}

impl Labeled for DetectionFrame {
    fn labels_mut(&mut self) -> Vec<&mut String> {
        self.detections.iter_mut().map(|d| &mut d.category).collect()
    }
}

impl Labeled for ScoredBox {
    fn labels_mut(&mut self) -> Vec<&mut String> {
        vec![&mut self.category]
    }
}

/// Replaces every base label `c` with `daytime_c` or `night_c` according to
/// the frame's time of day.
pub fn extend_record(record: &mut FrameRecord) -> Result<(), DatasetError> {
    let time = record.timeofday;
    for obj in &mut record.objects {
        obj.category = labels::extend_label(&obj.category, time)?;
    }
    Ok(())
}

pub fn extend_labels(mut records: Vec<FrameRecord>) -> Result<Vec<FrameRecord>, DatasetError> {
    for r in &mut records {
        extend_record(r)?;
    }
    Ok(records)
}

/// Merges every extended label on one item back to its base category.
/// Scores and geometry are untouched.
pub fn merge_item<T: Labeled>(item: &mut T) -> Result<(), DatasetError> {
    for label in item.labels_mut() {
        *label = labels::merge_label(label)?.as_str().to_string();
    }
    Ok(())
}

pub fn merge_labels<T: Labeled>(mut items: Vec<T>) -> Result<Vec<T>, DatasetError> {
    for item in &mut items {
        merge_item(item)?;
    }
    Ok(items)
}

/// True when at least one label parses as an extended day/night label.
pub fn has_extended_labels<'a, T: Labeled + 'a>(items: impl IntoIterator<Item = &'a mut T>) -> bool {
    items
        .into_iter()
        .any(|it| it.labels_mut().iter().any(|l| labels::parse_extended(l).is_some()))
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use proptest::prelude::*;

    pub fn arb_object(vocab: &'static [&'static str]) -> impl Strategy<Value = GroundTruthObject> {
        (0..vocab.len(), 0.0..600.0f64, 0.0..300.0f64, 1.0..40.0f64, 1.0..40.0f64).prop_map(
            move |(c, x, y, w, h)| GroundTruthObject::new(vocab[c], BBox::new(x, y, x + w, y + h).unwrap()),
        )
    }

    /// Random valid record sets with unique keys over a 640x360 image.
    pub fn arb_records(vocab: &'static [&'static str]) -> impl Strategy<Value = Vec<FrameRecord>> {
        prop::collection::vec(
            (0..4u8, any::<bool>(), prop::collection::vec(arb_object(vocab), 0..5)),
            0..20,
        )
        .prop_map(|frames| {
            let mut counters = [0u64; 4];
            frames
                .into_iter()
                .map(|(seq, night, objects)| {
                    let idx = counters[seq as usize];
                    counters[seq as usize] += 1;
                    FrameRecord {
                        sequence_id: format!("seq{seq}"),
                        frame_index: idx * 3,
                        image_width: 640,
                        image_height: 360,
                        timeofday: if night { TimeOfDay::Night } else { TimeOfDay::Daytime },
                        objects,
                    }
                })
                .collect()
        })
    }
}
