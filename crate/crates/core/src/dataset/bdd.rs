//! Reader for BDD100K-style label files.
//!
//! The file is a JSON array of image entries:
//!
//! ```json
//! [{"name": "b1c66a42-6f7d68ca.jpg",
//!   "attributes": {"timeofday": "night"},
//!   "labels": [{"category": "car", "box2d": {"x1": 10, "y1": 10, "x2": 50, "y2": 40}}]}]
//! ```
//!
//! Entries may also carry `videoName` and `frameIndex` (tracking-style
//! exports); without them every image is its own one-frame sequence.

use std::collections::HashMap;

use serde::Deserialize;

use super::{DatasetError, FrameKeys, FrameRecord, GroundTruthObject, TimeOfDay};
use crate::geometry::BBox;

/// Image size assumed for every entry, since the label schema does not store it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BddOptions {
    pub image_width: u32,
    pub image_height: u32,
}

impl Default for BddOptions {
    fn default() -> Self {
        Self { image_width: 1280, image_height: 720 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BddWarnings {
    /// Labels without `box2d` (lanes, drivable area, ...).
    pub missing_box2d: usize,
    /// Entries whose timeofday was `dawn/dusk`, `undefined` or absent.
    pub coerced_timeofday: usize,
    pub clamped_boxes: usize,
    /// Boxes with zero area after clamping.
    pub dropped_degenerate: usize,
}

impl BddWarnings {
    pub fn total(&self) -> usize {
        self.missing_box2d + self.coerced_timeofday + self.clamped_boxes + self.dropped_degenerate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BddParse {
    pub records: Vec<FrameRecord>,
    pub warnings: BddWarnings,
}

#[derive(Deserialize)]
struct Entry {
    name: String,
    #[serde(default)]
    attributes: Option<Attributes>,
    #[serde(default)]
    labels: Option<Vec<Label>>,
    #[serde(default, rename = "videoName")]
    video_name: Option<String>,
    #[serde(default, rename = "frameIndex")]
    frame_index: Option<u64>,
}

#[derive(Deserialize)]
struct Attributes {
    #[serde(default)]
    timeofday: Option<String>,
}

#[derive(Deserialize)]
struct Label {
    category: String,
    #[serde(default)]
    box2d: Option<Box2d>,
}

#[derive(Deserialize)]
struct Box2d {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

fn timeofday(raw: Option<&str>, warnings: &mut BddWarnings) -> Result<TimeOfDay, DatasetError> {
    match raw {
        Some("daytime") => Ok(TimeOfDay::Daytime),
        Some("night") => Ok(TimeOfDay::Night),
        Some("dawn/dusk") | Some("undefined") | None => {
            warnings.coerced_timeofday += 1;
            Ok(TimeOfDay::Daytime)
        }
        Some(other) => Err(DatasetError::UnknownTimeOfDay(other.to_string())),
    }
}

fn image_stem(name: &str) -> &str {
    match name.rfind('.') {
        Some(dot) if dot > 0 => &name[..dot],
        _ => name,
    }
}

/// Parses a BDD100K-style label file. Categories are kept verbatim.
pub fn parse_bdd_annotations(contents: &str, options: BddOptions) -> Result<BddParse, DatasetError> {
    let entries: Vec<Entry> = serde_json::from_str(contents).map_err(|e| DatasetError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let (w, h) = (f64::from(options.image_width), f64::from(options.image_height));
    let mut warnings = BddWarnings::default();
    let mut next_in_video: HashMap<String, u64> = HashMap::new();
    let mut keys = FrameKeys::default();
    let mut records = Vec::with_capacity(entries.len());

    for entry in entries {
        let tod = timeofday(
            entry.attributes.as_ref().and_then(|a| a.timeofday.as_deref()),
            &mut warnings,
        )?;
        let (sequence_id, frame_index) = match entry.video_name {
            Some(video) => {
                let counter = next_in_video.entry(video.clone()).or_insert(0);
                let idx = entry.frame_index.unwrap_or(*counter);
                *counter = idx + 1;
                (video, idx)
            }
            None => (image_stem(&entry.name).to_string(), entry.frame_index.unwrap_or(0)),
        };
        keys.insert(&sequence_id, frame_index)?;

        let mut objects = Vec::new();
        for label in entry.labels.unwrap_or_default() {
            let Some(b) = label.box2d else {
                warnings.missing_box2d += 1;
                continue;
            };
            let raw = BBox::from_corners(b.x1, b.y1, b.x2, b.y2).map_err(|e| DatasetError::Line {
                line: 0,
                message: format!("image {}: {e}", entry.name),
            })?;
            let clamped = raw.clamp_to(w, h);
            if clamped != raw {
                warnings.clamped_boxes += 1;
            }
            if clamped.area() <= 0.0 {
                warnings.dropped_degenerate += 1;
                continue;
            }
            objects.push(GroundTruthObject::new(label.category, clamped));
        }

        records.push(FrameRecord {
            sequence_id,
            frame_index,
            image_width: options.image_width,
            image_height: options.image_height,
            timeofday: tod,
            objects,
        });
    }

    Ok(BddParse { records, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<BddParse, DatasetError> {
        parse_bdd_annotations(s, BddOptions::default())
    }

    #[test]
    fn maps_fields_directly() {
        let out = parse(
            r#"[{"name":"a.jpg","attributes":{"timeofday":"night","weather":"clear"},
                 "labels":[{"category":"car","box2d":{"x1":10,"y1":10,"x2":50,"y2":40}}]}]"#,
        )
        .unwrap();
        assert_eq!(out.records.len(), 1);
        let r = &out.records[0];
        assert_eq!(r.sequence_id, "a");
        assert_eq!(r.timeofday, TimeOfDay::Night);
        assert_eq!(r.objects, vec![GroundTruthObject::new("car", BBox::new(10.0, 10.0, 50.0, 40.0).unwrap())]);
        assert_eq!(out.warnings, BddWarnings::default());
    }

    #[test]
    fn empty_labels_and_verbatim_categories() {
        let out = parse(
            r#"[{"name":"e.jpg","attributes":{"timeofday":"daytime"},"labels":[]},
                {"name":"t.jpg","attributes":{"timeofday":"daytime"},"labels":null},
                {"name":"u.jpg","attributes":{"timeofday":"daytime"},
                 "labels":[{"category":"train","box2d":{"x1":0,"y1":0,"x2":5,"y2":5}}]}]"#,
        )
        .unwrap();
        assert!(out.records[0].objects.is_empty());
        assert!(out.records[1].objects.is_empty());
        assert_eq!(out.records[2].objects[0].category, "train");
    }

    #[test]
    fn skips_labels_without_box2d() {
        let out = parse(
            r#"[{"name":"a.jpg","attributes":{"timeofday":"daytime"},
                 "labels":[{"category":"lane","poly2d":[]},{"category":"car","box2d":{"x1":1,"y1":1,"x2":2,"y2":2}}]}]"#,
        )
        .unwrap();
        assert_eq!(out.records[0].objects.len(), 1);
        assert_eq!(out.warnings.missing_box2d, 1);
    }

    #[test]
    fn coerces_dawn_and_undefined_to_daytime() {
        let out = parse(
            r#"[{"name":"a.jpg","attributes":{"timeofday":"dawn/dusk"}},
                {"name":"b.jpg","attributes":{"timeofday":"undefined"}},
                {"name":"c.jpg"}]"#,
        )
        .unwrap();
        assert!(out.records.iter().all(|r| r.timeofday == TimeOfDay::Daytime));
        assert_eq!(out.warnings.coerced_timeofday, 3);
        assert!(matches!(
            parse(r#"[{"name":"a.jpg","attributes":{"timeofday":"evening"}}]"#),
            Err(DatasetError::UnknownTimeOfDay(_))
        ));
    }

    #[test]
    fn clamps_and_drops_degenerate() {
        let out = parse(
            r#"[{"name":"a.jpg","attributes":{"timeofday":"daytime"},
                 "labels":[{"category":"car","box2d":{"x1":1200,"y1":-5,"x2":1300,"y2":30}},
                           {"category":"car","box2d":{"x1":1290,"y1":0,"x2":1300,"y2":30}}]}]"#,
        )
        .unwrap();
        let objs = &out.records[0].objects;
        assert_eq!(objs.len(), 1);
        assert_eq!(objs[0].bbox.to_array(), [1200.0, 0.0, 1280.0, 30.0]);
        assert_eq!(out.warnings.clamped_boxes, 2);
        assert_eq!(out.warnings.dropped_degenerate, 1);
        assert!(out.records[0].validate().is_ok());
    }

    #[test]
    fn video_entries_become_sequences() {
        let out = parse(
            r#"[{"name":"v-1.jpg","videoName":"v","attributes":{"timeofday":"night"}},
                {"name":"v-2.jpg","videoName":"v","attributes":{"timeofday":"night"}},
                {"name":"w-9.jpg","videoName":"w","frameIndex":9,"attributes":{"timeofday":"night"}}]"#,
        )
        .unwrap();
        let keys: Vec<_> = out.records.iter().map(|r| (r.sequence_id.as_str(), r.frame_index)).collect();
        assert_eq!(keys, [("v", 0), ("v", 1), ("w", 9)]);
    }

    #[test]
    fn malformed_reports_position() {
        let err = parse("[{\"name\": \"a.jpg\",\n \"labels\": [}]").unwrap_err();
        match err {
            DatasetError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
