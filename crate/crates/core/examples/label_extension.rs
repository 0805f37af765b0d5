//! Split each class into day and night variants, then fold them back.
//!
//! cargo run --example label_extension

use roadkit::dataset::{extend_labels, merge_labels, FrameRecord, GroundTruthObject, LabelScheme, TimeOfDay};
use roadkit::geometry::BBox;

fn frame(seq: &str, t: TimeOfDay, cats: &[&str]) -> FrameRecord {
    FrameRecord {
        sequence_id: seq.into(),
        frame_index: 0,
        image_width: 1920,
        image_height: 1080,
        timeofday: t,
        objects: cats
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let x = 100.0 * i as f64;
                GroundTruthObject::new(*c, BBox::new(x, 500.0, x + 80.0, 600.0).unwrap())
            })
            .collect(),
    }
}

fn main() {
    println!("extended vocabulary: {:?}", LabelScheme::Extended6.vocabulary());

    let records = vec![
        frame("day_clip", TimeOfDay::Daytime, &["vehicle", "pedestrian"]),
        frame("night_clip", TimeOfDay::Night, &["vehicle", "rider"]),
    ];
    let extended = extend_labels(records.clone()).unwrap();
    for r in &extended {
        let labels: Vec<_> = r.objects.iter().map(|o| o.category.as_str()).collect();
        println!("{:<10} {:?}", r.sequence_id, labels);
    }

    let merged = merge_labels(extended.clone()).unwrap();
    assert_eq!(merged, records);
    println!("merge(extend(x)) == x");

    println!("extending twice: {}", extend_labels(extended).unwrap_err());
}
