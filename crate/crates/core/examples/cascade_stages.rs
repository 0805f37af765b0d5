//! Which proposals count as positives at each stage of a cascade.
//!
//! cargo run --example cascade_stages

use roadkit::dataset::GroundTruthObject;
use roadkit::geometry::BBox;
use roadkit::modelplan::{cascade_assign, CascadeConfig};

fn main() {
    let gt = [GroundTruthObject::new("vehicle", BBox::new(100.0, 100.0, 200.0, 200.0).unwrap())];
    // Shrinking the box from the bottom walks IoU down from 1.0.
    let proposals: Vec<BBox> = [100.0, 80.0, 72.0, 62.0, 55.0, 40.0]
        .iter()
        .map(|h| BBox::new(100.0, 100.0, 200.0, 100.0 + h).unwrap())
        .collect();

    let config = CascadeConfig::default();
    let a = cascade_assign(&proposals, &gt, &config);
    println!("iou    {:?}", config.thresholds());
    for (i, v) in a.best_iou.iter().enumerate() {
        let marks: Vec<&str> = a.positive.iter().map(|s| if s[i] { "+" } else { "." }).collect();
        println!("{v:.2}   {}", marks.join("    "));
    }
    for (s, t) in config.thresholds().iter().enumerate() {
        println!("stage {s} (>= {t}): {} positives", a.positives(s));
    }
}
