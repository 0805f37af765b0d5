//! IoU between boxes and class-wise greedy NMS.
//!
//! cargo run --example iou_and_nms

use roadkit::geometry::{iou, nms, BBox, ScoredBox};

fn main() {
    let a = BBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
    let b = BBox::new(5.0, 0.0, 15.0, 10.0).unwrap();
    println!("iou(a, b) = {:.4}", iou(&a, &b)); // 50 / 150

    let boxes = [
        ("vehicle", [100.0, 100.0, 200.0, 180.0], 0.92),
        ("vehicle", [105.0, 102.0, 205.0, 185.0], 0.85), // duplicate of the first
        ("vehicle", [400.0, 120.0, 480.0, 170.0], 0.60),
        ("pedestrian", [110.0, 100.0, 150.0, 190.0], 0.70), // overlaps, other class
    ];
    let candidates: Vec<ScoredBox> = boxes
        .iter()
        .map(|(c, [x1, y1, x2, y2], s)| ScoredBox::new(*c, BBox::new(*x1, *y1, *x2, *y2).unwrap(), *s).unwrap())
        .collect();

    let kept = nms(&candidates, 0.5);
    println!("kept {} of {}:", kept.len(), candidates.len());
    for k in &kept {
        println!("  {:<10} {:?} score {:.2}", k.category, k.bbox.to_array(), k.score());
    }
}
