//! The same ranked detections scored with all-point and 101-point AP.
//!
//! cargo run --example ap_variants

use roadkit::eval::{ap_coco101, ap_voc2012, pr_curve};

fn main() {
    // Ranked TP/FP flags for one class with 2 ground-truth boxes.
    let flags = [true, false, true];
    let curve = pr_curve(&flags, 2).unwrap();
    for p in &curve.points {
        println!("tp {} fp {}  recall {:.3}  precision {:.3}", p.tp, p.fp, p.recall, p.precision);
    }
    let voc = ap_voc2012(&curve);
    let coco = ap_coco101(&curve);
    println!("all-point AP  {voc:.6}");
    println!("101-point AP  {coco:.6}");
    println!("difference    {:.6}", coco - voc);
}
