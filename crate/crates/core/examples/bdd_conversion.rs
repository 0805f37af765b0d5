//! Parse a BDD100K-style label file and collapse its categories to
//! pedestrian / vehicle / rider.
//!
//! cargo run --example bdd_conversion

use roadkit::dataset::{parse_bdd_annotations, remap_categories, write_canonical, BddOptions, CategoryMap};

const LABELS: &str = r#"[
  {"name": "b1c66a42-6f7d68ca.jpg",
   "attributes": {"weather": "clear", "timeofday": "night"},
   "labels": [
     {"category": "car",           "box2d": {"x1": 10, "y1": 200, "x2": 210, "y2": 330}},
     {"category": "person",        "box2d": {"x1": 600, "y1": 250, "x2": 640, "y2": 360}},
     {"category": "traffic light", "box2d": {"x1": 700, "y1": 40, "x2": 720, "y2": 90}},
     {"category": "bike",          "box2d": {"x1": 900, "y1": 300, "x2": 960, "y2": 380}},
     {"category": "drivable area", "poly2d": []}
   ]},
  {"name": "b1c81faa-3df17267.jpg",
   "attributes": {"timeofday": "dawn/dusk"},
   "labels": [
     {"category": "rider", "box2d": {"x1": 300, "y1": 260, "x2": 340, "y2": 370}},
     {"category": "bus",   "box2d": {"x1": 1100, "y1": 150, "x2": 1400, "y2": 400}}
   ]}
]"#;

fn main() {
    let parsed = parse_bdd_annotations(LABELS, BddOptions::default()).unwrap();
    println!("warnings: {:?}", parsed.warnings);

    let (records, stats) = remap_categories(parsed.records, &CategoryMap::bdd100k()).unwrap();
    println!("kept:    {:?}", stats.kept);
    println!("dropped: {:?}", stats.dropped);
    print!("{}", write_canonical(&records));

    // A source category without a rule is an error, not a silent drop.
    let custom = CategoryMap::from_toml_str("drop = [\"bike\"]\n[map]\ncar = \"vehicle\"\n").unwrap();
    let reparsed = parse_bdd_annotations(LABELS, BddOptions::default()).unwrap();
    println!("custom map: {}", remap_categories(reparsed.records, &custom).unwrap_err());
}
