//! Backbone cost across input resolutions.
//!
//! cargo run --example resolution_sweep

use roadkit::modelplan::{resolution_sweep, sweep_to_csv, Architecture, Size};

fn main() {
    let inputs: Vec<Size> = ["1920x1080", "1280x720", "960x540", "640x360", "320x180"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let rows = resolution_sweep(&Architecture::resnet18(), &inputs).unwrap();
    print!("{}", sweep_to_csv(&rows));

    // Same layout, twice the channels.
    let wide = Architecture::resnet18().widened(2);
    let rows = resolution_sweep(&wide, &inputs[2..3]).unwrap();
    println!("{} with doubled widths at 960x540: {:.3} GOPs", wide.name, rows[0].backbone_gops);
}
