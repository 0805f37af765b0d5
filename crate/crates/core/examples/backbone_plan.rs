//! Per-layer output size, parameters and GOPs of the ResNet-18 backbone.
//!
//! cargo run --example backbone_plan [WIDTHxHEIGHT]

use roadkit::modelplan::{fpn_plan, head_plan, published_notes, Architecture, BackbonePlan, HeadSpec, Size};

fn main() {
    let input: Size = std::env::args().nth(1).as_deref().unwrap_or("960x540").parse().unwrap();
    let plan = BackbonePlan::build(&Architecture::resnet18(), input).unwrap();
    print!("{}", plan.to_csv(&published_notes(&plan)));

    let fpn = fpn_plan(&plan).unwrap();
    for l in &fpn.levels {
        println!("{} <- {}: {}", l.name, l.source, l.size);
    }
    println!("backbone + pyramid: {} params, {:.3} GOPs", fpn.total_params(), fpn.gops());

    let heads = head_plan(&fpn, &HeadSpec::default());
    println!("rpn + 3 cascade heads: {} params, {:.3} GOPs", heads.total_params(), heads.gops());
}
