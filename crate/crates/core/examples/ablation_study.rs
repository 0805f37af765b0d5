//! Sweep sampling rate, detector resolution and label scheme on one
//! synthetic scene.
//!
//! cargo run --release --example ablation_study

use roadkit::synth::{ablation_harness, AblationAxis, DetectorModel, SceneModel};

fn main() {
    let scene = SceneModel { seed: 1, sequences: 40, ..SceneModel::default() };
    let detector = DetectorModel::default();
    let runs: [(AblationAxis, &[&str]); 3] = [
        (AblationAxis::SamplingRate, &["1", "1/10", "1/20", "1/30"]),
        (AblationAxis::ResolutionFactor, &["1.0", "0.5", "0.333", "0.1667"]),
        (AblationAxis::LabelScheme, &["base3", "extended6"]),
    ];
    for (axis, values) in runs {
        let values: Vec<String> = values.iter().map(|s| s.to_string()).collect();
        let table = ablation_harness(&scene, &detector, 3, axis, &values).unwrap();
        println!("{}", table.to_csv());
    }
}
