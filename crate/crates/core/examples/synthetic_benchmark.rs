//! Generate a synthetic day/night benchmark, simulate a detector that
//! misses more at night, and score it with day/night labels.
//!
//! cargo run --release --example synthetic_benchmark

use roadkit::dataset::{extend_labels, LabelScheme};
use roadkit::eval::{evaluate, EvalConfig};
use roadkit::synth::{generate_dataset, simulate_detector, ClassRates, DetectorModel, MissRates, SceneModel};

fn main() {
    let scene = SceneModel { seed: 42, sequences: 100, frames_per_sequence: 30, ..SceneModel::default() };
    let detector = DetectorModel {
        miss_rate: MissRates { daytime: ClassRates::uniform(0.1), night: ClassRates::uniform(0.35) },
        ..DetectorModel::default()
    };

    let gt = generate_dataset(&scene).unwrap();
    let det = simulate_detector(&gt, &detector, 7).unwrap();
    let base = evaluate(&gt, &det, &EvalConfig::default()).unwrap();
    print!("{}", base.to_csv());

    let gt6 = extend_labels(gt).unwrap();
    let det6 = simulate_detector(&gt6, &detector, 7).unwrap();
    let ext = evaluate(&gt6, &det6, &EvalConfig::for_scheme(LabelScheme::Extended6)).unwrap();
    print!("{}", ext.to_csv());
}
