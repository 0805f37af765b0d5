//! Seeded synthetic benchmark: ground-truth sequences with tracked objects,
//! a simulated detector with per-(class, time of day) miss rates, and an
//! ablation harness that sweeps one pipeline knob at a time.

mod ablation;
mod config;
mod detector;
mod rng;
mod scene;

use thiserror::Error;

use crate::dataset::DatasetError;
use crate::eval::EvalError;

pub use ablation::{ablation_harness, AblationAxis, AblationRow, AblationTable};
pub use config::SynthConfig;
pub use detector::{simulate_detector, ClassRates, DetectorModel, MissRates};
pub use rng::{fnv1a, SplitMix64};
pub use scene::{generate_dataset, generate_dataset_serial, ClassCounts, SceneModel};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("category {0:?} is neither a base nor an extended label")]
    UnknownCategory(String),
    #[error("invalid ablation value {value:?} for {axis}: {reason}")]
    InvalidAxisValue { axis: &'static str, value: String, reason: String },
    #[error("ablation needs at least one value")]
    NoAxisValues,
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
