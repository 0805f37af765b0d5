//! Single-file TOML config holding both models.
//!
//! ```toml
//! detector_seed = 7
//!
//! [scene]
//! seed = 42
//! sequences = 100
//! frames_per_sequence = 30
//! night_ratio = 0.5
//! density = { pedestrian = 2, vehicle = 4, rider = 1 }
//!
//! [detector]
//! jitter_sigma = 3.0
//! miss_rate.night = { pedestrian = 0.3, vehicle = 0.3, rider = 0.4 }
//! ```
//!
//! Every key is optional; omitted keys take the model defaults.

use serde::{Deserialize, Serialize};

use super::{DetectorModel, SceneModel, SynthError};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub detector_seed: u64,
    pub scene: SceneModel,
    pub detector: DetectorModel,
}

impl SynthConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, SynthError> {
        let cfg: Self = toml::from_str(s).map_err(|e| SynthError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        self.scene.validate()?;
        self.detector.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_fills_defaults() {
        let c = SynthConfig::from_toml_str(
            "detector_seed = 3\n[scene]\nseed = 9\nsequences = 2\n[detector.miss_rate.night]\nvehicle = 0.7\n",
        )
        .unwrap();
        assert_eq!(c.detector_seed, 3);
        assert_eq!(c.scene.seed, 9);
        assert_eq!(c.scene.frames_per_sequence, SceneModel::default().frames_per_sequence);
        assert_eq!(c.detector.miss_rate.night.vehicle, 0.7);
        assert_eq!(c.detector.miss_rate.night.rider, 0.0);
    }

    #[test]
    fn round_trip() {
        let c = SynthConfig::default();
        assert_eq!(SynthConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(SynthConfig::from_toml_str("[scene]\nsequencez = 3\n").is_err());
        assert!(SynthConfig::from_toml_str("[detector]\nfp_rate = 2.0\n").is_err());
        assert!(SynthConfig::from_toml_str("[scene]\nnight_ratio = -0.1\n").is_err());
    }
}
