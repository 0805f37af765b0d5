//! Declarative layer lists.

use serde::{Deserialize, Serialize};

use super::PlanError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    /// k x k convolution followed by normalization.
    Conv,
    MaxPool,
    /// `repeat` basic residual blocks (two k x k convs each); the first block
    /// carries the stride and a 1x1 projection when the shape changes.
    ResidualStage,
    Lateral1x1,
    FpnOutput3x3,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub kernel: u32,
    pub stride: u32,
    pub in_channels: u32,
    pub out_channels: u32,
    pub repeat: u32,
}

impl LayerSpec {
    pub fn new(name: &str, kind: LayerKind, kernel: u32, stride: u32, in_channels: u32, out_channels: u32) -> Self {
        Self {
            name: name.to_string(),
            kind,
            kernel,
            stride,
            in_channels,
            out_channels,
            repeat: 1,
        }
    }

    pub fn repeated(mut self, n: u32) -> Self {
        self.repeat = n;
        self
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if self.kernel == 0 || self.stride == 0 || self.in_channels == 0 || self.out_channels == 0 || self.repeat == 0 {
            return Err(PlanError::InvalidLayer(format!(
                "{}: kernel, stride, channels and repeat must all be >= 1",
                self.name
            )));
        }
        if self.kind == LayerKind::MaxPool && self.in_channels != self.out_channels {
            return Err(PlanError::InvalidLayer(format!("{}: pooling cannot change channels", self.name)));
        }
        Ok(())
    }

    /// Human-readable description in the style `7x7, 64, stride 2`.
    pub fn describe(&self) -> String {
        let k = self.kernel;
        let stride = if self.stride > 1 { format!(", stride {}", self.stride) } else { String::new() };
        match self.kind {
            LayerKind::Conv | LayerKind::Lateral1x1 | LayerKind::FpnOutput3x3 => {
                format!("{k}x{k}, {}{stride}", self.out_channels)
            }
            LayerKind::MaxPool => format!("{k}x{k} max pool{stride}"),
            LayerKind::ResidualStage => {
                let c = self.out_channels;
                format!("[{k}x{k}, {c}; {k}x{k}, {c}] x{}", self.repeat)
            }
        }
    }
}

/// An ordered backbone description. Channel counts chain: each layer's
/// input equals the previous layer's output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub name: String,
    pub layers: Vec<LayerSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ArchFile {
    name: String,
    #[serde(default = "default_input_channels")]
    input_channels: u32,
    layers: Vec<LayerEntry>,
}

fn default_input_channels() -> u32 {
    3
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerEntry {
    name: String,
    kind: LayerKind,
    kernel: u32,
    #[serde(default = "one")]
    stride: u32,
    in_channels: Option<u32>,
    out_channels: Option<u32>,
    #[serde(default = "one")]
    repeat: u32,
}

fn one() -> u32 {
    1
}

impl Architecture {
    /// ResNet-18 without its classifier: 7x7/2 stem, 3x3/2 max pool, then four
    /// stages of two basic blocks at 64, 128, 256, 512 channels.
    pub fn resnet18() -> Self {
        use LayerKind::*;
        Self {
            name: "resnet18".into(),
            layers: vec![
                LayerSpec::new("Conv1", Conv, 7, 2, 3, 64),
                LayerSpec::new("MaxPool", MaxPool, 3, 2, 64, 64),
                LayerSpec::new("Stage1", ResidualStage, 3, 1, 64, 64).repeated(2),
                LayerSpec::new("Stage2", ResidualStage, 3, 2, 64, 128).repeated(2),
                LayerSpec::new("Stage3", ResidualStage, 3, 2, 128, 256).repeated(2),
                LayerSpec::new("Stage4", ResidualStage, 3, 2, 256, 512).repeated(2),
            ],
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "resnet18" => Some(Self::resnet18()),
            _ => None,
        }
    }

    /// Parses a TOML layer list. `in_channels` may be omitted and is then
    /// chained from the previous layer; pooling layers may omit
    /// `out_channels`.
    ///
    /// ```toml
    /// name = "tiny"
    /// [[layers]]
    /// name = "Conv1"
    /// kind = "conv"
    /// kernel = 3
    /// stride = 2
    /// out_channels = 16
    /// ```
    pub fn from_toml_str(s: &str) -> Result<Self, PlanError> {
        let file: ArchFile = toml::from_str(s).map_err(|e| PlanError::Config(e.to_string()))?;
        let mut channels = file.input_channels;
        let mut layers = Vec::with_capacity(file.layers.len());
        for e in file.layers {
            let in_channels = e.in_channels.unwrap_or(channels);
            if in_channels != channels {
                return Err(PlanError::InvalidLayer(format!(
                    "{}: in_channels {} does not match previous output {}",
                    e.name, in_channels, channels
                )));
            }
            let out_channels = match (e.kind, e.out_channels) {
                (_, Some(c)) => c,
                (LayerKind::MaxPool, None) => in_channels,
                (_, None) => {
                    return Err(PlanError::InvalidLayer(format!("{}: out_channels is required", e.name)));
                }
            };
            let layer = LayerSpec {
                name: e.name,
                kind: e.kind,
                kernel: e.kernel,
                stride: e.stride,
                in_channels,
                out_channels,
                repeat: e.repeat,
            };
            layer.validate()?;
            channels = out_channels;
            layers.push(layer);
        }
        let arch = Self { name: file.name, layers };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if self.layers.is_empty() {
            return Err(PlanError::InvalidLayer(format!("{}: no layers", self.name)));
        }
        for (prev, next) in self.layers.iter().zip(self.layers.iter().skip(1)) {
            if prev.out_channels != next.in_channels {
                return Err(PlanError::InvalidLayer(format!(
                    "{}: in_channels {} does not match {} output {}",
                    next.name, next.in_channels, prev.name, prev.out_channels
                )));
            }
        }
        self.layers.iter().try_for_each(LayerSpec::validate)
    }

    /// Product of all strides.
    pub fn total_stride(&self) -> u64 {
        self.layers.iter().map(|l| u64::from(l.stride)).product()
    }

    /// Returns a copy with every channel count multiplied by `factor`
    /// (network input channels excluded).
    pub fn widened(&self, factor: u32) -> Self {
        let mut out = self.clone();
        for (i, l) in out.layers.iter_mut().enumerate() {
            if i > 0 {
                l.in_channels *= factor;
            }
            l.out_channels *= factor;
        }
        out
    }
}
