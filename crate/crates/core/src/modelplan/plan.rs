//! Per-layer output sizes, parameters and multiply-accumulates.
//!
//! Conventions:
//! - spatial sizes use "same" padding, so `out = ceil(in / stride)`;
//! - normalization adds 2 parameters per output channel and no operations;
//! - operations are reported as 2 x MACs.

use serde::{Deserialize, Serialize};

use super::arch::{Architecture, LayerKind, LayerSpec};
use super::PlanError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Size {
    pub width: u64,
    pub height: u64,
}

impl Size {
    pub fn new(width: u64, height: u64) -> Self {
        Self { width, height }
    }

    pub fn pixels(&self) -> u64 {
        self.width * self.height
    }

    pub fn downsample(&self, stride: u32) -> Self {
        let s = u64::from(stride);
        Self::new(self.width.div_ceil(s), self.height.div_ceil(s))
    }
}

impl std::fmt::Display for Size {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl std::str::FromStr for Size {
    type Err = PlanError;

    /// Parses `960x540` (also accepts `X` and `×`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PlanError::Config(format!("expected WIDTHxHEIGHT, got {s:?}"));
        let (w, h) = s
            .split_once(['x', 'X', '×'])
            .ok_or_else(bad)?;
        Ok(Self::new(
            w.trim().parse().map_err(|_| bad())?,
            h.trim().parse().map_err(|_| bad())?,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub name: String,
    pub kind: LayerKind,
    pub spec: String,
    pub output: Size,
    pub out_channels: u32,
    pub params: u64,
    pub macs: u64,
}

impl PlanEntry {
    pub fn gops(&self) -> f64 {
        macs_to_gops(self.macs)
    }
}

pub fn macs_to_gops(macs: u64) -> f64 {
    2.0 * macs as f64 / 1e9
}

/// Weight parameters of a bias-free k x k convolution.
pub(crate) fn conv_weights(kernel: u32, c_in: u32, c_out: u32) -> u64 {
    u64::from(kernel) * u64::from(kernel) * u64::from(c_in) * u64::from(c_out)
}

/// Parameters of one layer spec, independent of resolution.
pub fn layer_params(layer: &LayerSpec) -> u64 {
    let (k, cin, cout) = (layer.kernel, layer.in_channels, layer.out_channels);
    let norm = 2 * u64::from(cout);
    match layer.kind {
        LayerKind::Conv => conv_weights(k, cin, cout) + norm,
        LayerKind::MaxPool => 0,
        LayerKind::ResidualStage => {
            let projection = if layer.stride != 1 || cin != cout { conv_weights(1, cin, cout) + norm } else { 0 };
            let first = conv_weights(k, cin, cout) + norm + conv_weights(k, cout, cout) + norm + projection;
            let rest = u64::from(layer.repeat - 1) * 2 * (conv_weights(k, cout, cout) + norm);
            first + rest
        }
        LayerKind::Lateral1x1 | LayerKind::FpnOutput3x3 => conv_weights(k, cin, cout) + u64::from(cout),
    }
}

/// MACs of one layer given its output size.
pub fn layer_macs(layer: &LayerSpec, output: Size) -> u64 {
    let (k, cin, cout) = (layer.kernel, layer.in_channels, layer.out_channels);
    let px = output.pixels();
    match layer.kind {
        LayerKind::MaxPool => 0,
        LayerKind::Conv | LayerKind::Lateral1x1 | LayerKind::FpnOutput3x3 => conv_weights(k, cin, cout) * px,
        LayerKind::ResidualStage => {
            let projection = if layer.stride != 1 || cin != cout { conv_weights(1, cin, cout) } else { 0 };
            let first = conv_weights(k, cin, cout) + conv_weights(k, cout, cout) + projection;
            let rest = u64::from(layer.repeat - 1) * 2 * conv_weights(k, cout, cout);
            (first + rest) * px
        }
    }
}

/// Resolution-independent parameter total of an architecture.
pub fn count_params(arch: &Architecture) -> u64 {
    arch.layers.iter().map(layer_params).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackbonePlan {
    pub arch: String,
    pub input: Size,
    pub entries: Vec<PlanEntry>,
    pub total_params: u64,
    pub total_macs: u64,
}

impl BackbonePlan {
    pub fn build(arch: &Architecture, input: Size) -> Result<Self, PlanError> {
        arch.validate()?;
        let min = arch.total_stride();
        if input.width < min || input.height < min {
            return Err(PlanError::InputTooSmall { input, min });
        }
        let mut size = input;
        let mut entries = Vec::with_capacity(arch.layers.len());
        for layer in &arch.layers {
            size = size.downsample(layer.stride);
            entries.push(PlanEntry {
                name: layer.name.clone(),
                kind: layer.kind,
                spec: layer.describe(),
                output: size,
                out_channels: layer.out_channels,
                params: layer_params(layer),
                macs: layer_macs(layer, size),
            });
        }
        Ok(Self::from_entries(&arch.name, input, entries))
    }

    pub(crate) fn from_entries(arch: &str, input: Size, entries: Vec<PlanEntry>) -> Self {
        Self {
            arch: arch.to_string(),
            input,
            total_params: entries.iter().map(|e| e.params).sum(),
            total_macs: entries.iter().map(|e| e.macs).sum(),
            entries,
        }
    }

    pub fn gops(&self) -> f64 {
        macs_to_gops(self.total_macs)
    }

    pub fn entry(&self, name: &str) -> Option<&PlanEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Outputs of the residual stages, in order.
    pub fn stage_outputs(&self) -> Vec<&PlanEntry> {
        self.entries.iter().filter(|e| e.kind == LayerKind::ResidualStage).collect()
    }

    /// Totals equal the per-entry sums.
    pub fn is_consistent(&self) -> bool {
        self.total_params == self.entries.iter().map(|e| e.params).sum::<u64>()
            && self.total_macs == self.entries.iter().map(|e| e.macs).sum::<u64>()
    }

    /// Table with columns `layer,output_size,spec,params,gops,note`: an input
    /// row, one row per entry, and a total row. `notes` attaches free text to
    /// rows by layer name.
    pub fn to_csv(&self, notes: &[(String, String)]) -> String {
        let note_for = |name: &str| {
            notes
                .iter()
                .filter(|(n, _)| n == name)
                .map(|(_, t)| t.as_str())
                .collect::<Vec<_>>()
                .join("; ")
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut row = |r: [String; 6]| w.write_record(r).expect("writing to memory");
        row(["layer", "output_size", "spec", "params", "gops", "note"].map(String::from));
        row([
            "Input".into(),
            self.input.to_string(),
            "image".into(),
            "0".into(),
            format!("{:.3}", 0.0),
            note_for("Input"),
        ]);
        for e in &self.entries {
            row([
                e.name.clone(),
                e.output.to_string(),
                e.spec.clone(),
                e.params.to_string(),
                format!("{:.3}", e.gops()),
                note_for(&e.name),
            ]);
        }
        row([
            "Total".into(),
            String::new(),
            "ops = 2 x MACs".into(),
            self.total_params.to_string(),
            format!("{:.3}", self.gops()),
            note_for("Total"),
        ]);
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv is UTF-8")
    }
}
