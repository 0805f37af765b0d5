//! Feature pyramid on top of a backbone plan, plus an optional accounting of
//! RPN and cascade detection heads.

use serde::{Deserialize, Serialize};

use super::arch::{LayerKind, LayerSpec};
use super::plan::{conv_weights, layer_macs, layer_params, macs_to_gops, BackbonePlan, PlanEntry, Size};
use super::PlanError;

pub const FPN_CHANNELS: u32 = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PyramidLevel {
    pub name: String,
    pub source: String,
    pub size: Size,
}

/// Backbone plan extended with lateral 1x1 and output 3x3 convolutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpnPlan {
    pub backbone: BackbonePlan,
    pub entries: Vec<PlanEntry>,
    pub levels: Vec<PyramidLevel>,
    pub fpn_params: u64,
    pub fpn_macs: u64,
}

impl FpnPlan {
    pub fn total_params(&self) -> u64 {
        self.backbone.total_params + self.fpn_params
    }

    pub fn total_macs(&self) -> u64 {
        self.backbone.total_macs + self.fpn_macs
    }

    pub fn gops(&self) -> f64 {
        macs_to_gops(self.total_macs())
    }

    /// Backbone entries followed by the pyramid entries, as one plan.
    pub fn combined(&self) -> BackbonePlan {
        let mut entries = self.backbone.entries.clone();
        entries.extend(self.entries.iter().cloned());
        BackbonePlan::from_entries(&format!("{}+fpn", self.backbone.arch), self.backbone.input, entries)
    }
}

/// Attaches a 256-channel pyramid to every residual stage output. Level
/// `P{i+2}` has the spatial size of stage `i+1`. Top-down additions and
/// upsampling are counted as free.
pub fn fpn_plan(backbone: &BackbonePlan) -> Result<FpnPlan, PlanError> {
    let stages = backbone.stage_outputs();
    if stages.is_empty() {
        return Err(PlanError::NoStages(backbone.arch.clone()));
    }
    let mut entries = Vec::with_capacity(stages.len() * 2);
    let mut levels = Vec::with_capacity(stages.len());
    for (i, stage) in stages.iter().enumerate() {
        let level = format!("P{}", i + 2);
        let lateral = LayerSpec::new(&format!("{level}.lateral"), LayerKind::Lateral1x1, 1, 1, stage.out_channels, FPN_CHANNELS);
        let output = LayerSpec::new(&format!("{level}.output"), LayerKind::FpnOutput3x3, 3, 1, FPN_CHANNELS, FPN_CHANNELS);
        for spec in [lateral, output] {
            entries.push(PlanEntry {
                name: spec.name.clone(),
                kind: spec.kind,
                spec: spec.describe(),
                output: stage.output,
                out_channels: spec.out_channels,
                params: layer_params(&spec),
                macs: layer_macs(&spec, stage.output),
            });
        }
        levels.push(PyramidLevel {
            name: level,
            source: stage.name.clone(),
            size: stage.output,
        });
    }
    Ok(FpnPlan {
        backbone: backbone.clone(),
        fpn_params: entries.iter().map(|e| e.params).sum(),
        fpn_macs: entries.iter().map(|e| e.macs).sum(),
        entries,
        levels,
    })
}

/// Declared head widths for the optional head accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadSpec {
    pub rpn_channels: u32,
    pub anchors_per_location: u32,
    pub roi_size: u32,
    pub fc_width: u32,
    pub num_classes: u32,
    pub cascade_stages: u32,
    pub proposals: u64,
}

impl Default for HeadSpec {
    fn default() -> Self {
        Self {
            rpn_channels: 256,
            anchors_per_location: 3,
            roi_size: 7,
            fc_width: 1024,
            num_classes: 3,
            cascade_stages: 3,
            proposals: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadPlan {
    pub spec: HeadSpec,
    pub rpn_params: u64,
    pub rpn_macs: u64,
    /// Per cascade stage.
    pub stage_params: u64,
    pub stage_macs: u64,
}

impl HeadPlan {
    pub fn total_params(&self) -> u64 {
        self.rpn_params + u64::from(self.spec.cascade_stages) * self.stage_params
    }

    pub fn total_macs(&self) -> u64 {
        self.rpn_macs + u64::from(self.spec.cascade_stages) * self.stage_macs
    }

    pub fn gops(&self) -> f64 {
        macs_to_gops(self.total_macs())
    }
}

fn fc(c_in: u64, c_out: u64) -> (u64, u64) {
    (c_in * c_out + c_out, c_in * c_out)
}

/// RPN: a shared 3x3 conv with objectness and box 1x1 branches run on every
/// pyramid level. Each cascade stage: two fully connected layers on RoI
/// features, a classifier over `num_classes + 1` and a class-agnostic box
/// regressor, run on every proposal. Convs and fc layers carry biases.
pub fn head_plan(fpn: &FpnPlan, spec: &HeadSpec) -> HeadPlan {
    let c = spec.rpn_channels;
    let a = spec.anchors_per_location;
    let rpn_params = conv_weights(3, FPN_CHANNELS, c)
        + u64::from(c)
        + conv_weights(1, c, a)
        + u64::from(a)
        + conv_weights(1, c, 4 * a)
        + u64::from(4 * a);
    let per_pixel = conv_weights(3, FPN_CHANNELS, c) + conv_weights(1, c, a) + conv_weights(1, c, 4 * a);
    let rpn_macs = fpn.levels.iter().map(|l| per_pixel * l.size.pixels()).sum();

    let roi = u64::from(FPN_CHANNELS) * u64::from(spec.roi_size) * u64::from(spec.roi_size);
    let w = u64::from(spec.fc_width);
    let layers = [
        fc(roi, w),
        fc(w, w),
        fc(w, u64::from(spec.num_classes) + 1),
        fc(w, 4),
    ];
    HeadPlan {
        spec: spec.clone(),
        rpn_params,
        rpn_macs,
        stage_params: layers.iter().map(|l| l.0).sum(),
        stage_macs: layers.iter().map(|l| l.1).sum::<u64>() * spec.proposals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelplan::Architecture;

    #[test]
    fn laterals_are_256_wide() {
        let bb = BackbonePlan::build(&Architecture::resnet18(), Size::new(960, 540)).unwrap();
        let fpn = fpn_plan(&bb).unwrap();
        let laterals: Vec<_> = fpn.entries.iter().filter(|e| e.kind == LayerKind::Lateral1x1).collect();
        assert_eq!(laterals.len(), 4);
        for (lat, c) in laterals.iter().zip([64u64, 128, 256, 512]) {
            assert_eq!(lat.out_channels, 256);
            assert_eq!(lat.params, c * 256 + 256);
        }
        assert_eq!(fpn.levels[3].name, "P5");
        assert_eq!(fpn.levels[3].size, Size::new(30, 17));
        // backbone untouched
        assert_eq!(fpn.backbone, bb);
        assert!(fpn.combined().is_consistent());
    }

    #[test]
    fn head_accounting() {
        let bb = BackbonePlan::build(&Architecture::resnet18(), Size::new(960, 540)).unwrap();
        let fpn = fpn_plan(&bb).unwrap();
        let heads = head_plan(&fpn, &HeadSpec::default());
        // 3x3 256->256 (+256) + 1x1 256->3 (+3) + 1x1 256->12 (+12)
        assert_eq!(heads.rpn_params, 589_824 + 256 + 768 + 3 + 3072 + 12);
        // fc 12544->1024, 1024->1024, 1024->4, 1024->4, each with bias
        let expected = (12544 * 1024 + 1024) + (1024 * 1024 + 1024) + (1024 * 4 + 4) + (1024 * 4 + 4);
        assert_eq!(heads.stage_params, expected);
        assert_eq!(heads.total_params(), heads.rpn_params + 3 * expected);
    }
}
