//! Static complexity analysis of the detector backbone: output sizes,
//! parameters and GOPs per layer at any input resolution, a feature
//! pyramid on top, and cascade-stage proposal assignment.

mod arch;
mod cascade;
mod plan;
mod pyramid;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use arch::{Architecture, LayerKind, LayerSpec};
pub use cascade::{cascade_assign, CascadeAssignment, CascadeConfig};
pub use plan::{count_params, layer_macs, layer_params, macs_to_gops, BackbonePlan, PlanEntry, Size};
pub use pyramid::{fpn_plan, head_plan, FpnPlan, HeadPlan, HeadSpec, PyramidLevel, FPN_CHANNELS};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("input {input} is smaller than the total stride {min} in at least one dimension")]
    InputTooSmall { input: Size, min: u64 },
    #[error("invalid layer: {0}")]
    InvalidLayer(String),
    #[error("invalid architecture config: {0}")]
    Config(String),
    #[error("{0} has no residual stages to attach a pyramid to")]
    NoStages(String),
    #[error("invalid cascade config: {0}")]
    Cascade(String),
}

/// ResNet-18 backbone plan at `width x height`.
pub fn shape_plan(width: u64, height: u64) -> Result<BackbonePlan, PlanError> {
    BackbonePlan::build(&Architecture::resnet18(), Size::new(width, height))
}

/// GOPs per frame of a plan (2 x MACs / 1e9).
pub fn count_gops(plan: &BackbonePlan) -> f64 {
    plan.gops()
}

/// Published layer sizes of ResNet-18 at 960x540 input, as printed, for
/// side-by-side reporting. The Stage3 entry (64x37) disagrees with stride
/// arithmetic from both of its neighbours; the planner reports 60x34.
pub const RESNET18_960X540_PUBLISHED: [(&str, u64, u64); 6] = [
    ("Conv1", 480, 270),
    ("MaxPool", 240, 135),
    ("Stage1", 240, 135),
    ("Stage2", 120, 68),
    ("Stage3", 64, 37),
    ("Stage4", 30, 17),
];
pub const RESNET18_PUBLISHED_PARAMS: f64 = 11e6;
pub const RESNET18_PUBLISHED_GOPS: f64 = 56.0;

/// Notes comparing a ResNet-18 plan at 960x540 with the published table.
/// Empty for any other architecture or input size.
pub fn published_notes(plan: &BackbonePlan) -> Vec<(String, String)> {
    if plan.arch != "resnet18" || plan.input != Size::new(960, 540) {
        return Vec::new();
    }
    let mut notes = Vec::new();
    for (name, w, h) in RESNET18_960X540_PUBLISHED {
        if let Some(e) = plan.entry(name) {
            if e.output != Size::new(w, h) {
                notes.push((
                    name.to_string(),
                    format!("published table lists {w}x{h}; stride arithmetic gives {}", e.output),
                ));
            }
        }
    }
    notes.push((
        "Total".to_string(),
        format!(
            "published: {:.0}M params, {:.0} GOPs (counting convention unstated)",
            RESNET18_PUBLISHED_PARAMS / 1e6,
            RESNET18_PUBLISHED_GOPS
        ),
    ));
    notes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub input: Size,
    pub backbone_gops: f64,
    pub fpn_gops: f64,
    pub params: u64,
    pub levels: Vec<PyramidLevel>,
}

/// One row per input resolution: backbone GOPs, backbone + pyramid GOPs and
/// pyramid level sizes.
pub fn resolution_sweep(arch: &Architecture, inputs: &[Size]) -> Result<Vec<SweepRow>, PlanError> {
    inputs
        .iter()
        .map(|&input| {
            let bb = BackbonePlan::build(arch, input)?;
            let fpn = fpn_plan(&bb)?;
            Ok(SweepRow {
                input,
                backbone_gops: bb.gops(),
                fpn_gops: fpn.gops(),
                params: fpn.total_params(),
                levels: fpn.levels,
            })
        })
        .collect()
}

/// Columns `resolution,backbone_gops,backbone_fpn_gops,params,P2,...`.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["resolution".to_string(), "backbone_gops".into(), "backbone_fpn_gops".into(), "params".into()];
    if let Some(first) = rows.first() {
        header.extend(first.levels.iter().map(|l| l.name.clone()));
    }
    w.write_record(&header).expect("writing to memory");
    for r in rows {
        let mut rec = vec![
            r.input.to_string(),
            format!("{:.3}", r.backbone_gops),
            format!("{:.3}", r.fpn_gops),
            r.params.to_string(),
        ];
        rec.extend(r.levels.iter().map(|l| l.size.to_string()));
        w.write_record(&rec).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn size_of(plan: &BackbonePlan, name: &str) -> Size {
        plan.entry(name).unwrap().output
    }

    #[test]
    fn table_sizes_at_960x540() {
        let p = shape_plan(960, 540).unwrap();
        assert_eq!(size_of(&p, "Conv1"), Size::new(480, 270));
        assert_eq!(size_of(&p, "MaxPool"), Size::new(240, 135));
        assert_eq!(size_of(&p, "Stage1"), Size::new(240, 135));
        assert_eq!(size_of(&p, "Stage2"), Size::new(120, 68));
        assert_eq!(size_of(&p, "Stage3"), Size::new(60, 34));
        assert_eq!(size_of(&p, "Stage4"), Size::new(30, 17));
        assert!(p.is_consistent());
    }

    #[test]
    fn canonical_224() {
        assert_eq!(size_of(&shape_plan(224, 224).unwrap(), "Stage4"), Size::new(7, 7));
    }

    #[test]
    fn notes_flag_only_stage3() {
        let notes = published_notes(&shape_plan(960, 540).unwrap());
        let names: Vec<_> = notes.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["Stage3", "Total"]);
        assert!(notes[0].1.contains("64x37") && notes[0].1.contains("60x34"));
        assert!(published_notes(&shape_plan(640, 360).unwrap()).is_empty());
    }

    #[test]
    fn plan_csv_rows() {
        let p = shape_plan(960, 540).unwrap();
        let csv = p.to_csv(&published_notes(&p));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "layer,output_size,spec,params,gops,note");
        assert_eq!(lines[1], "Input,960x540,image,0,0.000,");
        assert!(lines[2].starts_with("Conv1,480x270,\"7x7, 64, stride 2\",9536,"));
        assert!(lines[6].ends_with("published table lists 64x37; stride arithmetic gives 60x34"));
        assert!(lines[7].starts_with("Stage4,30x17,"));
        assert!(lines[8].starts_with("Total,,ops = 2 x MACs,11176512,"));
        assert_eq!(lines.len(), 9);
    }

    #[test]
    fn sweep_shape() {
        let inputs: Vec<Size> = ["1920x1080", "960x540", "640x360", "320x180"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let rows = resolution_sweep(&Architecture::resnet18(), &inputs).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.windows(2).all(|w| w[0].backbone_gops > w[1].backbone_gops));
        let csv = sweep_to_csv(&rows);
        assert!(csv.starts_with("resolution,backbone_gops,backbone_fpn_gops,params,P2,P3,P4,P5\n"));
        assert!(csv.contains("960x540,"));
    }
}
