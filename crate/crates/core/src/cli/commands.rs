use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;

use super::manifest::{sha256_file, RunManifest};
use super::{
    AblateArgs, Cli, CliError, Command, ConvertArgs, EvalArgs, ExtendArgs, InputFormat, MergeArgs, PlanArgs,
    SampleArgs, SchemeChoice, SynthArgs, VariantChoice,
};
use crate::dataset::labels::parse_extended;
use crate::dataset::{
    extend_record, merge_item, merge_labels, parse_bdd_annotations, parse_sampling_rate, remap_categories,
    BddOptions, CanonicalReader, CanonicalWriter, CategoryMap, DatasetError, DetectionFrame, DetectionReader,
    FrameRecord, LabelScheme,
};
use crate::eval::{evaluate, ApVariant, EvalConfig};
use crate::modelplan::{fpn_plan, published_notes, resolution_sweep, sweep_to_csv, Architecture, BackbonePlan, Size};
use crate::synth::{ablation_harness, generate_dataset, simulate_detector, AblationAxis, SynthConfig, SynthError};

/// Divergence between the two AP variants worth flagging.
const VARIANT_TOLERANCE: f64 = 1e-6;

struct Ctx<'a> {
    cli: &'a Cli,
    manifest: RunManifest,
}

impl<'a> Ctx<'a> {
    fn info(&self, msg: impl AsRef<str>) {
        if !self.cli.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn record_input(&mut self, path: &Path) -> Result<(), CliError> {
        let digest = sha256_file(path).map_err(|e| cannot_read(path, e))?;
        self.manifest.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    fn out_path(&self, name: &Path) -> PathBuf {
        self.cli.output_dir.join(name)
    }

    fn record_output(&mut self, name: &Path) -> Result<(), CliError> {
        let path = self.out_path(name);
        let digest = sha256_file(&path).map_err(CliError::internal)?;
        self.manifest.outputs.insert(name.display().to_string(), digest);
        Ok(())
    }

    fn write_output(&mut self, name: impl AsRef<Path>, bytes: &[u8]) -> Result<(), CliError> {
        let name = name.as_ref();
        let path = self.out_path(name);
        fs::write(&path, bytes).map_err(|e| cannot_write(&path, e))?;
        self.record_output(name)
    }

    fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(CliError::internal)?;
        text.push('\n');
        self.write_output(name, text.as_bytes())
    }

    /// Writes through a temporary file that is renamed into place only when
    /// `body` succeeds, so a failed run leaves no half-written output.
    fn stream_output<T>(
        &mut self,
        name: &Path,
        body: impl FnOnce(&mut BufWriter<File>) -> Result<T, CliError>,
    ) -> Result<T, CliError> {
        let path = self.out_path(name);
        let mut partial = path.clone().into_os_string();
        partial.push(".partial");
        let partial = PathBuf::from(partial);
        let file = File::create(&partial).map_err(|e| cannot_write(&partial, e))?;
        let mut out = BufWriter::new(file);
        let result = body(&mut out).and_then(|v| out.flush().map(|_| v).map_err(|e| cannot_write(&partial, e)));
        drop(out);
        match result {
            Ok(v) => {
                fs::rename(&partial, &path).map_err(|e| cannot_write(&path, e))?;
                self.record_output(name)?;
                Ok(v)
            }
            Err(e) => {
                let _ = fs::remove_file(&partial);
                Err(e)
            }
        }
    }

    fn finish(self) -> Result<(), CliError> {
        self.manifest.write_to(&self.cli.output_dir).map_err(CliError::internal)?;
        Ok(())
    }
}

fn cannot_read(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("cannot read {}: {e}", path.display()))
}

fn cannot_write(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Internal(format!("cannot write {}: {e}", path.display()))
}

/// Prefixes a data error with the file it came from.
fn in_file(path: &Path) -> impl Fn(DatasetError) -> CliError + '_ {
    move |e| CliError::Input(format!("{}: {e}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| cannot_read(path, e))
}

fn read_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| cannot_read(path, e))
}

fn write_err(e: std::io::Error) -> CliError {
    CliError::internal(format!("write failed: {e}"))
}

pub(super) fn dispatch(cli: &Cli, args: Vec<String>) -> Result<(), CliError> {
    let name = match &cli.command {
        Command::Convert(_) => "convert",
        Command::Sample(_) => "sample",
        Command::Extend(_) => "extend",
        Command::Merge(_) => "merge",
        Command::Eval(_) => "eval",
        Command::Plan(_) => "plan",
        Command::Synth(_) => "synth",
        Command::Ablate(_) => "ablate",
    };
    let mut ctx = Ctx { cli, manifest: RunManifest::new(name, args) };
    if let Some(seed) = cli.seed {
        ctx.manifest.seeds.insert("seed".into(), seed);
    }
    match &cli.command {
        Command::Convert(a) => convert(&mut ctx, a)?,
        Command::Sample(a) => sample(&mut ctx, a)?,
        Command::Extend(a) => extend(&mut ctx, a)?,
        Command::Merge(a) => merge(&mut ctx, a)?,
        Command::Eval(a) => eval(&mut ctx, a)?,
        Command::Plan(a) => plan(&mut ctx, a)?,
        Command::Synth(a) => synth(&mut ctx, a)?,
        Command::Ablate(a) => ablate(&mut ctx, a)?,
    }
    ctx.finish()
}

fn convert(ctx: &mut Ctx<'_>, a: &ConvertArgs) -> Result<(), CliError> {
    ctx.record_input(&a.input)?;
    let text = read_string(&a.input)?;
    let size: Size = a.image_size.parse()?;
    let dim = |v: u64| u32::try_from(v).map_err(|_| CliError::Input(format!("image size {size} is too large")));
    let options = BddOptions { image_width: dim(size.width)?, image_height: dim(size.height)? };

    let (records, warnings) = match a.format {
        InputFormat::Bdd100k => {
            let parsed = parse_bdd_annotations(&text, options).map_err(in_file(&a.input))?;
            (parsed.records, Some(parsed.warnings))
        }
        InputFormat::Canonical => {
            let records = CanonicalReader::new(text.as_bytes())
                .collect::<Result<Vec<_>, _>>()
                .map_err(in_file(&a.input))?;
            (records, None)
        }
    };
    let (map, map_source) = match &a.category_map {
        Some(p) => {
            ctx.record_input(p)?;
            (CategoryMap::from_toml_str(&read_string(p)?).map_err(in_file(p))?, p.display().to_string())
        }
        None => match a.format {
            InputFormat::Bdd100k => (CategoryMap::bdd100k(), "builtin:bdd100k".to_string()),
            InputFormat::Canonical => (
                CategoryMap::identity(&["pedestrian", "vehicle", "rider"]),
                "builtin:identity".to_string(),
            ),
        },
    };
    let (records, stats) = remap_categories(records, &map).map_err(in_file(&a.input))?;

    ctx.stream_output(&a.output, |out| {
        let mut w = CanonicalWriter::new(out).map_err(write_err)?;
        for r in &records {
            w.write(r).map_err(write_err)?;
        }
        w.finish().map_err(write_err)?;
        Ok(())
    })?;

    ctx.manifest.config = json!({
        "format": format!("{:?}", a.format).to_lowercase(),
        "category_map": map_source,
        "image_size": size.to_string(),
        "output": a.output.display().to_string(),
    });
    let list = |m: &std::collections::BTreeMap<String, usize>| {
        m.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ")
    };
    ctx.info(format!("converted {} frames", stats.frames));
    ctx.info(format!("kept: {}", list(&stats.kept)));
    ctx.info(format!("dropped {}: {}", stats.dropped_total(), list(&stats.dropped)));
    if let Some(w) = warnings.filter(|w| w.total() > 0) {
        ctx.info(format!(
            "warnings: {} labels without box2d, {} timeofday values read as daytime, {} boxes clamped, {} degenerate boxes dropped",
            w.missing_box2d, w.coerced_timeofday, w.clamped_boxes, w.dropped_degenerate
        ));
    }
    Ok(())
}

fn sample(ctx: &mut Ctx<'_>, a: &SampleArgs) -> Result<(), CliError> {
    let n = parse_sampling_rate(&a.rate)?;
    ctx.record_input(&a.input)?;
    // First pass: frame keys only.
    let keys = CanonicalReader::new(open(&a.input)?)
        .map(|r| r.map(|rec| (rec.sequence_id, rec.frame_index)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(in_file(&a.input))?;
    let plan = crate::dataset::SamplePlan::from_keys(keys.iter().map(|(s, i)| (s.as_str(), *i)), n)?;
    let total = keys.len();
    drop(keys);

    let kept = ctx.stream_output(&a.output, |out| {
        let mut w = CanonicalWriter::new(out).map_err(write_err)?;
        let mut kept = 0usize;
        for rec in CanonicalReader::new(open(&a.input)?) {
            let rec = rec.map_err(in_file(&a.input))?;
            if plan.keeps(&rec.sequence_id, rec.frame_index) {
                w.write(&rec).map_err(write_err)?;
                kept += 1;
            }
        }
        w.finish().map_err(write_err)?;
        Ok(kept)
    })?;
    ctx.manifest.config = json!({ "rate_denominator": n, "output": a.output.display().to_string() });
    ctx.info(format!("kept {kept} of {total} frames (1/{n})"));
    Ok(())
}

/// Streams canonical frames through `f`, attaching line numbers to errors.
fn map_frames(
    ctx: &mut Ctx<'_>,
    input: &Path,
    output: &Path,
    f: impl Fn(&mut FrameRecord) -> Result<(), DatasetError>,
) -> Result<usize, CliError> {
    ctx.record_input(input)?;
    ctx.stream_output(output, |out| {
        let mut w = CanonicalWriter::new(out).map_err(write_err)?;
        let mut reader = CanonicalReader::new(open(input)?);
        let mut n = 0;
        while let Some(rec) = reader.next() {
            let mut rec = rec.map_err(in_file(input))?;
            f(&mut rec).map_err(|e| in_file(input)(e.at_line(reader.line_no())))?;
            w.write(&rec).map_err(write_err)?;
            n += 1;
        }
        w.finish().map_err(write_err)?;
        Ok(n)
    })
}

fn extend(ctx: &mut Ctx<'_>, a: &ExtendArgs) -> Result<(), CliError> {
    let n = map_frames(ctx, &a.input, &a.output, extend_record)?;
    ctx.manifest.config = json!({ "output": a.output.display().to_string() });
    ctx.info(format!("extended {n} frames"));
    Ok(())
}

fn merge(ctx: &mut Ctx<'_>, a: &MergeArgs) -> Result<(), CliError> {
    let n = if a.detections {
        ctx.record_input(&a.input)?;
        ctx.stream_output(&a.output, |out| {
            let mut reader = DetectionReader::new(open(&a.input)?);
            let mut n = 0;
            while let Some(frame) = reader.next() {
                let mut frame = frame.map_err(in_file(&a.input))?;
                merge_item(&mut frame).map_err(|e| in_file(&a.input)(e.at_line(reader.line_no())))?;
                serde_json::to_writer(&mut *out, &frame).map_err(CliError::internal)?;
                out.write_all(b"\n").map_err(write_err)?;
                n += 1;
            }
            Ok(n)
        })?
    } else {
        map_frames(ctx, &a.input, &a.output, merge_item)?
    };
    ctx.manifest.config = json!({ "detections": a.detections, "output": a.output.display().to_string() });
    ctx.info(format!("merged {n} frames"));
    Ok(())
}

fn any_extended<'a>(labels: impl IntoIterator<Item = &'a str>) -> bool {
    labels.into_iter().any(|l| parse_extended(l).is_some())
}

fn eval(ctx: &mut Ctx<'_>, a: &EvalArgs) -> Result<(), CliError> {
    ctx.record_input(&a.gt)?;
    ctx.record_input(&a.det)?;
    let mut gt: Vec<FrameRecord> = CanonicalReader::new(open(&a.gt)?)
        .collect::<Result<_, _>>()
        .map_err(in_file(&a.gt))?;
    let mut det: Vec<DetectionFrame> = DetectionReader::new(open(&a.det)?)
        .collect::<Result<_, _>>()
        .map_err(in_file(&a.det))?;

    let scheme = match a.labels {
        SchemeChoice::Base3 => LabelScheme::Base3,
        SchemeChoice::Extended6 => LabelScheme::Extended6,
    };
    let mut merged = Vec::new();
    if scheme == LabelScheme::Base3 {
        if any_extended(gt.iter().flat_map(|r| r.objects.iter().map(|o| o.category.as_str()))) {
            gt = merge_labels(gt).map_err(in_file(&a.gt))?;
            merged.push("gt");
        }
        if any_extended(det.iter().flat_map(|d| d.detections.iter().map(|x| x.category.as_str()))) {
            det = merge_labels(det).map_err(in_file(&a.det))?;
            merged.push("detections");
        }
    }

    let (primary, variants) = match a.variant {
        VariantChoice::Voc2012 => (ApVariant::Voc2012, vec![ApVariant::Voc2012]),
        VariantChoice::Coco101 => (ApVariant::Coco101, vec![ApVariant::Coco101]),
        VariantChoice::Both => (ApVariant::Voc2012, vec![ApVariant::Voc2012, ApVariant::Coco101]),
    };
    let config = EvalConfig::for_scheme(scheme).with_iou_threshold(a.iou).with_variant(primary);
    let report = evaluate(&gt, &det, &config)?;
    let diverge = a.variant == VariantChoice::Both && report.variants_diverge(VARIANT_TOLERANCE);

    ctx.write_output("eval.csv", report.to_csv_for(&variants).as_bytes())?;
    let summary = json!({
        "report": report,
        "variants": variants,
        "merged_extended_labels": merged,
        "variants_diverge": diverge,
        "divergence": match (report.map_voc2012, report.map_coco101) {
            (Some(v), Some(c)) => Some(v - c),
            _ => None,
        },
    });
    ctx.write_json("eval_summary.json", &summary)?;
    ctx.manifest.config = serde_json::to_value(&config).map_err(CliError::internal)?;

    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    for v in &variants {
        ctx.info(format!("mAP {}: {}", json!(v).as_str().unwrap_or_default(), fmt(report.map_for(*v))));
    }
    if !merged.is_empty() {
        ctx.info(format!("merged day/night labels in: {}", merged.join(", ")));
    }
    if diverge {
        ctx.info(format!(
            "note: voc2012 and coco101 mAP differ by {:.6}",
            (report.map_voc2012.unwrap_or(0.0) - report.map_coco101.unwrap_or(0.0)).abs()
        ));
    }
    Ok(())
}

fn load_arch(ctx: &mut Ctx<'_>, arch: &str) -> Result<Architecture, CliError> {
    if let Some(a) = Architecture::preset(arch) {
        return Ok(a);
    }
    let path = Path::new(arch);
    if !path.is_file() {
        return Err(CliError::Input(format!("{arch:?} is neither a preset (resnet18) nor a readable file")));
    }
    ctx.record_input(path)?;
    Architecture::from_toml_str(&read_string(path)?).map_err(|e| CliError::Input(format!("{arch}: {e}")))
}

fn plan(ctx: &mut Ctx<'_>, a: &PlanArgs) -> Result<(), CliError> {
    let arch = load_arch(ctx, &a.arch)?;
    let input: Size = a.input.parse()?;
    let sweep: Vec<Size> = a
        .sweep
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse())
        .collect::<Result<_, _>>()?;
    let backbone = BackbonePlan::build(&arch, input)?;
    let notes = published_notes(&backbone);
    let fpn = if a.fpn { Some(fpn_plan(&backbone)?) } else { fpn_plan(&backbone).ok() };

    let table = match (&fpn, a.fpn) {
        (Some(f), true) => f.combined().to_csv(&notes),
        _ => backbone.to_csv(&notes),
    };
    ctx.write_output("plan.csv", table.as_bytes())?;
    let rows = if sweep.is_empty() { Vec::new() } else { resolution_sweep(&arch, &sweep)? };
    if !rows.is_empty() {
        ctx.write_output("sweep.csv", sweep_to_csv(&rows).as_bytes())?;
    }

    let stages: Vec<_> = backbone
        .stage_outputs()
        .iter()
        .map(|e| json!({ "name": e.name, "output": e.output.to_string(), "channels": e.out_channels }))
        .collect();
    ctx.write_json(
        "plan_summary.json",
        &json!({
            "arch": arch.name,
            "input": input.to_string(),
            "backbone_params": backbone.total_params,
            "backbone_macs": backbone.total_macs,
            "backbone_gops": backbone.gops(),
            "fpn_params": fpn.as_ref().map(|f| f.total_params()),
            "fpn_gops": fpn.as_ref().map(|f| f.gops()),
            "stages": stages,
            "notes": notes.iter().map(|(k, v)| json!({ "layer": k, "note": v })).collect::<Vec<_>>(),
            "sweep": rows,
        }),
    )?;
    ctx.manifest.config = json!({
        "arch": arch,
        "input": input.to_string(),
        "sweep": sweep.iter().map(Size::to_string).collect::<Vec<_>>(),
        "fpn": a.fpn,
    });

    ctx.info(format!(
        "{} at {}: {} params, {:.3} GOPs",
        arch.name, input, backbone.total_params, backbone.gops()
    ));
    if let Some(f) = &fpn {
        ctx.info(format!("with pyramid: {} params, {:.3} GOPs", f.total_params(), f.gops()));
    }
    for (layer, note) in &notes {
        ctx.info(format!("note {layer}: {note}"));
    }
    if !rows.is_empty() {
        ctx.info(format!("sweep: {} resolutions", rows.len()));
    }
    Ok(())
}

fn load_synth_config(
    ctx: &mut Ctx<'_>,
    path: Option<&Path>,
    detector_seed: Option<u64>,
) -> Result<SynthConfig, CliError> {
    let mut cfg = match path {
        Some(p) => {
            ctx.record_input(p)?;
            SynthConfig::from_toml_str(&read_string(p)?).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
        }
        None => SynthConfig::default(),
    };
    if let Some(s) = ctx.cli.seed {
        cfg.scene.seed = s;
    }
    if let Some(s) = detector_seed {
        cfg.detector_seed = s;
    }
    ctx.manifest.seeds.insert("scene_seed".into(), cfg.scene.seed);
    ctx.manifest.seeds.insert("detector_seed".into(), cfg.detector_seed);
    ctx.manifest.config = serde_json::to_value(&cfg).map_err(CliError::internal)?;
    Ok(cfg)
}

fn synth(ctx: &mut Ctx<'_>, a: &SynthArgs) -> Result<(), CliError> {
    let cfg = load_synth_config(ctx, a.config.as_deref(), a.detector_seed)?;
    let gt = generate_dataset(&cfg.scene)?;
    let det = simulate_detector(&gt, &cfg.detector, cfg.detector_seed)?;

    ctx.stream_output(Path::new("gt.jsonl"), |out| {
        let mut w = CanonicalWriter::new(out).map_err(write_err)?;
        for r in &gt {
            w.write(r).map_err(write_err)?;
        }
        w.finish().map_err(write_err)?;
        Ok(())
    })?;
    ctx.write_output("detections.jsonl", crate::dataset::write_detections(&det).as_bytes())?;
    ctx.write_output("config.toml", cfg.to_toml_string().as_bytes())?;

    let objects: usize = gt.iter().map(|r| r.objects.len()).sum();
    let detections: usize = det.iter().map(|d| d.detections.len()).sum();
    let night = gt.iter().filter(|r| r.timeofday == crate::dataset::TimeOfDay::Night).count();
    ctx.info(format!(
        "generated {} frames ({night} at night), {objects} objects, {detections} detections",
        gt.len()
    ));
    Ok(())
}

fn ablate(ctx: &mut Ctx<'_>, a: &AblateArgs) -> Result<(), CliError> {
    let axis: AblationAxis = a.axis.parse()?;
    let values: Vec<String> = a.values.iter().map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(SynthError::NoAxisValues.into());
    }
    let cfg = load_synth_config(ctx, a.config.as_deref(), a.detector_seed)?;
    let table = ablation_harness(&cfg.scene, &cfg.detector, cfg.detector_seed, axis, &values)?;

    ctx.write_output("ablation.csv", table.to_csv().as_bytes())?;
    ctx.write_json("ablation_summary.json", &json!(table))?;
    if let serde_json::Value::Object(m) = &mut ctx.manifest.config {
        m.insert("axis".into(), json!(axis));
        m.insert("values".into(), json!(values));
    }
    for r in &table.rows {
        let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
        ctx.info(format!(
            "{axis}={}: {} frames, mAP voc2012 {}, coco101 {}",
            r.value,
            r.frames,
            fmt(r.map_voc2012),
            fmt(r.map_coco101)
        ));
    }
    Ok(())
}
