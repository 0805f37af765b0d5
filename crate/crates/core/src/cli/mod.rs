//! Command-line front end. The `roadkit` binary only forwards its arguments
//! to [`main_with_args`]; everything else lives here so it can be tested
//! in-process.
//!
//! Exit codes: 0 success, 1 internal error, 2 bad input or usage.

mod commands;
mod manifest;

use std::ffi::OsString;
use std::fmt::Display;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::dataset::DatasetError;
use crate::eval::EvalError;
use crate::modelplan::PlanError;
use crate::synth::SynthError;

pub use manifest::{sha256_bytes, sha256_file, RunManifest, MANIFEST_FILE};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unreadable or malformed inputs.
    #[error("{0}")]
    Input(String),
    /// Anything else, such as failing to write outputs.
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => 2,
            Self::Internal(_) => 1,
        }
    }

    pub(crate) fn input(e: impl Display) -> Self {
        Self::Input(e.to_string())
    }

    pub(crate) fn internal(e: impl Display) -> Self {
        Self::Internal(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        Self::input(e)
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        Self::input(e)
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        Self::input(e)
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        Self::input(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "roadkit", version, about = "Day/night on-road detection toolkit")]
pub struct Cli {
    /// Seed for commands that generate data.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Only print errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    /// Directory receiving outputs and manifest.json.
    #[arg(long, global = true, default_value = ".")]
    pub output_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Bdd100k,
    Canonical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantChoice {
    Voc2012,
    Coco101,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeChoice {
    Base3,
    Extended6,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an annotation file, remap categories, write canonical frames.
    Convert(ConvertArgs),
    /// Keep one frame in N within each sequence.
    Sample(SampleArgs),
    /// Rewrite base labels as daytime_/night_ labels.
    Extend(ExtendArgs),
    /// Fold daytime_/night_ labels back to base labels.
    Merge(MergeArgs),
    /// Score detections against ground truth.
    Eval(EvalArgs),
    /// Per-layer sizes, parameters and GOPs of a backbone.
    Plan(PlanArgs),
    /// Generate a synthetic ground-truth set and detector output.
    Synth(SynthArgs),
    /// Sweep one pipeline knob over synthetic data.
    Ablate(AblateArgs),
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "bdd100k")]
    pub format: InputFormat,
    /// TOML category map; defaults to the built-in BDD100K map for
    /// bdd100k input and to the base classes for canonical input.
    #[arg(long)]
    pub category_map: Option<PathBuf>,
    /// Image size assumed for BDD100K entries.
    #[arg(long, default_value = "1280x720")]
    pub image_size: String,
    /// Output file name inside --output-dir.
    #[arg(long, short, default_value = "frames.jsonl")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Sampling rate, `N` or `1/N`.
    #[arg(long, short = 'n')]
    pub rate: String,
    #[arg(long, short, default_value = "sampled.jsonl")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExtendArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short, default_value = "extended.jsonl")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Input is a detection file rather than canonical frames.
    #[arg(long)]
    pub detections: bool,
    #[arg(long, short, default_value = "merged.jsonl")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub det: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub iou: f64,
    #[arg(long, value_enum, default_value = "both")]
    pub variant: VariantChoice,
    /// Class vocabulary. With base3, extended inputs are merged first.
    #[arg(long, value_enum, default_value = "base3")]
    pub labels: SchemeChoice,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Preset name or path to a TOML architecture file.
    #[arg(long, default_value = "resnet18")]
    pub arch: String,
    #[arg(long, default_value = "960x540")]
    pub input: String,
    /// Comma-separated resolutions for an extra sweep table.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Vec<String>,
    /// Append pyramid layers to plan.csv.
    #[arg(long)]
    pub fpn: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// TOML with [scene], [detector] and detector_seed; defaults otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides detector_seed; --seed overrides the scene seed.
    #[arg(long)]
    pub detector_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub detector_seed: Option<u64>,
    /// sampling_rate, resolution_factor or label_scheme.
    #[arg(long)]
    pub axis: String,
    /// Comma-separated axis values, e.g. `1,1/10,1/20,1/30`.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<String>,
}

/// Runs a parsed command. `args` is recorded verbatim in the manifest.
pub fn run(cli: &Cli, args: Vec<String>) -> Result<(), CliError> {
    std::fs::create_dir_all(&cli.output_dir)
        .map_err(|e| CliError::internal(format!("cannot create {}: {e}", cli.output_dir.display())))?;
    commands::dispatch(cli, args)
}

/// Parses `args` (program name first), runs, reports errors on stderr and
/// returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let recorded = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match run(&cli, recorded) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("roadkit: error: {e}");
            e.exit_code()
        }
    }
}
