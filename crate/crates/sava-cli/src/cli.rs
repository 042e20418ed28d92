//! Argument definitions for every subcommand.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use sava_core::config::{CachePolicy, Strategy};
use sava_core::dataset::Format;

#[derive(Parser, Debug)]
#[command(
    name = "sava",
    version,
    about = "Transport-based data valuation: synthesize, corrupt, value, evaluate, benchmark",
    after_help = "Exit codes: 0 success, 2 config/input error, 3 resource guard, 4 numerical failure."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

// The `value` variant carries every solver knob; boxing it would only move
// the size elsewhere since the enum lives once on the stack at startup.
#[allow(clippy::large_enum_variant)]
#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw a labeled Gaussian-mixture train/validation pair, optionally corrupted.
    Synth(SynthArgs),
    /// Inject label or feature noise into an existing dataset file.
    Corrupt(CorruptArgs),
    /// Score every training point against the validation set.
    Value(ValueArgs),
    /// Detection rate of a value report against a corruption mask.
    Eval(EvalArgs),
    /// Sweep (method x size x batch x seed) and tabulate rates and costs.
    Bench(BenchArgs),
    /// Summarize a dataset, report, mask, label matrix, or detection file.
    Inspect(InspectArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Lava,
    Sava,
    Batchwise,
    Random,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyArg {
    Random,
    Stratified,
}

impl StrategyArg {
    pub fn to_core(self) -> Strategy {
        match self {
            StrategyArg::Random => Strategy::Random,
            StrategyArg::Stratified => Strategy::Stratified,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CacheArg {
    Full,
    FirstBatch,
    Off,
}

impl CacheArg {
    pub fn to_core(self) -> CachePolicy {
        match self {
            CacheArg::Full => CachePolicy::Full,
            CacheArg::FirstBatch => CachePolicy::FirstBatch,
            CacheArg::Off => CachePolicy::Off,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Binary,
    Csv,
}

impl FormatArg {
    pub fn to_core(self) -> Format {
        match self {
            FormatArg::Binary => Format::Binary,
            FormatArg::Csv => Format::Csv,
        }
    }
    pub fn extension(self) -> &'static str {
        match self {
            FormatArg::Binary => "bin",
            FormatArg::Csv => "csv",
        }
    }
}

/// Solver and valuation knobs shared by `value` and `bench`. Every knob is
/// optional so precedence is clear: command line > config file > defaults.
#[derive(Args, Debug, Default, Clone)]
pub struct KnobArgs {
    /// TOML config file; explicit flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Valuation method.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Training-side batch size.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Validation-side batch size.
    #[arg(long)]
    pub val_batch_size: Option<usize>,
    /// Split the training side into this many batches instead of giving a size.
    #[arg(long, conflicts_with = "batch_size")]
    pub k_train: Option<usize>,
    /// Split the validation side into this many batches instead of giving a size.
    #[arg(long, conflicts_with = "val_batch_size")]
    pub k_val: Option<usize>,
    /// Batch construction: random | stratified.
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    /// Seed for batch construction and label subsampling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Weight of the label-distance term in the ground cost.
    #[arg(long)]
    pub c: Option<f64>,
    /// Regularization as a fraction of each problem's mean cost.
    #[arg(long)]
    pub epsilon_factor: Option<f64>,
    /// Absolute regularization override.
    #[arg(long, conflicts_with = "epsilon_factor")]
    pub epsilon_abs: Option<f64>,
    /// Marginal violation accepted as converged.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration budget per entropic solve.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Warm-started epsilon scaling: true | false.
    #[arg(long)]
    pub anneal: Option<bool>,
    /// Label-distance cache policy: full | first-batch | off.
    #[arg(long, value_enum)]
    pub l2l_cache: Option<CacheArg>,
    /// Per-label support cap for label-to-label problems.
    #[arg(long)]
    pub l2l_cap: Option<usize>,
    /// Divide outer-plan rows by their sums before weighting: true | false.
    #[arg(long)]
    pub row_normalize_plan: Option<bool>,
    /// Refuse to materialize more cost-matrix entries than this at once.
    #[arg(long)]
    pub memory_budget: Option<usize>,
    /// Concurrent batch-pair solves (1 = sequential).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Directory for train/validation/mask files (created if missing).
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Dataset file format.
    #[arg(long, value_enum, default_value = "binary")]
    pub format: FormatArg,
    /// Training points.
    #[arg(long)]
    pub n: usize,
    /// Validation points (clean by construction).
    #[arg(long, default_value_t = 2000)]
    pub n_val: usize,
    /// Feature dimensions.
    #[arg(long, default_value_t = 32)]
    pub d: usize,
    /// Classes (one Gaussian cluster per class).
    #[arg(long, default_value_t = 10)]
    pub v: usize,
    /// Minimum pairwise distance between cluster centers.
    #[arg(long, default_value_t = 8.0)]
    pub sep: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fraction of training labels to flip (one corruption kind per run).
    #[arg(long, conflicts_with = "feature_noise")]
    pub label_noise: Option<f64>,
    /// Fraction of training points to perturb with Gaussian feature noise.
    #[arg(long)]
    pub feature_noise: Option<f64>,
    /// Feature-noise standard deviation; defaults to --sep.
    #[arg(long, requires = "feature_noise")]
    pub noise_sigma: Option<f64>,
    /// Seed for the corruption draw; defaults to seed+1.
    #[arg(long)]
    pub corrupt_seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct CorruptArgs {
    /// Dataset to corrupt (.csv is text, anything else is binary).
    #[arg(long)]
    pub input: PathBuf,
    /// Corrupted dataset output path (format from extension).
    #[arg(long)]
    pub out: PathBuf,
    /// Corruption mask output path (JSON).
    #[arg(long)]
    pub mask: PathBuf,
    /// Fraction of labels to flip (one corruption kind per run).
    #[arg(long, conflicts_with = "feature_noise")]
    pub label_noise: Option<f64>,
    /// Fraction of points to perturb with Gaussian feature noise.
    #[arg(long)]
    pub feature_noise: Option<f64>,
    /// Feature-noise standard deviation (required with --feature-noise).
    #[arg(long, requires = "feature_noise")]
    pub noise_sigma: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct ValueArgs {
    /// Training dataset file (.csv is text, anything else is binary).
    #[arg(long)]
    pub train: PathBuf,
    /// Validation dataset file.
    #[arg(long)]
    pub val: PathBuf,
    /// Report output path (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Optional per-point CSV (id,value,rank[,corrupt_flag]).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Corruption mask; adds the corrupt_flag column to --csv.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Load the label-distance matrix instead of building it.
    #[arg(long)]
    pub l2l_in: Option<PathBuf>,
    /// Save the label-distance matrix used by this run.
    #[arg(long)]
    pub l2l_out: Option<PathBuf>,
    /// Directory for batch-level artifacts (cbar.csv, pibar.csv, partitions.json).
    #[arg(long)]
    pub dump_artifacts: Option<PathBuf>,
    #[command(flatten)]
    pub knobs: KnobArgs,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Value report produced by `sava value`.
    #[arg(long)]
    pub report: PathBuf,
    /// Corruption mask produced alongside the dataset.
    #[arg(long)]
    pub mask: PathBuf,
    /// Ranking prefix to inspect, as a fraction of the dataset.
    #[arg(long, default_value_t = 0.25)]
    pub prefix: f64,
    /// Detection output path (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Optional detection-curve CSV (100 prefix points).
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Benchmark grid description (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Results table output path (CSV).
    #[arg(long)]
    pub out: PathBuf,
    /// Override the worker count for every run.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug)]
pub struct InspectArgs {
    /// Artifact to summarize (dataset, report, mask, detection, label matrix).
    pub path: PathBuf,
}
