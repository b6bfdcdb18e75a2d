use std::path::PathBuf;

use banditroute::{CostMode, UpdateMode};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "banditroute", version, about = "Cost-aware LLM routing: train, calibrate, evaluate and serve")]
#[command(args_override_self = true)]
pub struct Cli {
    /// TOML file (keys mirror flags) or a run manifest to replay. Flags given
    /// on the command line override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic clustered dataset split into train/val/test files
    GenSynth(GenSynthArgs),
    /// Check a dataset file and print a summary
    ValidateData(ValidateArgs),
    /// Train a routing policy
    Train(TrainArgs),
    /// Pick the smallest p whose validation spend fits a budget
    Calibrate(CalibrateArgs),
    /// Evaluate models (or single-arm baselines) on a dataset
    Evaluate(EvaluateArgs),
    /// Train and evaluate over a grid of p values
    Sweep(SweepArgs),
    /// Route with the true correctness bits (threshold or budgeted oracle)
    Oracle(OracleArgs),
    /// Pairwise heterogeneity counts between arms
    Hetero(HeteroArgs),
    /// Render a report file as an SVG chart
    Plot(PlotArgs),
    /// Run the HTTP routing gateway
    Serve(ServeArgs),
}

pub const SUBCOMMANDS: [&str; 10] =
    ["gen-synth", "validate-data", "train", "calibrate", "evaluate", "sweep", "oracle", "hetero", "plot", "serve"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostModeArg {
    Fixed,
    Dynamic,
}

impl From<CostModeArg> for CostMode {
    fn from(v: CostModeArg) -> Self {
        match v {
            CostModeArg::Fixed => CostMode::Fixed,
            CostModeArg::Dynamic => CostMode::Dynamic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateModeArg {
    GreedyArm,
    FullInformation,
}

impl From<UpdateModeArg> for UpdateMode {
    fn from(v: UpdateModeArg) -> Self {
        match v {
            UpdateModeArg::GreedyArm => UpdateMode::GreedyArm,
            UpdateModeArg::FullInformation => UpdateMode::FullInformation,
        }
    }
}

/// Training hyperparameters shared by train, calibrate and sweep.
#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainFlags {
    /// Passes over the training data
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    /// SGD step size
    #[arg(long = "lr", default_value_t = 0.01)]
    #[serde(rename = "lr")]
    pub learning_rate: f64,
    /// Random seed (multi-run commands use seed..seed+4)
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Exploration probability in greedy-arm mode
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value = "greedy-arm")]
    pub update_mode: UpdateModeArg,
    #[arg(long, value_enum, default_value = "fixed")]
    pub cost_mode: CostModeArg,
    /// Fit weights only, without a per-arm intercept
    #[arg(long)]
    pub no_bias: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenSynthArgs {
    #[arg(long, default_value_t = 4)]
    pub arms: usize,
    #[arg(long, default_value_t = 4)]
    pub clusters: usize,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    /// Label flip probability
    #[arg(long, default_value_t = 0.02)]
    pub noise: f64,
    /// Price per 1K tokens for each arm, comma separated
    #[arg(long, value_delimiter = ',', default_value = "0.0004,0.0005,0.002,0.02")]
    pub prices: Vec<String>,
    #[arg(long, default_value_t = 5000)]
    pub train: usize,
    #[arg(long, default_value_t = 0)]
    pub val: usize,
    #[arg(long, default_value_t = 1000)]
    pub test: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Store embeddings in a float32 sidecar next to each file
    #[arg(long)]
    pub sidecar: bool,
    /// Output directory; receives train.jsonl, test.jsonl and val.jsonl when --val > 0
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ValidateArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Print the summary as JSON
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Cost scaling p in the reward a - p*c
    #[arg(long, default_value_t = 0.0)]
    pub p: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainFlags,
    /// Model file to write
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct CalibrateArgs {
    #[arg(long = "train-data")]
    #[serde(rename = "train-data")]
    pub train_data: PathBuf,
    #[arg(long = "val-data")]
    #[serde(rename = "val-data")]
    pub val_data: PathBuf,
    /// Validation-set budget in dollars
    #[arg(long, conflicts_with = "budget_arm", required_unless_present = "budget_arm")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    /// Use this arm's validation cost as the budget
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_arm: Option<String>,
    /// Allowed overshoot as a fraction of the budget
    #[arg(long, default_value_t = 0.0)]
    pub slack: f64,
    /// Candidate p values (default: 0 and 1e-4..1 at 4 per decade, plus a saturating value)
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainFlags,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Directory for the five calibrated models
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub models_dir: Option<PathBuf>,
    /// Calibration summary (JSON)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Model files; several are averaged as independent runs
    #[arg(long, value_delimiter = ',', required_unless_present = "baseline")]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub model: Vec<PathBuf>,
    /// Report every single-arm baseline instead of a model
    #[arg(long, conflicts_with = "model")]
    pub baseline: bool,
    /// Report table (TSV); a JSON summary is written next to it
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepArgs {
    #[arg(long = "train-data")]
    #[serde(rename = "train-data")]
    pub train_data: PathBuf,
    #[arg(long = "val-data")]
    #[serde(rename = "val-data", skip_serializing_if = "Option::is_none")]
    pub val_data: Option<PathBuf>,
    #[arg(long = "test-data")]
    #[serde(rename = "test-data")]
    pub test_data: PathBuf,
    /// p values (default: 0 and 1e-4..1 at 4 per decade)
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainFlags,
    /// Parallel training jobs
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Frontier table (TSV); a JSON summary is written next to it
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct OracleArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Route every query to argmax a - p*c
    #[arg(long, conflicts_with_all = ["budget", "grid"])]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Emit an oracle frontier over these p values
    #[arg(long, value_delimiter = ',', conflicts_with = "budget")]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<f64>,
    /// Best assignment whose total spend is at most this many dollars
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    #[arg(long, value_enum, default_value = "fixed")]
    pub cost_mode: CostModeArg,
    /// Assignment or frontier table (TSV); a JSON summary is written next to it
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct HeteroArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    /// Cost vs accuracy from a sweep or oracle frontier table
    Frontier,
    /// Heatmap from a hetero table
    Hetero,
    /// Per-arm selections split by correctness, from a report table row
    Selection,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct PlotArgs {
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    /// Report table produced by sweep, evaluate, oracle or hetero
    #[arg(long)]
    pub input: PathBuf,
    /// Row index for selection plots (0 = first data row)
    #[arg(long, default_value_t = 0)]
    pub row: usize,
    #[arg(long)]
    pub title: Option<String>,
    /// SVG file to write
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ServeArgs {
    /// Gateway TOML (model path, endpoints, embedding service)
    #[arg(long)]
    pub gateway_config: PathBuf,
    /// Override the listen address from the gateway config
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub listen: Option<String>,
}
