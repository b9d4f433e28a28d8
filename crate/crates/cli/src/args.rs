use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

/// Contact-graph topology, conflict-aware colouring labels and evaluation
/// for dense instance masks.
#[derive(Debug, Parser)]
#[command(name = "disco", version)]
pub struct Cli {
    /// JSON file of flat keys mirroring the flags; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads, 0 for one per logical core [env: DISCO_THREADS].
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-image topology reports and a corpus summary.
    Analyze(AnalyzeArgs),
    /// Explicit-marking label maps (two colours plus a conflict colour).
    Mark(MarkArgs),
    /// Greedy colourings of each contact graph.
    Color(ColorArgs),
    /// Instance masks from colouring probability fields.
    Decode(DecodeArgs),
    /// Loss values and a finite-difference gradient check for one image.
    Losscheck(LosscheckArgs),
    /// Dice, AJI, DQ, SQ and PQ of predictions against ground truth.
    Evaluate(EvaluateArgs),
    /// Seeded synthetic mask corpus.
    Synth(SynthArgs),
    /// Merge per-image topology JSON files into corpus tables.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    /// Mask files (.pgm, .csv), directories or glob patterns.
    #[arg(long = "in", value_name = "PATH", num_args = 1..)]
    #[serde(rename = "in", default)]
    pub inputs: Vec<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Longest odd cycle to count (odd, 3..=15) [default: 11].
    #[arg(long, value_name = "LEN")]
    pub cycle_cap: Option<usize>,
    /// Also compute the exact minimum conflict set on graphs of at most 20 nodes.
    #[arg(long)]
    #[serde(default)]
    pub exact: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct MarkArgs {
    #[arg(long = "in", value_name = "PATH", num_args = 1..)]
    #[serde(rename = "in", default)]
    pub inputs: Vec<String>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Conflict colour, at least 3 [default: 3].
    #[arg(long, value_name = "T")]
    pub t: Option<u8>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ColorArgs {
    #[arg(long = "in", value_name = "PATH", num_args = 1..)]
    #[serde(rename = "in", default)]
    pub inputs: Vec<String>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Palette size for the bounded greedy pass [default: 3].
    #[arg(long, value_name = "K")]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct DecodeArgs {
    /// Probability-field CSV files, directories or glob patterns.
    #[arg(long = "in", value_name = "PATH", num_args = 1..)]
    #[serde(rename = "in", default)]
    pub inputs: Vec<String>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Drop decoded components smaller than this many pixels.
    #[arg(long, value_name = "PIXELS")]
    pub min_size: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct LosscheckArgs {
    /// Probability-field CSV.
    #[arg(long, value_name = "FILE")]
    pub field: Option<PathBuf>,
    /// Instance mask.
    #[arg(long, value_name = "FILE")]
    pub mask: Option<PathBuf>,
    /// Colour label map; derived from the mask by explicit marking when absent.
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    /// Write the JSON report here instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Finite-difference step in [1e-5, 1e-2] [default: 1e-5].
    #[arg(long)]
    pub step: Option<f64>,
    /// Maximum relative gradient error [default: 1e-4].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Per-category cross-entropy weights, background first [default: 1,1,1,5].
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(default)]
    pub class_weights: Vec<f64>,
    #[arg(long)]
    pub lambda_sem: Option<f64>,
    #[arg(long)]
    pub lambda_color: Option<f64>,
    #[arg(long)]
    pub lambda_cons: Option<f64>,
    #[arg(long)]
    pub lambda_conf: Option<f64>,
    #[arg(long)]
    pub lambda_adj: Option<f64>,
    #[arg(long)]
    pub cosine_epsilon: Option<f64>,
    #[arg(long)]
    pub dice_smoothing: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    /// Ground-truth masks.
    #[arg(long, value_name = "PATH", num_args = 1..)]
    #[serde(default)]
    pub gt: Vec<String>,
    /// Predicted masks, paired with ground truth by file stem.
    #[arg(long, value_name = "PATH", num_args = 1..)]
    #[serde(default)]
    pub pred: Vec<String>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    /// Base seed; image i uses seed + i [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// [default: 64]
    #[arg(long)]
    pub height: Option<usize>,
    /// [default: 64]
    #[arg(long)]
    pub width: Option<usize>,
    /// Instances per image [default: 40].
    #[arg(long)]
    pub count: Option<usize>,
    /// Minimum Chebyshev distance between seed points [default: 2].
    #[arg(long)]
    pub spacing: Option<usize>,
    /// Growth rounds for the sparse and touching profiles [default: 3].
    #[arg(long)]
    pub rounds: Option<usize>,
    /// sparse, touching or dense [default: touching].
    #[arg(long)]
    pub profile: Option<String>,
    /// Number of images [default: 1].
    #[arg(long)]
    pub num: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    /// Per-image `.topology.json` files written by `analyze`.
    #[arg(long = "in", value_name = "PATH", num_args = 1..)]
    #[serde(rename = "in", default)]
    pub inputs: Vec<String>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}
