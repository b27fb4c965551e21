//! Command-line grammar.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "qcr",
    version,
    about = "Attainable Cramér-Rao type bounds for quantum models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// State spectrum, SLD Fisher matrix and its inverse.
    Info(InfoArgs),
    /// Optimal random-measurement bound against the classical reference.
    Bound(BoundArgs),
    /// Cutting-plane solution of the dual program.
    Dual(DualArgs),
    /// Randomness condition verdict (exit code 1 when it fails).
    CheckRandom(CheckRandomArgs),
    /// Samples of the random limit set, optionally written as CSV.
    Limitset(LimitsetArgs),
    /// Monte Carlo run of the optimal random measurement.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["model", "model_file"])))]
pub struct ModelArgs {
    /// Builtin model: qubit-full, qubit-equatorial or qutrit-diagonal.
    #[arg(long)]
    pub model: Option<String>,
    /// Bloch parameter of the qubit models.
    #[arg(long, allow_negative_numbers = true, requires = "model")]
    pub alpha: Option<f64>,
    /// Diagonal of the qutrit model (default 0.5,0.25,0.25).
    #[arg(long, value_delimiter = ',', num_args = 1..=3, requires = "model")]
    pub probs: Option<Vec<f64>>,
    /// JSON model file with explicit re/im matrices.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Emit the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Weight file `{"g": [[...]]}`; identity when omitted.
    #[arg(long)]
    pub g_file: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DualArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub g_file: Option<PathBuf>,
    /// Objective tolerance of the cutting-plane loop.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Feasibility tolerance of the separation oracle.
    #[arg(long, default_value_t = 1e-7)]
    pub feas_tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_rounds: usize,
    #[arg(long, default_value_t = 32)]
    pub multistart: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also build and check the closed-form certificate when the model is random.
    #[arg(long)]
    pub certify: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CheckRandomArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Frobenius tolerance on the bilinear table.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct LimitsetArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Destination of the per-sample CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub g_file: Option<PathBuf>,
    /// Number of simulated outcomes.
    #[arg(long = "n", visible_alias = "samples", default_value_t = 100_000)]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}
