use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Compressive phase retrieval via lifting.
///
/// Exit codes: 0 success (converged, certificate holds), 1 usage, I/O or
/// validation error, 2 iteration limit reached or certificate fails,
/// 3 infeasible data.
#[derive(Parser, Debug)]
#[command(name = "cprl", version)]
pub struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Recover a sparse signal from squared magnitudes.
    Solve(SolveArgs),
    /// Check a recovery guarantee or run the brute-force oracle.
    Certify(CertifyArgs),
    /// Success-rate sweep or coherence contour.
    Sweep(SweepArgs),
    /// Audio recovery experiment.
    Audio(AudioArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Master seed; drawn at random and printed when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON config file; flags take precedence over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "cprl-out")]
    pub out: PathBuf,
    /// Print the resolved config as JSON and exit.
    #[arg(long)]
    pub dry_run: bool,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct InstanceArgs {
    /// Instance JSON with `system`, `b` and optionally the true `x`.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Generate an instance from this ensemble instead.
    #[arg(long = "gen")]
    pub ensemble: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of measurements.
    #[arg(long = "N")]
    pub big_n: Option<usize>,
    /// Sparsity of the generated signal.
    #[arg(long)]
    pub k: Option<usize>,
    /// Uniform noise amplitude added to generated measurements.
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethodArg {
    Cprl,
    Phaselift,
    Noisy,
    Penalized,
    Warm,
    Gcprl,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, value_enum)]
    pub method: Option<SolveMethodArg>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Primal and dual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Greedy data-fit weight.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Also write the per-iteration trace CSV.
    #[arg(long)]
    pub trace: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertifyKindArg {
    Coherence,
    Rip,
    Rip1,
    Dual,
    Oracle,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, value_enum)]
    pub kind: Option<CertifyKindArg>,
    /// Nonzeros of the lifted matrix for RIP estimates.
    #[arg(long)]
    pub sparsity: Option<usize>,
    /// Random patterns for RIP estimates; exhaustive when absent.
    #[arg(long)]
    pub samples: Option<usize>,
    /// `result.json` of a solve, for the dual check.
    #[arg(long)]
    pub result: Option<PathBuf>,
    /// Largest support tried by the oracle.
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Signal dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    /// Measurement counts: comma list or `start:end:step`.
    #[arg(long = "Ns")]
    pub big_ns: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    /// Methods: cprl, phaselift, gcprl, cs.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long = "gen")]
    pub ensemble: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub warm_start: bool,
    #[arg(long)]
    pub early_stop: bool,
    #[arg(long)]
    pub stop_after_crossing: bool,
    /// Averaged coherence bound over the `ns` x `Ns` grid instead of a sweep.
    #[arg(long)]
    pub contour: bool,
    #[arg(long)]
    pub realizations: Option<usize>,
}

#[derive(Args, Debug)]
pub struct AudioArgs {
    #[command(flatten)]
    pub common: Common,
    /// Single-column CSV or 16-bit mono WAV; a synthetic note when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Samples used from the input.
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long = "N")]
    pub big_n: Option<usize>,
    /// Fourier coefficients (basis size).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub fundamental: Option<usize>,
    #[arg(long)]
    pub harmonics: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}
