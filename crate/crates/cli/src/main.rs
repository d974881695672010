//! Command-line front end for the approxai library.
//!
//! Subcommands: `explain {ig|shapley|distill}` runs one of the three
//! attribution methods, `optimize-levels` searches for the cheapest
//! per-stage approximation schedule meeting quality constraints, and
//! `bench` measures the energy ratio of a schedule against the exact
//! configuration. Every command writes a JSON report (and, where the
//! payload is a vector or a 2-D map, CSV and PGM artifacts) into the
//! output directory.
//!
//! Exit codes: 0 on success, 2 on parse/validation errors, 3 when a
//! request is structurally sound but unsatisfiable (no feasible
//! schedule, or more features than exact enumeration allows).
//!
//! Defaults may be supplied by a JSON config file named with `--config`
//! or the `APPROXAI_CONFIG` environment variable; explicit flags always
//! win over the config file.

mod cmds;
mod report;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Errors surfaced to the shell, tagged with the exit code they map to.
#[derive(Debug)]
pub enum CliError {
    /// An error from the core library.
    Core(approxai::Error),
    /// A front-end validation problem (bad flag combination, malformed
    /// auxiliary file, ...).
    Msg(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => e.fmt(f),
            CliError::Msg(m) => f.write_str(m),
        }
    }
}

impl From<approxai::Error> for CliError {
    fn from(e: approxai::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    /// Unsatisfiable requests exit 3; every other failure is a
    /// validation error and exits 2 (matching clap's own usage errors).
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(approxai::Error::Infeasible)
            | CliError::Core(approxai::Error::TooManyFeatures { .. }) => 3,
            _ => 2,
        }
    }
}

/// Approximate-computing toolkit: explanation methods, schedule search,
/// and energy benchmarks over the level-configurable multiplier.
#[derive(Parser, Debug)]
#[command(name = "approxai", version, about, max_term_width = 80)]
pub struct Cli {
    /// JSON config file supplying defaults (falls back to the
    /// APPROXAI_CONFIG environment variable, then to built-ins).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Worker threads for row-parallel operations.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,

    /// Seed for all generated randomness (signals are drawn from named
    /// substreams of this one seed).
    #[arg(long, global = true, value_name = "K")]
    pub seed: Option<u64>,

    /// Directory receiving report.json and artifact files.
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Explain a model prediction or recover a system's kernel.
    Explain {
        #[command(subcommand)]
        kind: ExplainKind,
    },
    /// Search for the cheapest per-stage level schedule meeting PSNR,
    /// energy, and probability constraints on seeded signals.
    OptimizeLevels(OptimizeArgs),
    /// Measure a schedule's energy ratio and median PSNR against the
    /// exact configuration on seeded signals.
    Bench(BenchArgs),
}

#[derive(Subcommand, Debug)]
pub enum ExplainKind {
    /// Integrated gradients via polynomial fit of path gradients.
    Ig(IgArgs),
    /// Exact Shapley values by coalition enumeration.
    Shapley(ShapleyArgs),
    /// Spectral kernel distillation from an input/response pair.
    Distill(DistillArgs),
}

#[derive(Args, Debug)]
pub struct IgArgs {
    /// Model JSON file.
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,

    /// Input vector CSV (single line).
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,

    /// Baseline: the literal `zeros` or a CSV vector file.
    #[arg(long, value_name = "zeros|PATH", default_value = "zeros")]
    pub baseline: String,

    /// Interpolation nodes along the path (2..=12).
    #[arg(long, value_name = "N")]
    pub steps: usize,

    /// Trapezoid sub-intervals for integrating the fitted polynomial.
    #[arg(long, value_name = "T", default_value_t = 8)]
    pub t: usize,

    /// Approximation level of the coefficient solve (0..=11).
    #[arg(long, value_name = "L")]
    pub level: Option<u8>,

    /// Model output to explain.
    #[arg(long, value_name = "C", default_value_t = 0)]
    pub class: usize,
}

#[derive(Args, Debug)]
pub struct ShapleyArgs {
    /// Model JSON file.
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,

    /// Input vector CSV (single line).
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,

    /// Baseline: the literal `zeros` or a CSV vector file.
    #[arg(long, value_name = "zeros|PATH", default_value = "zeros")]
    pub baseline: String,

    /// Approximation level of the weighted reduction (0..=11).
    #[arg(long, value_name = "L")]
    pub level: Option<u8>,

    /// Model output to explain.
    #[arg(long, value_name = "C", default_value_t = 0)]
    pub class: usize,

    /// Refuse runs with more features than this (exact enumeration is
    /// exponential; the hard library cap is 12).
    #[arg(long, value_name = "N", default_value_t = approxai::shapley::MAX_FEATURES)]
    pub features_cap: usize,

    /// Optional JSON file of index groups (`[[0,1],[2,3],...]`); each
    /// group toggles together and the groups must partition the input.
    #[arg(long, value_name = "PATH")]
    pub groups: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DistillArgs {
    /// Input map X as CSV matrix (square, power-of-two side).
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,

    /// Response map Y as CSV matrix (same shape as X).
    #[arg(long, value_name = "PATH")]
    pub response: PathBuf,

    /// Uniform approximation level for the transforms (0..=11).
    #[arg(long, value_name = "L", conflicts_with = "schedule")]
    pub level: Option<u8>,

    /// Per-stage levels as a comma list, e.g. `3,5,11` for 8-wide maps.
    #[arg(long, value_name = "L,L,...")]
    pub schedule: Option<String>,

    /// Spectral-division guard relative to the largest |FFT(X)| bin.
    #[arg(long, value_name = "E", default_value_t = approxai::distill::DEFAULT_EPS_REL)]
    pub eps_rel: f64,

    /// Also occlude this flat pixel index and report the contribution
    /// map of the occlusion.
    #[arg(long, value_name = "I")]
    pub occlude: Option<usize>,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    /// Transform size (power of two; log2(size) stages are searched).
    #[arg(long, value_name = "N")]
    pub size: usize,

    /// PSNR floor in dB each sample must reach.
    #[arg(long, value_name = "DB")]
    pub psnr_db: Option<f64>,

    /// Energy budget per transform in exact-multiply units
    /// (unbounded when omitted).
    #[arg(long, value_name = "E")]
    pub energy_budget: Option<f64>,

    /// Required fraction of samples meeting both thresholds.
    #[arg(long, value_name = "P")]
    pub prob: Option<f64>,

    /// Number of seeded uniform signals to measure against.
    #[arg(long, value_name = "S")]
    pub samples: Option<usize>,

    /// Search strategy.
    #[arg(long, value_enum, default_value_t = OptMode::Greedy)]
    pub mode: OptMode,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptMode {
    /// Enumerate every schedule (at most 4 stages).
    Exhaustive,
    /// Drop levels one stage at a time from the exact schedule.
    Greedy,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Transform size (power of two).
    #[arg(long, value_name = "N")]
    pub size: usize,

    /// Uniform approximation level to benchmark (0..=11).
    #[arg(long, value_name = "L", conflicts_with = "schedule")]
    pub level: Option<u8>,

    /// Per-stage levels as a comma list.
    #[arg(long, value_name = "L,L,...")]
    pub schedule: Option<String>,

    /// Number of seeded uniform signals to measure.
    #[arg(long, value_name = "S")]
    pub samples: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = cmds::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
