//! `maec` — command-line surface over the erasure-channel calculus.
//!
//! Subcommands load a channel file (a probability vector over the divisors of
//! `q`), run the requested computation in exact-rational or `f64` arithmetic,
//! and emit deterministic CSV or JSON: capacity tables, one-step transforms,
//! polarization ensembles, limiting distributions with optional sweep traces,
//! and a matrix-level verification report.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "maec",
    version,
    about = "Erasure channels mod q: capacities, polar transforms, limiting distributions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report order-α capacities plus the overlap and error parameters
    Capacity(CapacityArgs),
    /// Apply one polar transform step, optionally against a second channel
    Transform(TransformArgs),
    /// Walk the transform tree and report branch capacities and proportions
    Polarize(PolarizeArgs),
    /// Compute the limiting mass of every divisor, optionally with the sweep trace
    Asymptotic(AsymptoticArgs),
    /// Cross-check closed forms and output remappings against raw transition matrices
    Verify(VerifyArgs),
}

/// Arithmetic carrying the probability masses.
#[derive(Debug, Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Arbitrary-precision rationals; every identity exact
    Exact,
    /// IEEE doubles; fast, with rounding
    Float,
}

/// Base of the logarithms in reported capacities.
#[derive(Debug, Copy, Clone, PartialEq, Eq, ValueEnum)]
enum LogBaseArg {
    /// Base q: capacities land in [0, 1]
    Q,
    /// Natural logarithm: nats
    E,
    /// Base 2: bits
    #[value(name = "2")]
    Two,
}

/// Serialization of the report.
#[derive(Debug, Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Which branch of the transform pair to apply.
#[derive(Debug, Copy, Clone, PartialEq, Eq, ValueEnum)]
enum DirectionArg {
    /// The degraded branch: masses convolve along greatest common divisors
    Minus,
    /// The upgraded branch: masses convolve along least common multiples
    Plus,
}

#[derive(Args)]
struct OutputArgs {
    /// Report format
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Write the report to this file instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CapacityArgs {
    /// Channel file (.toml parses as TOML, anything else as JSON)
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    /// Capacity order to evaluate; repeatable ("0", "0.5", "1", "3/2", "inf").
    /// Defaults to the grid 0, 0.5, 1, 2, inf
    #[arg(long = "alpha", value_name = "ORDER")]
    alphas: Vec<String>,
    #[arg(long, value_enum, default_value_t = LogBaseArg::Q)]
    log_base: LogBaseArg,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(value_enum)]
    direction: DirectionArg,
    /// Channel file (.toml parses as TOML, anything else as JSON)
    #[arg(long)]
    input: PathBuf,
    /// Second channel file; omitted, the input is paired with itself
    #[arg(long, value_name = "FILE")]
    with: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct PolarizeArgs {
    /// Channel file (.toml parses as TOML, anything else as JSON)
    #[arg(long)]
    input: PathBuf,
    /// Arithmetic for the branch masses; capacities always evaluate in floats
    #[arg(long, value_enum, default_value_t = ModeArg::Float)]
    mode: ModeArg,
    /// Transform depth n
    #[arg(long, default_value_t = 8)]
    steps: u32,
    /// Sample this many branches instead of enumerating all 2^n
    #[arg(long)]
    samples: Option<usize>,
    /// Seed for sampled walks
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Threshold separating polarized from intermediate branches (0 < δ < 1/2)
    #[arg(long, default_value = "1/100")]
    delta: String,
    #[arg(long, value_enum, default_value_t = LogBaseArg::Q)]
    log_base: LogBaseArg,
    /// Permit exhaustive enumeration deeper than 20 steps
    #[arg(long)]
    allow_deep: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct AsymptoticArgs {
    /// Channel file (.toml parses as TOML, anything else as JSON)
    #[arg(long)]
    input: PathBuf,
    /// Arithmetic mode; the limit solver is exact-only
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    /// Include the step-by-step threshold sweep in the report (JSON only)
    #[arg(long)]
    trace: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Alphabet size to exercise
    #[arg(long, default_value_t = 6)]
    q: u64,
    /// Number of random channel pairs to draw
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Seed for the channel generator
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report to this file instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
