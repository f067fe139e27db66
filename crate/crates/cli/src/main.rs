//! `internmatch`: run the lottery pipeline and its experiments from files.
//!
//! Exit codes: 0 success, 2 validation failure, 3 infeasible or degenerate
//! instance, 4 I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use internmatch_core::Error;

mod commands;
mod output;

#[derive(Parser, Debug)]
#[command(
    name = "internmatch",
    version,
    about = "Probabilistic intern-hospital assignment with couples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// RSD estimate, Do-No-Harm trade, decomposition, and one sampled assignment.
    Pipeline(PipelineArgs),
    /// Market-draw experiments with error histograms.
    Bench(BenchArgs),
    /// Hospital ratings and preference-heterogeneity statistics.
    Rate(RateArgs),
    /// Write generated instances to disk.
    Generate(GenerateArgs),
    /// Decompose a target matrix into a lottery over assignments.
    Decompose(DecomposeArgs),
    /// Estimate the RSD assignment probabilities.
    Rsd(RsdArgs),
    /// Solve the Do-No-Harm trade program for a baseline matrix.
    Lp(LpArgs),
}

#[derive(Args, Debug, Clone)]
struct ProblemFiles {
    /// Preferences CSV: unit_id,kind,member_ids,rank1,…
    #[arg(long)]
    preferences: PathBuf,
    /// Hospitals CSV: hospital_id,capacity
    #[arg(long)]
    hospitals: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Subsample,
    Random,
    CapacityCouples,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    LowerBound,
    SmallProbs,
    Coloring,
    Random,
    Market,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    #[command(flatten)]
    files: ProblemFiles,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_enum, default_value_t = Mode::Random)]
    mode: Mode,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    markets: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo trials per market for the RSD baseline.
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 496)]
    interns: usize,
    #[arg(long, default_value_t = 24)]
    couples: usize,
    /// Capacity template, comma-separated; defaults to 23 hospitals with minimum 4.
    #[arg(long, value_delimiter = ',')]
    template: Option<Vec<usize>>,
    /// Preference pool for the subsample modes (a synthetic pool otherwise).
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct RateArgs {
    #[command(flatten)]
    files: ProblemFiles,
    /// Area map CSV: hospital_id,area
    #[arg(long)]
    areas: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    k_max: usize,
    /// Hospital ignored by the same-area statistic.
    #[arg(long)]
    exclude: Option<String>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Size parameter of the lower-bound instance.
    #[arg(long, default_value_t = 16)]
    n: usize,
    /// Half the number of primed hospitals (small-probs).
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Capacity parameter, capacity = 2k+1 (small-probs).
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Edge list of a cubic graph (coloring); K4 when omitted.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 496)]
    interns: usize,
    #[arg(long, default_value_t = 24)]
    couples: usize,
    #[arg(long, value_delimiter = ',')]
    template: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    #[command(flatten)]
    files: ProblemFiles,
    /// Target matrix CSV.
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct RsdArgs {
    #[command(flatten)]
    files: ProblemFiles,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Enumerate every draw order instead of sampling (at most 9 units).
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct LpArgs {
    #[command(flatten)]
    files: ProblemFiles,
    /// Baseline probability matrix CSV.
    #[arg(long)]
    baseline: PathBuf,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 4,
        Error::CapacityOverflow { .. }
        | Error::CoupleStranded { .. }
        | Error::AllOrdersStranded
        | Error::NotConverged { .. }
        | Error::Lp(_)
        | Error::Internal(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Pipeline(a) => commands::pipeline(a),
        Command::Bench(a) => commands::bench(a),
        Command::Rate(a) => commands::rate(a),
        Command::Generate(a) => commands::generate(a),
        Command::Decompose(a) => commands::decompose(a),
        Command::Rsd(a) => commands::rsd(a),
        Command::Lp(a) => commands::lp(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
