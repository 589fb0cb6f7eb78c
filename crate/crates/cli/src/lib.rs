//! `fplab` command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error,
//! 3 numeric failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod sweep;
pub mod verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Hard cap on `run --expand`; per-step CSV beyond this is refused.
pub const EXPAND_MAX_STEPS: u64 = 1_000_000;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Verification(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Verification(_) => EXIT_VERIFY,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl From<fplab::Error> for CliError {
    fn from(e: fplab::Error) -> Self {
        match e {
            fplab::Error::Overflow { .. } => CliError::Numeric(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "fplab", version, about = "Exact-arithmetic fictitious play lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a game file.
    Gen(GenArgs),
    /// Run fictitious play on a game file.
    Run(RunArgs),
    /// Certify a recorded run.
    Analyze(AnalyzeArgs),
    /// Last-occurrence scores, the regret guarantee, and trace certification.
    Bounds(BoundsArgs),
    /// Run property suites; exit 0 iff all pass.
    Verify(VerifyArgs),
    /// Run and analyze a parameter grid in parallel.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Gn,
    Shapley,
    Mp,
    Random,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    /// `G_n` size parameter.
    #[arg(long)]
    pub n: Option<usize>,
    /// `G_n` coupling, `alpha = 1 + 1/k`, `beta = 1 - 1/k^2` (rational `P/Q`).
    #[arg(long)]
    pub k: Option<String>,
    /// Explicit `alpha` for `G_n` (requires `--beta`; overrides `--k`).
    #[arg(long, requires = "beta")]
    pub alpha: Option<String>,
    #[arg(long, requires = "alpha")]
    pub beta: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random game size `MxN`.
    #[arg(long, default_value = "5x5")]
    pub size: String,
    #[arg(long, default_value_t = 16)]
    pub denom_bits: u32,
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TieBreak {
    Lowest,
    Highest,
    Incumbent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Schedule {
    Blocks,
    Pow2,
    Mixed,
    All,
    None,
}

impl From<Schedule> for fplab::engine::EpsilonSchedule {
    fn from(s: Schedule) -> Self {
        use fplab::engine::EpsilonSchedule as E;
        match s {
            Schedule::Blocks => E::Blocks,
            Schedule::Pow2 => E::PowersOfTwo,
            Schedule::Mixed => E::BlocksAndPowers,
            Schedule::All => E::EveryStep,
            Schedule::None => E::None,
        }
    }
}

impl From<TieBreak> for fplab::engine::TieRule {
    fn from(t: TieBreak) -> Self {
        use fplab::engine::TieRule as T;
        match t {
            TieBreak::Lowest => T::Lowest,
            TieBreak::Highest => T::Highest,
            TieBreak::Incumbent => T::IncumbentThenLowest,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub game: PathBuf,
    #[arg(long)]
    pub steps: u64,
    #[arg(long, value_enum, default_value_t = TieBreak::Lowest)]
    pub tie_break: TieBreak,
    /// 1-based initial profile `R,C`.
    #[arg(long, default_value = "1,1")]
    pub start: String,
    #[arg(long, value_enum, default_value_t = Schedule::Mixed)]
    pub eps_schedule: Schedule,
    /// Run-length trace CSV.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
    /// JSON stats; `-` for stdout.
    #[arg(long)]
    pub stats_out: Option<PathBuf>,
    /// Sampled regrets as CSV.
    #[arg(long)]
    pub eps_out: Option<PathBuf>,
    /// Per-step CSV (at most 10^6 steps).
    #[arg(long)]
    pub expand: Option<PathBuf>,
    /// Resume from a snapshot instead of starting at step 1.
    #[arg(long, conflicts_with = "start")]
    pub resume: Option<PathBuf>,
    /// Write a snapshot after the last step.
    #[arg(long)]
    pub checkpoint_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub game: PathBuf,
    #[arg(long)]
    pub trace: PathBuf,
    /// Comma-separated subset of structure,recurrences,ratios,tailmass,ne.
    #[arg(long, value_delimiter = ',')]
    pub checks: Vec<String>,
    #[arg(long, value_enum, default_value_t = Schedule::Mixed)]
    pub eps_schedule: Schedule,
    /// Output JSON; `-` for stdout.
    #[arg(long, default_value = "-")]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("mode").required(true).args(["min_s", "epsilon_star", "certify"])))]
pub struct BoundsArgs {
    /// Minimize the last-occurrence score over sequences.
    #[arg(long)]
    pub min_s: bool,
    /// Evaluate the regret guarantee `1/2 + 1/t - 1/(2n)`.
    #[arg(long)]
    pub epsilon_star: bool,
    /// Check a recorded trace against both bounds.
    #[arg(long)]
    pub certify: bool,
    #[arg(long)]
    pub t: Option<u64>,
    #[arg(long)]
    pub n: Option<u64>,
    /// Scan all `n^t` sequences instead of block compositions.
    #[arg(long)]
    pub exhaustive: bool,
    #[arg(long)]
    pub game: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Rescale each player's payoffs to `[0, 1]` before certifying.
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, value_enum, default_value_t = Schedule::Mixed)]
    pub eps_schedule: Schedule,
    /// Output file; stdout when absent.
    #[arg(short = 'o', long = "out")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Core,
    Gn,
    Bounds,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    /// Smaller horizons and sample counts.
    #[arg(long)]
    pub quick: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepFamily {
    Gn,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = SweepFamily::Gn)]
    pub family: SweepFamily,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
    /// Rationals `P/Q`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k_list: Vec<String>,
    #[arg(long)]
    pub steps: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

/// Parses and executes one invocation; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("fplab: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Gen(a) => commands::gen(&a),
        Command::Run(a) => commands::run(&a),
        Command::Analyze(a) => commands::analyze(&a),
        Command::Bounds(a) => commands::bounds(&a),
        Command::Verify(a) => verify::cmd_verify(&a),
        Command::Sweep(a) => sweep::cmd_sweep(&a),
    }
}
