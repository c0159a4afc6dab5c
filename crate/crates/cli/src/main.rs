mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use switchcost::Error;

#[derive(Parser, Debug)]
#[command(name = "switchcost", version, about = "Zero-sum repeated games with switching costs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stationary value, optimal strategies and continuation payoffs at one c.
    Solve(Config),
    /// Stationary and static value curves over a c range.
    Curve(Config),
    /// Static minimax value and action at one c.
    Static(Config),
    /// Bound ledger, with a per-c table when c or a range is given.
    Bounds(Config),
    /// Membership test and values for a payoff tensor.
    Classify(Config),
    /// Monte-Carlo play of the optimal pair (and of the static action).
    Simulate(Config),
    /// Cross-check of every solver at one c.
    Oracle(Config),
}

#[derive(Args, Debug, Clone)]
pub struct Config {
    /// Game file (tensor file for `classify`).
    #[arg(long)]
    pub input: PathBuf,
    /// Cost weight; overrides the file's "c".
    #[arg(long, conflicts_with = "c_range", allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Cost range LO:HI; overrides the file's "c_range".
    #[arg(long, value_parser = parse_range)]
    pub c_range: Option<(f64, f64)>,
    /// Grid points for range commands; horizon for `simulate`.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Directory for output files; reports go to stdout when absent
    /// (`curve` writes to the current directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Agreement tolerance for cross-checks.
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad LO: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad HI: {e}"))?;
    if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
        return Err(format!("need 0 <= LO < HI, got {lo}:{hi}"));
    }
    Ok((lo, hi))
}

/// Failure of a command, mapped to the exit-code contract.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Solver(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Structural(_)
            | Error::InvalidProbability(_)
            | Error::Precondition(_)
            | Error::Parse(_)
            | Error::Degenerate(_) => CliError::Input(e.to_string()),
            Error::TrivialPure { .. } | Error::Resource { .. } | Error::SolverFailure { .. } => {
                CliError::Solver(e.to_string())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Solve(cfg) => commands::solve(cfg),
        Command::Curve(cfg) => commands::curve(cfg),
        Command::Static(cfg) => commands::static_value(cfg),
        Command::Bounds(cfg) => commands::bounds(cfg),
        Command::Classify(cfg) => commands::classify(cfg),
        Command::Simulate(cfg) => commands::simulate(cfg),
        Command::Oracle(cfg) => commands::oracle(cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
