//! `seqdisc`: expected-copy costs, optimal angles, termination strings and
//! Monte Carlo runs for bounded-error discrimination of two qubit states.

mod commands;
mod config;
mod format;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Command, Format, Preset, Settings};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<seqdisc_core::Error> for CliError {
    fn from(e: seqdisc_core::Error) -> Self {
        use seqdisc_core::Error as E;
        match e {
            E::NonConvergence { .. }
            | E::NoFeasibleAngle
            | E::EnumerationLimit { .. }
            | E::TrialOverflow { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "seqdisc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Expected copies over a grid of fixed measurement angles.
    AngleScan(Args),
    /// Expected copies of all four strategies over a range of error bounds.
    CostCurve(Args),
    /// Termination strings with probabilities and true errors.
    Strings(Args),
    /// Optimal fixed angle for each (theta, epsilon).
    Optimize(Args),
    /// Monte Carlo runs of a strategy.
    Simulate(Args),
}

#[derive(Debug, clap::Args)]
struct Args {
    /// Half-angle between the states, in radians; comma list, `pi/N` accepted.
    #[arg(long)]
    theta: Option<String>,
    /// Prior probability of the first state.
    #[arg(long)]
    q1: Option<f64>,
    /// Error bound(s); comma list.
    #[arg(long)]
    epsilon: Option<String>,
    /// Error bounds as `lo:hi:count:log|lin`.
    #[arg(long)]
    epsilon_range: Option<String>,
    /// fbm, ubm, lol, gof or fixed:<rad>; comma list.
    #[arg(long)]
    strategy: Option<String>,
    /// Angle grid points.
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Stop listing strings once this much probability is covered.
    #[arg(long)]
    coverage: Option<f64>,
    /// Longest string enumerated.
    #[arg(long)]
    max_depth: Option<usize>,
    /// Truncation depth of the cost engine.
    #[arg(long)]
    max_copies: Option<u64>,
    /// One row per string length instead of per string.
    #[arg(long)]
    aggregate: bool,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// JSON file of settings, overridden by flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write per-string simulation counts to this CSV file.
    #[arg(long)]
    strings_csv: Option<PathBuf>,
    #[arg(short = 'o', long)]
    output: PathBuf,
}

fn list<T>(
    text: Option<String>,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Option<Vec<T>>, CliError> {
    text.map(|t| t.split(',').map(|x| parse(x.trim())).collect())
        .transpose()
        .map_err(CliError::Usage)
}

impl Args {
    fn into_parts(self) -> Result<(Settings, Option<PathBuf>, Option<Preset>, PathBuf), CliError> {
        let flags = Settings {
            theta: list(self.theta, |t| Ok(config::AngleText::Text(t.to_owned())))?,
            q1: self.q1,
            epsilon: list(self.epsilon, |t| {
                t.parse::<f64>()
                    .map_err(|_| format!("cannot parse epsilon '{t}'"))
            })?,
            epsilon_range: self.epsilon_range,
            strategy: list(self.strategy, |t| Ok(t.to_owned()))?,
            resolution: self.resolution,
            trials: self.trials,
            seed: self.seed,
            coverage: self.coverage,
            max_depth: self.max_depth,
            max_copies: self.max_copies,
            aggregate: self.aggregate.then_some(true),
            format: self.format,
            strings_csv: self.strings_csv,
        };
        Ok((flags, self.config, self.preset, self.output))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (command, args) = match cli.command {
        Sub::AngleScan(a) => (Command::AngleScan, a),
        Sub::CostCurve(a) => (Command::CostCurve, a),
        Sub::Strings(a) => (Command::Strings, a),
        Sub::Optimize(a) => (Command::Optimize, a),
        Sub::Simulate(a) => (Command::Simulate, a),
    };
    let (flags, config_path, preset, output) = args.into_parts()?;
    let file = config_path
        .as_deref()
        .map(config::load_config_file)
        .transpose()?;
    let cfg = config::resolve(command, preset, file, flags, output)?;
    commands::run(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("seqdisc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
