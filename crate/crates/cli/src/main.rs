//! `patro` command-line front end.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use patro::PatroError;

use output::Format;

#[derive(Debug, Parser)]
#[command(name = "patro", version, about = "Ex-ante adjustments of experimental effect estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario file (TOML). For `table1`, a file or a directory of files.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write output here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Overrides the seed in the scenario file.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Rollout,
    Operational,
    Dual,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the rollout, operational or dual adjustments.
    Adjust {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "dual")]
        mode: Mode,
    },
    /// Improvement rates for the reference scenarios.
    Table1 {
        #[command(flatten)]
        common: Common,
        /// Comma-separated scenario names or 1-based row numbers.
        #[arg(long)]
        rows: Option<String>,
    },
    /// Adjustments and regret over a list of sample sizes.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated sample sizes; defaults to the scenario's.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
    },
    /// Check the modelling assumptions for a scenario.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Compare PTO, PATRO variants and the Bayes rule.
    Benchmark {
        #[command(flatten)]
        common: Common,
    },
    /// Simulate experiments end to end and compare with quadrature.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Overrides `simulation.replications`.
        #[arg(long)]
        replications: Option<usize>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Io(_) => 1,
            Self::Numerical(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Io(m) => write!(f, "i/o error: {m}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<PatroError> for CliError {
    fn from(e: PatroError) -> Self {
        match e {
            PatroError::Config(m) => Self::Config(m),
            other => Self::Numerical(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (common, result) = match cli.command {
        Command::Adjust { common, mode } => (common.clone(), commands::adjust(&common, mode)),
        Command::Table1 { common, rows } => (common.clone(), commands::table1(&common, rows.as_deref())),
        Command::Sweep { common, n_list } => (common.clone(), commands::sweep(&common, n_list)),
        Command::Validate { common } => (common.clone(), commands::validate(&common)),
        Command::Benchmark { common } => (common.clone(), commands::benchmark(&common)),
        Command::Simulate { common, replications } => (common.clone(), commands::simulate(&common, replications)),
    };
    let outcome = result.and_then(|o| {
        o.report.write(common.format.unwrap_or(o.default_format), common.out.as_deref())?;
        Ok(o.failure)
    });
    match outcome {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(failure)) => {
            eprintln!("patro: numerical failure: {failure}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("patro: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
