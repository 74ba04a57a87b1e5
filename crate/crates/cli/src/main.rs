//! `phi4-flow`: evaluate flow-equation coefficient functions, print
//! counterterms and closed-form oracles, and run the verification suites.

mod commands;
mod config;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phi4_flow::verification::Verdict;
use phi4_flow::{CasIndex, FlowError};

use crate::config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("out of scope: {0}")]
    Scope(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::Scope(s) => CliError::Scope(s.to_string()),
            FlowError::Quadrature(q) => CliError::Quadrature(q.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<phi4_flow::LatticeError> for CliError {
    fn from(e: phi4_flow::LatticeError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Scope(_) => 3,
            CliError::Quadrature(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "phi4-flow",
    version,
    about = "Perturbative flow equations for lattice phi^4 theory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration; defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Write gnuplot scripts next to the sweep tables.
    #[arg(long)]
    emit_gnuplot: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coefficient functions at the configured momenta and scales.
    Eval(Common),
    /// Counterterms per loop order.
    Counterterms(Common),
    /// Verification suites: lemma1, lemma2, rotation, cauchy, power-counting, delta.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Suites to run; the configured list when empty.
        suites: Vec<String>,
        /// Restrict function sweeps to one `l,n`.
        #[arg(long, value_parser = parse_index)]
        ln: Option<CasIndex>,
    },
    /// Closed-form values that bypass the flow.
    Oracle(Common),
}

fn parse_index(s: &str) -> Result<CasIndex, String> {
    let (l, n) = s.split_once(',').ok_or_else(|| format!("expected l,n, got {s:?}"))?;
    let l = l.trim().parse().map_err(|e| format!("loop order: {e}"))?;
    let n = n.trim().parse().map_err(|e| format!("leg count: {e}"))?;
    Ok(CasIndex::new(l, n))
}

fn run(cli: Cli) -> Result<Verdict, CliError> {
    let common = match &cli.command {
        Command::Eval(c) | Command::Counterterms(c) | Command::Oracle(c) => c,
        Command::Verify { common, .. } => common,
    };
    if let Some(threads) = common.threads {
        if threads == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let config = RunConfig::load(common.config.as_deref())?;
    if common.emit_gnuplot && config.output.dir.is_none() {
        return Err(CliError::Config("--emit-gnuplot needs [output] dir".into()));
    }
    let outcome = match &cli.command {
        Command::Eval(_) => commands::eval(&config)?,
        Command::Counterterms(_) => commands::counterterms(&config)?,
        Command::Oracle(_) => commands::oracle(&config)?,
        Command::Verify { suites, ln, .. } => commands::verify(&config, suites, *ln, common.emit_gnuplot)?,
    };
    match &config.output.dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            for artifact in &outcome.artifacts {
                let path = dir.join(&artifact.name);
                std::fs::write(&path, &artifact.content)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            }
            print!("{}", outcome.summary);
        }
        None => print!("{}", outcome.stdout),
    }
    Ok(outcome.verdict)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(5),
        Ok(Verdict::Inconclusive) => ExitCode::from(6),
        Err(e) => {
            eprintln!("phi4-flow: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
