//! `vortex`: command-line driver for the antiparallel vortex-pair model.

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::analyze::Analysis;
use crate::config::Overrides;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "vortex", version, about = "Vortex-filament simulations of an antiparallel pair")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file for the subcommand.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Concurrent simulations in a sweep.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Seed of the initial white noise.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Comma-separated snapshot times.
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    snapshot_times: Option<Vec<f64>>,
    /// Integrator tolerance (absolute and relative).
    #[arg(long, global = true, value_name = "REAL")]
    tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the perturbed pair through reconnection.
    Pair,
    /// Integrate the eye-shaped vortex and estimate its quasi-period.
    Eye,
    /// Integrate a self-similar profile.
    Selfsim,
    /// Sample the Riemann non-differentiable function.
    Rndf,
    /// Linear stability of the straight pair.
    Crow,
    /// Run diagnostics on a stored output directory.
    Analyze {
        /// Directory written by a previous command.
        input: PathBuf,
        /// Analyses to run; defaults to everything the inputs support.
        #[arg(long, value_delimiter = ',', value_enum)]
        what: Vec<Analysis>,
    },
    /// Run a family of pair simulations concurrently.
    Sweep,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Pair => "pair",
            Self::Eye => "eye",
            Self::Selfsim => "selfsim",
            Self::Rndf => "rndf",
            Self::Crow => "crow",
            Self::Analyze { .. } => "analyze",
            Self::Sweep => "sweep",
        }
    }
}

/// `--out`, or `out/<subcommand>`; analyses default to their input directory.
fn output_dir(cli: &Cli) -> PathBuf {
    match (&cli.out, &cli.command) {
        (Some(dir), _) => dir.clone(),
        (None, Command::Analyze { input, .. }) => input.clone(),
        (None, cmd) => PathBuf::from("out").join(cmd.name()),
    }
}

fn dispatch(cli: Cli, out: &Path) -> Result<(), CliError> {
    let overrides = Overrides { seed: cli.seed, snapshot_times: cli.snapshot_times, tol: cli.tol };
    let config = cli.config.as_deref();
    match cli.command {
        Command::Pair => commands::pair::run(config, &overrides, out),
        Command::Eye => commands::eye::run(config, &overrides, out),
        Command::Selfsim => commands::selfsim::run(config, &overrides, out),
        Command::Rndf => commands::rndf::run(config, out),
        Command::Crow => commands::crow::run(config, out),
        Command::Analyze { input, what } => commands::analyze::run(&input, &what, out),
        Command::Sweep => commands::sweep::run(config, &overrides, cli.workers, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let out = output_dir(&cli);
    match dispatch(cli, &out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let json = e.to_json();
            eprintln!("{json}");
            if out.is_dir() {
                let _ = std::fs::write(out.join("error.json"), format!("{json}\n"));
            }
            ExitCode::from(e.exit_code())
        }
    }
}
