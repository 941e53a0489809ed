//! Batch command-line front end for the perturbed-SIS simulation toolkit.
//!
//! Every run is a pure function of its effective configuration (including
//! the seed): re-running a command reproduces its output files byte for
//! byte, regardless of thread count.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Config;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments; exit code 2.
    Config(String),
    /// Failure while running or writing; exit code 1.
    Runtime(String),
}

#[derive(Parser)]
#[command(
    name = "ousis",
    about = "SIS epidemics with stochastically perturbed transmission rates",
    version
)]
struct Cli {
    /// Scenario config file (flat key = value lines); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base seed for all randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file (or directory for `figures`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Solution route.
    #[arg(long, global = true, value_parser = ["closed_form", "ito_em", "wong_zakai", "gray"])]
    route: Option<String>,

    /// Number of ensemble paths.
    #[arg(long, global = true)]
    paths: Option<u32>,

    /// Time horizon.
    #[arg(long, global = true)]
    t_end: Option<f64>,

    /// Grid step.
    #[arg(long, global = true)]
    dt: Option<f64>,

    /// Write the effective configuration to this file.
    #[arg(long, global = true)]
    dump_config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one trajectory and write `t,infected[,noise]` CSV.
    Simulate,
    /// Evaluate the unperturbed solution on the grid.
    Deterministic,
    /// Run an ensemble; write per-path verdicts CSV and a summary text file.
    Ensemble,
    /// Strong-error convergence table of the configured route.
    Converge {
        /// Comma-separated list of decreasing grid steps.
        #[arg(long, value_delimiter = ',')]
        dt_list: Option<Vec<f64>>,
        /// Seeds (paths) per grid step.
        #[arg(long, default_value_t = 20)]
        seeds: u32,
    },
    /// Emit plot-ready CSVs for a bundled scenario set (2-6).
    Figures {
        /// Scenario set id.
        id: u8,
    },
}

fn effective_config(cli: &Cli) -> Result<Config, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => Config::from_file(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(route) = &cli.route {
        cfg.set("route", route)?;
    }
    if let Some(paths) = cli.paths {
        cfg.paths = paths;
    }
    if let Some(t_end) = cli.t_end {
        cfg.t_end = t_end;
    }
    if let Some(dt) = cli.dt {
        cfg.dt = dt;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = effective_config(cli)?;
    if let Some(dump) = &cli.dump_config {
        if let Some(parent) = dump.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|e| {
                    CliError::Runtime(format!("cannot create {}: {e}", parent.display()))
                })?;
            }
        }
        std::fs::write(dump, cfg.serialize())
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", dump.display())))?;
    }

    let out = || -> Result<PathBuf, CliError> {
        cli.out
            .clone()
            .ok_or_else(|| CliError::Config("--out is required for this command".into()))
    };

    match &cli.command {
        Command::Simulate => commands::simulate(&cfg, &out()?),
        Command::Deterministic => commands::deterministic(&cfg, &out()?),
        Command::Ensemble => commands::ensemble(&cfg, &out()?),
        Command::Converge { dt_list, seeds } => {
            let default_list: Vec<f64> = (6..=12).map(|k| (2.0f64).powi(-k)).collect();
            let list = dt_list.clone().unwrap_or(default_list);
            commands::converge(&cfg, &list, *seeds, &out()?)
        }
        Command::Figures { id } => commands::figures(*id, &out()?, cfg.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
