use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use csgmcmc_cli::{config, plot, run_config};
use log::error;

/// Cyclical SG-MCMC experiment runner.
#[derive(Debug, Parser)]
#[command(name = "csgmcmc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write its run directory.
    Run {
        config: PathBuf,
        /// Override a config value, e.g. `--set samplers.csgld.schedule.alpha0=0.2`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Check a config and list every violation.
    Validate {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Write plot-ready CSV tables into `<run_dir>/plot/`.
    PlotData { run_dir: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, overrides } => run_config(&config, &overrides).map(|dir| {
            println!("{}", dir.display());
        }),
        Command::Validate { config, overrides } => match config::validate_file(&config, &overrides)
        {
            Ok(v) if v.is_empty() => {
                println!("{}: ok", config.display());
                Ok(())
            }
            Ok(v) => {
                for msg in &v {
                    eprintln!("{}: {msg}", config.display());
                }
                return ExitCode::from(2);
            }
            Err(e) => Err(e),
        },
        Command::PlotData { run_dir } => plot::emit_plot_data(&run_dir).map(|files| {
            for f in files {
                println!("{}", f.display());
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::FAILURE
        }
    }
}
