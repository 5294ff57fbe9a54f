//! Configuration, experiment runners and run-directory output for the
//! `csgmcmc` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod plot;
pub mod table;

use std::path::{Path, PathBuf};

pub use config::{ExperimentConfig, ExperimentKind, LoadedConfig};
pub use error::{CliError, Result};
pub use experiments::Outcome;

/// Loads `path` with `overrides`, runs the experiment and writes the run
/// directory, which is returned.
pub fn run_config(path: &Path, overrides: &[String]) -> Result<PathBuf> {
    let loaded = config::load(path, overrides)?;
    let outcome = experiments::run(&loaded.config)?;
    output::write_run(&loaded, &outcome)
}
