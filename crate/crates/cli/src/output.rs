//! Run directories: `<output_dir>/<experiment>/<run-id>/`.
//!
//! The run id is a hash of the resolved configuration (without
//! `output_dir`), so rerunning a config rewrites the same directory.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use toml::Table;

use crate::config::LoadedConfig;
use crate::error::{CliError, Result};
use crate::experiments::Outcome;

pub const CONFIG_FILE: &str = "config.toml";
pub const REPORT_FILE: &str = "report.txt";
pub const SUMMARY_FILE: &str = "summary.csv";

/// The configuration as written to `config.toml`: keys sorted, no `output_dir`.
pub fn canonical_config(raw: &Table) -> String {
    let mut t = raw.clone();
    t.remove("output_dir");
    toml::to_string(&t).expect("a parsed TOML table serializes")
}

pub fn run_id(raw: &Table) -> String {
    let digest = Sha256::digest(canonical_config(raw).as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn run_dir(loaded: &LoadedConfig) -> PathBuf {
    loaded
        .config
        .resolved_output_dir()
        .join(loaded.config.experiment.as_str())
        .join(run_id(&loaded.raw))
}

fn io<T>(path: &Path, r: std::io::Result<T>) -> Result<T> {
    r.map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the config, chain CSVs, report and summary; returns the run directory.
pub fn write_run(loaded: &LoadedConfig, outcome: &Outcome) -> Result<PathBuf> {
    let dir = run_dir(loaded);
    io(&dir, fs::create_dir_all(&dir))?;
    let config_path = dir.join(CONFIG_FILE);
    io(
        &config_path,
        fs::write(&config_path, canonical_config(&loaded.raw)),
    )?;
    for chain in &outcome.chains {
        let path = dir.join(&chain.relative_path);
        if let Some(parent) = path.parent() {
            io(parent, fs::create_dir_all(parent))?;
        }
        chain.samples.write_csv_file(&path)?;
    }
    let mut report = outcome.report.clone();
    report.insert("run_id", run_id(&loaded.raw));
    let report_path = dir.join(REPORT_FILE);
    io(&report_path, fs::write(&report_path, report.to_string()))?;
    outcome.summary.write_file(&dir.join(SUMMARY_FILE))?;
    Ok(dir)
}
