use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: invalid TOML: {message}")]
    Syntax { origin: String, message: String },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("bad override: {0}")]
    Override(String),
    #[error("dataset {name:?}: file {path} not found and target.synthetic_fallback is false")]
    DatasetMissing { name: String, path: PathBuf },
    #[error("incomplete run directory {path}: missing {missing}")]
    IncompleteRun { path: PathBuf, missing: String },
    #[error("sampler {sampler}, repetition {repetition}, chain {chain}: {message}")]
    Chain {
        sampler: String,
        repetition: u64,
        chain: usize,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] csgmcmc::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
