use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("iteration {k} outside 1..={total}")]
    IterationOutOfRange { k: u64, total: u64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("chain diverged at iteration {iter}: theta = {theta:?}")]
    Diverged { iter: u64, theta: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("size mismatch: {left} vs {right} points")]
    SizeMismatch { left: usize, right: usize },

    #[error("degenerate chain: {0}")]
    DegenerateChain(String),

    #[error("cycle {0} has no samples")]
    EmptyCycle(usize),

    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),

    #[error("cycle mismatch: {0}")]
    CycleMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
