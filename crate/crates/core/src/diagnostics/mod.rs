//! Sampler quality measures: ESS, mode coverage, empirical W2 and bias/MSE probes.

mod coverage;
mod ess;
mod probe;
mod report;
mod wasserstein;

pub use coverage::{
    coverage_counts, mode_coverage, ModeCoverageSpec, DEFAULT_MIN_COUNT, DEFAULT_RADIUS,
};
pub use ess::{ess, EssInput};
pub use probe::{bias_mse_probe, ConvergenceProbe, ProbeRow};
pub use report::DiagnosticsReport;
pub use wasserstein::{optimal_assignment, wasserstein2, wasserstein2_capped, W2_CAP};
