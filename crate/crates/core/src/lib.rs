//! Cyclical stochastic-gradient MCMC: stepsize schedules, SGLD/SGHMC
//! samplers, target models, diagnostics and cycle-weighted combination.
//!
//! ```
//! use csgmcmc::model::{mixture_target, GaussianMixtureSpec};
//! use csgmcmc::sampler::run_cyclical;
//! use csgmcmc::diagnostics::{mode_coverage, ModeCoverageSpec};
//! use csgmcmc::{BaseSampler, SamplerConfig, ScheduleSpec};
//!
//! # fn main() -> csgmcmc::Result<()> {
//! let spec = GaussianMixtureSpec::grid25();
//! let centers = spec.centers.iter().map(|c| c.to_vec()).collect();
//! let target = mixture_target(spec)?;
//! let schedule = ScheduleSpec::cyclical(0.09, 30, 50_000, 0.25)?;
//! let cfg = SamplerConfig::new(BaseSampler::Sgld, schedule, 42);
//! let run = run_cyclical(&target, &cfg, &[0.0, 0.0], 400).map_err(|f| f.error)?;
//! let covered = mode_coverage(&run.samples, &ModeCoverageSpec::new(centers)?)?;
//! assert!(covered > 1);
//! # Ok(())
//! # }
//! ```

// `!(x > 0.0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combine;
pub mod diagnostics;
pub mod error;
pub mod model;
pub(crate) mod numerics;
pub mod sampler;
pub mod samples;
pub mod schedule;

pub use combine::{
    harmonic_weights, region_expectation, weighted_expectation, CycleWeights, NearestCentroid,
    RegionClassifier,
};
pub use error::{Error, Result};
pub use model::{
    Dataset, GaussianMixture, GaussianMixtureSpec, GaussianTarget, LogisticRegression, Minibatch,
    TargetModel,
};
pub use sampler::{BaseSampler, SamplerConfig, SamplerState};
pub use samples::{SampleRecord, SampleSet};
pub use schedule::{ScheduleSpec, Stage};
