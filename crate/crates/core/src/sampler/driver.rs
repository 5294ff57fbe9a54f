use std::fmt;

use log::warn;

use super::steps::{sghmc_step_at, sgld_step};
use super::{BaseSampler, SamplerConfig, SamplerState};
use crate::error::{Error, Result};
use crate::model::TargetModel;
use crate::samples::{SampleRecord, SampleSet};
use crate::schedule::{ScheduleSpec, Stage};

/// A finished chain.
#[derive(Debug, Clone)]
pub struct ChainRun {
    pub samples: SampleSet,
    pub state: SamplerState,
    pub warnings: Vec<String>,
}

/// A chain that stopped early; `partial` holds everything recorded before the failure.
#[derive(Debug)]
pub struct ChainFailure {
    pub partial: SampleSet,
    pub error: Error,
}

impl fmt::Display for ChainFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} samples recorded before failure)",
            self.error,
            self.partial.len()
        )
    }
}

impl std::error::Error for ChainFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<Error> for ChainFailure {
    fn from(error: Error) -> Self {
        Self {
            partial: SampleSet::default(),
            error,
        }
    }
}

fn step<T: TargetModel + ?Sized>(
    state: &mut SamplerState,
    target: &T,
    cfg: &SamplerConfig,
    alpha: f64,
    temperature: f64,
) -> Result<()> {
    match cfg.base {
        BaseSampler::Sgld => sgld_step(state, target, alpha, temperature, cfg.minibatch_size),
        BaseSampler::Sghmc => sghmc_step_at(state, target, alpha, temperature, cfg),
        BaseSampler::Hmc => Err(Error::InvalidConfig(
            "HMC is a full-gradient reference sampler; use hmc_reference".into(),
        )),
    }
}

fn check_start<T: TargetModel + ?Sized>(
    target: &T,
    cfg: &SamplerConfig,
    theta0: &[f64],
) -> Result<()> {
    cfg.validate()?;
    if theta0.len() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            actual: theta0.len(),
        });
    }
    if let (Some(n), Some(size)) = (target.num_data(), cfg.minibatch_size) {
        if size > n {
            return Err(Error::InvalidConfig(format!(
                "minibatch_size {size} exceeds dataset size {n}"
            )));
        }
    }
    Ok(())
}

/// Runs the two-stage cyclical algorithm and calls `visit(k, cycle, state)`
/// after every sampling-stage update.
///
/// Exploration iterations take a zero-temperature step (plain gradient
/// descent for SGLD, momentum SGD for SGHMC); sampling iterations use
/// `cfg.temperature`. SGHMC momentum is reset to zero at the start of every cycle.
#[allow(clippy::result_large_err)]
pub fn visit_cyclical<T, F>(
    target: &T,
    cfg: &SamplerConfig,
    theta0: &[f64],
    mut visit: F,
) -> Result<SamplerState, (SamplerState, Error)>
where
    T: TargetModel + ?Sized,
    F: FnMut(u64, u64, &SamplerState),
{
    let mut state = SamplerState::new(theta0.to_vec(), cfg.seed);
    if let Err(e) = check_start(target, cfg, theta0) {
        return Err((state, e));
    }
    let schedule = &cfg.schedule;
    if !schedule.is_cyclical() {
        return Err((
            state,
            Error::InvalidConfig("run_cyclical needs a cyclical_cosine schedule".into()),
        ));
    }
    let len = schedule.cycle_len();
    for k in 1..=schedule.total_iters() {
        let (alpha, stage, cycle) = match (
            schedule.stepsize(k),
            schedule.stage(k),
            schedule.cycle_index(k),
        ) {
            (Ok(a), Ok(s), Ok(c)) => (a, s, c),
            (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return Err((state, e)),
        };
        if cfg.base == BaseSampler::Sghmc && (k - 1) % len == 0 {
            state.momentum = Some(vec![0.0; state.dim()]);
        }
        let temperature = match stage {
            Stage::Exploration => 0.0,
            Stage::Sampling => cfg.temperature,
        };
        if let Err(e) = step(&mut state, target, cfg, alpha, temperature) {
            return Err((state, e));
        }
        if stage == Stage::Sampling {
            visit(k, cycle, &state);
        }
    }
    Ok(state)
}

/// Iterations to keep in cycle `m`: `n` evenly spaced sampling-stage
/// iterations, the last one at the end of the cycle.
fn kept_iterations(schedule: &ScheduleSpec, m: u64, n: u64) -> Vec<u64> {
    let (_, last) = schedule.cycle_bounds(m);
    let available = schedule.sampling_len(m);
    let n = n.min(available);
    let mut keep: Vec<u64> = (0..n).map(|i| last - i * available / n).collect();
    keep.reverse();
    keep
}

/// Cyclical SG-MCMC keeping exactly `samples_per_cycle` records per cycle.
pub fn run_cyclical<T: TargetModel + ?Sized>(
    target: &T,
    cfg: &SamplerConfig,
    theta0: &[f64],
    samples_per_cycle: u64,
) -> Result<ChainRun, ChainFailure> {
    let schedule = &cfg.schedule;
    if !schedule.is_cyclical() {
        return Err(
            Error::InvalidConfig("run_cyclical needs a cyclical_cosine schedule".into()).into(),
        );
    }
    schedule.validate()?;
    let mut warnings = Vec::new();
    let shortest = schedule.min_sampling_len();
    if shortest == 0 {
        let msg = format!(
            "some cycles of length {} have no sampling stage at beta = {}; they contribute no samples",
            schedule.cycle_len(),
            match schedule {
                ScheduleSpec::CyclicalCosine { beta, .. } => *beta,
                _ => unreachable!(),
            }
        );
        warn!("{msg}");
        warnings.push(msg);
    }
    for m in 1..=schedule.realized_cycles() {
        let available = schedule.sampling_len(m);
        if available > 0 && samples_per_cycle > available {
            return Err(Error::InvalidConfig(format!(
                "samples_per_cycle {samples_per_cycle} exceeds the {available} sampling iterations of cycle {m}"
            ))
            .into());
        }
    }

    let mut samples = SampleSet::new(target.dim());
    let mut current_cycle = 0;
    let mut keep: Vec<u64> = Vec::new();
    let mut next = 0;
    let result = visit_cyclical(target, cfg, theta0, |k, cycle, state| {
        if cycle != current_cycle {
            current_cycle = cycle;
            keep = kept_iterations(schedule, cycle, samples_per_cycle);
            next = 0;
        }
        if keep.get(next) == Some(&k) {
            next += 1;
            samples
                .push(SampleRecord {
                    theta: state.theta.clone(),
                    iter: k,
                    cycle,
                    stage: Stage::Sampling,
                    full_log_lik: None,
                })
                .expect("state dimension matches target");
        }
    });
    match result {
        Ok(state) => Ok(ChainRun {
            samples,
            state,
            warnings,
        }),
        Err((_, error)) => Err(ChainFailure {
            partial: samples,
            error,
        }),
    }
}

/// Stepsize used by [`run_plain`] at iteration `k`: the constant `a` (or
/// `alpha0`) through `burn_in`, then the schedule restarted at index 1.
pub fn plain_stepsize(schedule: &ScheduleSpec, burn_in: u64, k: u64) -> Result<f64> {
    if k == 0 || k > schedule.total_iters() {
        return Err(Error::IterationOutOfRange {
            k,
            total: schedule.total_iters(),
        });
    }
    if k <= burn_in {
        Ok(match *schedule {
            ScheduleSpec::PolynomialDecay { decay_a, .. } => decay_a,
            _ => schedule.initial_stepsize(),
        })
    } else {
        schedule.stepsize(k - burn_in)
    }
}

/// Baseline SG-MCMC: a constant stepsize `a` for `burn_in` iterations, then
/// the decay schedule restarted at index 1, keeping `keep` evenly thinned
/// samples. All records carry cycle 1.
pub fn run_plain<T: TargetModel + ?Sized>(
    target: &T,
    cfg: &SamplerConfig,
    theta0: &[f64],
    burn_in: u64,
    keep: u64,
) -> Result<ChainRun, ChainFailure> {
    let schedule = &cfg.schedule;
    if schedule.is_cyclical() {
        return Err(Error::InvalidConfig(
            "run_plain needs a polynomial_decay or constant schedule".into(),
        )
        .into());
    }
    let mut state = SamplerState::new(theta0.to_vec(), cfg.seed);
    check_start(target, cfg, theta0)?;
    let total = schedule.total_iters();
    if burn_in > total {
        return Err(
            Error::InvalidConfig(format!("burn_in {burn_in} exceeds total_iters {total}")).into(),
        );
    }
    let thin = (total - burn_in).checked_div(keep).unwrap_or(1);
    if thin == 0 {
        return Err(Error::InvalidConfig(format!(
            "burn_in {burn_in} + keep {keep} exceeds total_iters {total}"
        ))
        .into());
    }
    let mut samples = SampleSet::new(target.dim());
    let run_len = burn_in + keep * thin;
    for k in 1..=run_len {
        let alpha = plain_stepsize(schedule, burn_in, k)?;
        if let Err(error) = step(&mut state, target, cfg, alpha, cfg.temperature) {
            return Err(ChainFailure {
                partial: samples,
                error,
            });
        }
        if k > burn_in && (k - burn_in).is_multiple_of(thin) {
            samples
                .push(SampleRecord {
                    theta: state.theta.clone(),
                    iter: k,
                    cycle: 1,
                    stage: Stage::Sampling,
                    full_log_lik: None,
                })
                .expect("state dimension matches target");
        }
    }
    Ok(ChainRun {
        samples,
        state,
        warnings: Vec::new(),
    })
}
