//! Full-gradient Hamiltonian Monte Carlo with a Metropolis correction.
//!
//! Used as the independent reference sampler that supplies the posterior mean
//! and variance for ESS estimates.

use log::warn;
use rand::Rng;

use super::{all_finite, SamplerState};
use crate::error::{Error, Result};
use crate::model::TargetModel;
use crate::samples::{SampleRecord, SampleSet};
use crate::schedule::Stage;

/// `U(theta) + |p|^2 / 2`.
pub fn hamiltonian<T: TargetModel + ?Sized>(target: &T, theta: &[f64], momentum: &[f64]) -> f64 {
    target.potential(theta) + 0.5 * momentum.iter().map(|p| p * p).sum::<f64>()
}

/// `steps` leapfrog steps of size `stepsize`, updating `theta` and `momentum` in place.
pub fn leapfrog<T: TargetModel + ?Sized>(
    target: &T,
    theta: &mut [f64],
    momentum: &mut [f64],
    stepsize: f64,
    steps: usize,
) {
    let mut grad = vec![0.0; theta.len()];
    target.grad_potential_full(theta, &mut grad);
    for (p, g) in momentum.iter_mut().zip(&grad) {
        *p -= 0.5 * stepsize * g;
    }
    for i in 0..steps {
        for (t, p) in theta.iter_mut().zip(momentum.iter()) {
            *t += stepsize * p;
        }
        target.grad_potential_full(theta, &mut grad);
        let w = if i + 1 == steps { 0.5 } else { 1.0 };
        for (p, g) in momentum.iter_mut().zip(&grad) {
            *p -= w * stepsize * g;
        }
    }
}

#[derive(Debug, Clone)]
pub struct HmcRun {
    pub samples: SampleSet,
    pub acceptance_rate: f64,
    pub warnings: Vec<String>,
}

/// Runs `iters` HMC transitions from `init`, recording the state after every
/// transition. An acceptance rate below 0.1 adds a warning.
pub fn hmc_reference<T: TargetModel + ?Sized>(
    target: &T,
    init: &[f64],
    leapfrog_steps: usize,
    stepsize: f64,
    iters: u64,
    seed: u64,
) -> Result<HmcRun> {
    if init.len() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            actual: init.len(),
        });
    }
    if leapfrog_steps == 0 || !(stepsize.is_finite() && stepsize > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "HMC needs leapfrog_steps >= 1 and a positive stepsize (got {leapfrog_steps}, {stepsize})"
        )));
    }
    let d = target.dim();
    let mut state = SamplerState::new(init.to_vec(), seed);
    let mut current_u = target.potential(&state.theta);
    let mut proposal = vec![0.0; d];
    let mut momentum = vec![0.0; d];
    let mut samples = SampleSet::new(d);
    let mut accepted = 0u64;

    for k in 1..=iters {
        for p in momentum.iter_mut() {
            *p = state.standard_normal();
        }
        let h0 = current_u + 0.5 * momentum.iter().map(|p| p * p).sum::<f64>();
        proposal.copy_from_slice(&state.theta);
        leapfrog(
            target,
            &mut proposal,
            &mut momentum,
            stepsize,
            leapfrog_steps,
        );
        let proposed_u = target.potential(&proposal);
        let h1 = proposed_u + 0.5 * momentum.iter().map(|p| p * p).sum::<f64>();
        let u: f64 = state.rng().random();
        // Non-finite proposals are rejected outright.
        if h1.is_finite() && all_finite(&proposal) && u.ln() < h0 - h1 {
            state.theta.copy_from_slice(&proposal);
            current_u = proposed_u;
            accepted += 1;
        }
        state.iter += 1;
        samples.push(SampleRecord {
            theta: state.theta.clone(),
            iter: k,
            cycle: 1,
            stage: Stage::Sampling,
            full_log_lik: None,
        })?;
    }

    let acceptance_rate = if iters == 0 {
        1.0
    } else {
        accepted as f64 / iters as f64
    };
    let mut warnings = Vec::new();
    if acceptance_rate < 0.1 {
        let msg = format!("HMC acceptance rate {acceptance_rate:.3} < 0.1; stepsize {stepsize} is likely too large");
        warn!("{msg}");
        warnings.push(msg);
    }
    Ok(HmcRun {
        samples,
        acceptance_rate,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GaussianTarget;

    #[test]
    fn tiny_stepsize_accepts_almost_everything() {
        let t = GaussianTarget::standard(2);
        let run = hmc_reference(&t, &[0.5, -0.5], 5, 1e-5, 1000, 1).unwrap();
        assert!(run.acceptance_rate >= 0.999, "{}", run.acceptance_rate);
        assert_eq!(run.samples.len(), 1000);
    }

    #[test]
    fn energy_drift_is_small() {
        let t = GaussianTarget::standard(3);
        let mut theta = vec![1.0, -0.5, 2.0];
        let mut p = vec![0.3, 1.2, -0.7];
        let h0 = hamiltonian(&t, &theta, &p);
        leapfrog(&t, &mut theta, &mut p, 1e-3, 1000);
        let h1 = hamiltonian(&t, &theta, &p);
        assert!((h1 - h0).abs() <= 1e-4, "{}", h1 - h0);
    }

    #[test]
    fn leapfrog_is_time_reversible() {
        let t = GaussianTarget::new(vec![0.3, -0.1], 0.5).unwrap();
        let mut theta = vec![1.0, 2.0];
        let mut p = vec![-0.4, 0.9];
        leapfrog(&t, &mut theta, &mut p, 0.05, 20);
        p.iter_mut().for_each(|v| *v = -*v);
        leapfrog(&t, &mut theta, &mut p, 0.05, 20);
        assert!((theta[0] - 1.0).abs() < 1e-12 && (theta[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn huge_stepsize_warns() {
        let t = GaussianTarget::standard(1);
        let run = hmc_reference(&t, &[0.0], 10, 5.0, 200, 3).unwrap();
        assert!(run.acceptance_rate < 0.1);
        assert_eq!(run.warnings.len(), 1);
    }

    #[test]
    fn rejects_bad_arguments() {
        let t = GaussianTarget::standard(1);
        assert!(hmc_reference(&t, &[0.0, 0.0], 10, 0.1, 1, 0).is_err());
        assert!(hmc_reference(&t, &[0.0], 0, 0.1, 1, 0).is_err());
        assert!(hmc_reference(&t, &[0.0], 10, -0.1, 1, 0).is_err());
    }
}
