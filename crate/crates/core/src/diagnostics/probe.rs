use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::TargetModel;
use crate::sampler::{derive_seed, visit_cyclical, SamplerConfig};

/// A test function with an analytically known posterior mean.
pub struct ConvergenceProbe<F> {
    pub test_fn: F,
    pub true_mean: f64,
    pub seeds: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRow {
    pub total_iters: u64,
    /// Mean of `phi_hat` over seeds.
    pub mean_estimate: f64,
    /// `|E phi_hat - phi_bar|`.
    pub bias: f64,
    /// `E (phi_hat - phi_bar)^2`.
    pub mse: f64,
}

fn chain_average<T, F>(target: &T, cfg: &SamplerConfig, theta0: &[f64], phi: &F) -> Result<f64>
where
    T: TargetModel + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    let mut sum = 0.0;
    let mut count = 0u64;
    visit_cyclical(target, cfg, theta0, |_, _, state| {
        sum += phi(&state.theta);
        count += 1;
    })
    .map_err(|(_, e)| e)?;
    if count == 0 {
        return Err(Error::InvalidConfig(
            "probe chain produced no sampling-stage iterations".into(),
        ));
    }
    Ok(sum / count as f64)
}

/// For each `K`, runs `probe.seeds` chains of length `K` from `theta0` and
/// averages `phi` over every sampling-stage iterate of each chain.
///
/// Chain `i` uses seed `derive_seed(cfg.seed, i)` for every `K`.
pub fn bias_mse_probe<T, F>(
    target: &T,
    cfg: &SamplerConfig,
    theta0: &[f64],
    probe: &ConvergenceProbe<F>,
    k_values: &[u64],
) -> Result<Vec<ProbeRow>>
where
    T: TargetModel + ?Sized,
    F: Fn(&[f64]) -> f64 + Sync,
{
    if probe.seeds == 0 || !probe.true_mean.is_finite() {
        return Err(Error::InvalidArgument(
            "probe needs seeds >= 1 and a finite true mean".into(),
        ));
    }
    k_values
        .iter()
        .map(|&k| {
            let estimates = (0..probe.seeds)
                .into_par_iter()
                .map(|i| {
                    let mut c = cfg.clone();
                    c.seed = derive_seed(cfg.seed, i);
                    c.schedule = c.schedule.with_total_iters(k);
                    chain_average(target, &c, theta0, &probe.test_fn)
                })
                .collect::<Result<Vec<f64>>>()?;
            let n = estimates.len() as f64;
            let mean_estimate = estimates.iter().sum::<f64>() / n;
            let mse = estimates
                .iter()
                .map(|e| (e - probe.true_mean).powi(2))
                .sum::<f64>()
                / n;
            Ok(ProbeRow {
                total_iters: k,
                mean_estimate,
                bias: (mean_estimate - probe.true_mean).abs(),
                mse,
            })
        })
        .collect()
}
