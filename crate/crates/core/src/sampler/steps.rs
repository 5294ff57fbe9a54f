use super::{all_finite, SamplerConfig, SamplerState};
use crate::error::{Error, Result};
use crate::model::{Minibatch, TargetModel};

/// Writes `grad Ũ(theta)` into `state.grad`, drawing a fresh minibatch from the
/// chain's RNG when the target has data and `N' < N`.
fn stochastic_gradient<T: TargetModel + ?Sized>(
    state: &mut SamplerState,
    target: &T,
    minibatch_size: Option<usize>,
) -> Result<()> {
    match (target.num_data(), minibatch_size) {
        (Some(n), Some(size)) if size < n => {
            let batch = Minibatch::sample(&mut state.rng, n, size)?;
            target.grad_potential_minibatch(&state.theta, &batch, &mut state.grad);
        }
        (Some(n), Some(size)) if size > n => {
            return Err(Error::InvalidConfig(format!(
                "minibatch_size {size} exceeds dataset size {n}"
            )));
        }
        _ => target.grad_potential_full(&state.theta, &mut state.grad),
    }
    if all_finite(&state.grad) {
        Ok(())
    } else {
        Err(state.diverged())
    }
}

/// `theta <- theta - alpha grad Ũ(theta) + sqrt(2 alpha T) eps`.
///
/// At `T = 0` no noise is drawn and the update is exactly a gradient step.
pub fn sgld_step<T: TargetModel + ?Sized>(
    state: &mut SamplerState,
    target: &T,
    alpha: f64,
    temperature: f64,
    minibatch_size: Option<usize>,
) -> Result<()> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "stepsize must be positive (got {alpha})"
        )));
    }
    stochastic_gradient(state, target, minibatch_size)?;
    for (t, g) in state.theta.iter_mut().zip(&state.grad) {
        *t -= alpha * g;
    }
    if temperature > 0.0 {
        let scale = (2.0 * alpha * temperature).sqrt();
        for j in 0..state.theta.len() {
            let eps = state.standard_normal();
            state.theta[j] += scale * eps;
        }
    }
    if !all_finite(&state.theta) {
        return Err(state.diverged());
    }
    state.iter += 1;
    Ok(())
}

/// `theta <- theta + v`, then
/// `v <- v - alpha grad Ũ(theta) - eta v + sqrt(2 (eta - gammahat) alpha T) eps`
/// with the gradient taken at the updated position.
///
/// Missing momentum is initialised to zero.
pub fn sghmc_step<T: TargetModel + ?Sized>(
    state: &mut SamplerState,
    target: &T,
    alpha: f64,
    cfg: &SamplerConfig,
) -> Result<()> {
    sghmc_step_at(state, target, alpha, cfg.temperature, cfg)
}

pub(crate) fn sghmc_step_at<T: TargetModel + ?Sized>(
    state: &mut SamplerState,
    target: &T,
    alpha: f64,
    temperature: f64,
    cfg: &SamplerConfig,
) -> Result<()> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "stepsize must be positive (got {alpha})"
        )));
    }
    let eta = cfg.friction_eta;
    let gammahat = cfg.noise_estimate_gammahat;
    if !(eta > 0.0 && eta <= 1.0 && gammahat >= 0.0 && gammahat <= eta) {
        return Err(Error::InvalidConfig(format!(
            "SGHMC needs 0 < eta <= 1 and 0 <= gammahat <= eta (got eta={eta}, gammahat={gammahat})"
        )));
    }
    let d = state.theta.len();
    let mut v = state.momentum.take().unwrap_or_else(|| vec![0.0; d]);
    for (t, vj) in state.theta.iter_mut().zip(&v) {
        *t += vj;
    }
    if let Err(e) = stochastic_gradient(state, target, cfg.minibatch_size) {
        state.momentum = Some(v);
        return Err(e);
    }
    for (vj, g) in v.iter_mut().zip(&state.grad) {
        *vj -= alpha * g + eta * *vj;
    }
    let noise_var = 2.0 * (eta - gammahat) * alpha * temperature;
    if noise_var > 0.0 {
        let scale = noise_var.sqrt();
        for vj in v.iter_mut() {
            *vj += scale * state.standard_normal();
        }
    }
    let ok = all_finite(&state.theta) && all_finite(&v);
    state.momentum = Some(v);
    if !ok {
        return Err(state.diverged());
    }
    state.iter += 1;
    Ok(())
}
