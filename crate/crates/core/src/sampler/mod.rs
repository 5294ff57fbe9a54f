//! SGLD / SGHMC updates, the cyclical two-stage driver, and an exact HMC
//! reference sampler.

mod driver;
mod hmc;
mod parallel;
mod steps;

pub use driver::{plain_stepsize, run_cyclical, run_plain, visit_cyclical, ChainFailure, ChainRun};
pub use hmc::{hamiltonian, hmc_reference, leapfrog, HmcRun};
pub use parallel::{derive_seed, run_parallel, ChainPlan, Execution};
pub use steps::{sghmc_step, sgld_step};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::ScheduleSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseSampler {
    Sgld,
    Sghmc,
    Hmc,
}

fn default_temperature() -> f64 {
    1.0
}

fn default_friction() -> f64 {
    0.5
}

fn default_leapfrog_steps() -> usize {
    10
}

fn default_hmc_stepsize() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub base: BaseSampler,
    pub schedule: ScheduleSpec,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    /// `eta`; `1 - eta` is the momentum coefficient.
    #[serde(default = "default_friction")]
    pub friction_eta: f64,
    #[serde(default)]
    pub noise_estimate_gammahat: f64,
    /// `N'`; `None` (or a value >= N) uses the full dataset each step.
    #[serde(default)]
    pub minibatch_size: Option<usize>,
    #[serde(default = "default_leapfrog_steps")]
    pub hmc_leapfrog_steps: usize,
    #[serde(default = "default_hmc_stepsize")]
    pub hmc_stepsize: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(base: BaseSampler, schedule: ScheduleSpec, seed: u64) -> Self {
        Self {
            base,
            schedule,
            temperature: default_temperature(),
            friction_eta: default_friction(),
            noise_estimate_gammahat: 0.0,
            minibatch_size: None,
            hmc_leapfrog_steps: default_leapfrog_steps(),
            hmc_stepsize: default_hmc_stepsize(),
            seed,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .schedule
            .violations()
            .into_iter()
            .map(|v| format!("schedule.{v}"))
            .collect();
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            out.push(format!(
                "temperature must be >= 0 (got {})",
                self.temperature
            ));
        }
        if self.base == BaseSampler::Sghmc {
            if !(self.friction_eta > 0.0 && self.friction_eta <= 1.0) {
                out.push(format!(
                    "friction_eta must lie in (0, 1] (got {})",
                    self.friction_eta
                ));
            }
            if !(self.noise_estimate_gammahat >= 0.0
                && self.noise_estimate_gammahat <= self.friction_eta)
            {
                out.push(format!(
                    "noise_estimate_gammahat must lie in [0, friction_eta] (got {})",
                    self.noise_estimate_gammahat
                ));
            }
        }
        if self.minibatch_size == Some(0) {
            out.push("minibatch_size must be >= 1".into());
        }
        if self.base == BaseSampler::Hmc {
            if self.hmc_leapfrog_steps == 0 {
                out.push("hmc_leapfrog_steps must be >= 1".into());
            }
            if !(self.hmc_stepsize.is_finite() && self.hmc_stepsize > 0.0) {
                out.push(format!(
                    "hmc_stepsize must be positive (got {})",
                    self.hmc_stepsize
                ));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v.join("; ")))
        }
    }
}

/// Position, momentum, iteration counter and RNG of one chain.
#[derive(Debug, Clone)]
pub struct SamplerState {
    pub theta: Vec<f64>,
    pub momentum: Option<Vec<f64>>,
    /// Number of completed updates.
    pub iter: u64,
    rng: ChaCha8Rng,
    gaussian_draws: u64,
    grad: Vec<f64>,
}

impl SamplerState {
    pub fn new(theta: Vec<f64>, seed: u64) -> Self {
        let d = theta.len();
        Self {
            theta,
            momentum: None,
            iter: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            gaussian_draws: 0,
            grad: vec![0.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Standard-normal draws consumed so far (injected noise and HMC momenta).
    pub fn gaussian_draws(&self) -> u64 {
        self.gaussian_draws
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub(crate) fn standard_normal(&mut self) -> f64 {
        use rand::Rng;
        self.gaussian_draws += 1;
        self.rng.sample(StandardNormal)
    }

    pub(crate) fn diverged(&self) -> Error {
        Error::Diverged {
            iter: self.iter + 1,
            theta: self.theta.clone(),
        }
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}
