//! Stepsize schedules and the exploration/sampling stage split.
//!
//! Iterations are 1-based throughout. The cyclical schedule restarts at
//! `alpha0` every `ceil(K / M)` iterations and follows a half cosine down to
//! (almost) zero inside each cycle.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleSpec {
    CyclicalCosine {
        alpha0: f64,
        num_cycles: u64,
        total_iters: u64,
        beta: f64,
    },
    /// `alpha_k = a (b + k)^(-gamma)`.
    PolynomialDecay {
        decay_a: f64,
        decay_b: f64,
        decay_gamma: f64,
        total_iters: u64,
    },
    Constant {
        alpha0: f64,
        total_iters: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Exploration,
    Sampling,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Exploration => "exploration",
            Stage::Sampling => "sampling",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exploration" => Ok(Stage::Exploration),
            "sampling" => Ok(Stage::Sampling),
            other => Err(Error::InvalidArgument(format!("unknown stage {other:?}"))),
        }
    }
}

impl ScheduleSpec {
    pub fn cyclical(alpha0: f64, num_cycles: u64, total_iters: u64, beta: f64) -> Result<Self> {
        let spec = ScheduleSpec::CyclicalCosine {
            alpha0,
            num_cycles,
            total_iters,
            beta,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn polynomial(
        decay_a: f64,
        decay_b: f64,
        decay_gamma: f64,
        total_iters: u64,
    ) -> Result<Self> {
        let spec = ScheduleSpec::PolynomialDecay {
            decay_a,
            decay_b,
            decay_gamma,
            total_iters,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn constant(alpha0: f64, total_iters: u64) -> Result<Self> {
        let spec = ScheduleSpec::Constant {
            alpha0,
            total_iters,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Every violated invariant, in field order.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let positive = |name: &str, v: f64, out: &mut Vec<String>| {
            if !(v.is_finite() && v > 0.0) {
                out.push(format!("{name} must be a finite positive number (got {v})"));
            }
        };
        match *self {
            ScheduleSpec::CyclicalCosine {
                alpha0,
                num_cycles,
                total_iters,
                beta,
            } => {
                positive("alpha0", alpha0, &mut out);
                if num_cycles < 1 {
                    out.push("num_cycles must be >= 1".into());
                }
                if total_iters < num_cycles.max(1) {
                    out.push(format!(
                        "total_iters must be >= num_cycles (got {total_iters} < {num_cycles})"
                    ));
                }
                // beta = 0 is accepted: it is the "no exploration" limit used by
                // the convergence probes.
                if !(0.0..1.0).contains(&beta) {
                    out.push(format!("beta must lie in [0, 1) (got {beta})"));
                }
            }
            ScheduleSpec::PolynomialDecay {
                decay_a,
                decay_b,
                decay_gamma,
                total_iters,
            } => {
                positive("decay_a", decay_a, &mut out);
                if !(decay_b.is_finite() && decay_b >= 0.0) {
                    out.push(format!("decay_b must be >= 0 (got {decay_b})"));
                }
                if !(decay_gamma > 0.5 && decay_gamma <= 1.0) {
                    out.push(format!(
                        "decay_gamma must lie in (0.5, 1] (got {decay_gamma})"
                    ));
                }
                if total_iters < 1 {
                    out.push("total_iters must be >= 1".into());
                }
            }
            ScheduleSpec::Constant {
                alpha0,
                total_iters,
            } => {
                positive("alpha0", alpha0, &mut out);
                if total_iters < 1 {
                    out.push("total_iters must be >= 1".into());
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSchedule(v.join("; ")))
        }
    }

    pub fn total_iters(&self) -> u64 {
        match *self {
            ScheduleSpec::CyclicalCosine { total_iters, .. }
            | ScheduleSpec::PolynomialDecay { total_iters, .. }
            | ScheduleSpec::Constant { total_iters, .. } => total_iters,
        }
    }

    pub fn with_total_iters(mut self, k: u64) -> Self {
        match &mut self {
            ScheduleSpec::CyclicalCosine { total_iters, .. }
            | ScheduleSpec::PolynomialDecay { total_iters, .. }
            | ScheduleSpec::Constant { total_iters, .. } => *total_iters = k,
        }
        self
    }

    /// Initial (largest) stepsize of the schedule.
    pub fn initial_stepsize(&self) -> f64 {
        match *self {
            ScheduleSpec::CyclicalCosine { alpha0, .. } | ScheduleSpec::Constant { alpha0, .. } => {
                alpha0
            }
            ScheduleSpec::PolynomialDecay {
                decay_a,
                decay_b,
                decay_gamma,
                ..
            } => decay_a * (decay_b + 1.0).powf(-decay_gamma),
        }
    }

    pub fn is_cyclical(&self) -> bool {
        matches!(self, ScheduleSpec::CyclicalCosine { .. })
    }

    /// `ceil(K / M)`; the whole run is one "cycle" for non-cyclical schedules.
    pub fn cycle_len(&self) -> u64 {
        match *self {
            ScheduleSpec::CyclicalCosine {
                num_cycles,
                total_iters,
                ..
            } => total_iters.div_ceil(num_cycles),
            _ => self.total_iters(),
        }
    }

    fn check_k(&self, k: u64) -> Result<()> {
        let total = self.total_iters();
        if k == 0 || k > total {
            return Err(Error::IterationOutOfRange { k, total });
        }
        Ok(())
    }

    pub fn stepsize(&self, k: u64) -> Result<f64> {
        self.check_k(k)?;
        Ok(match *self {
            ScheduleSpec::CyclicalCosine { alpha0, .. } => {
                let len = self.cycle_len();
                let pos = ((k - 1) % len) as f64 / len as f64;
                0.5 * alpha0 * ((PI * pos).cos() + 1.0)
            }
            ScheduleSpec::PolynomialDecay {
                decay_a,
                decay_b,
                decay_gamma,
                ..
            } => decay_a * (decay_b + k as f64).powf(-decay_gamma),
            ScheduleSpec::Constant { alpha0, .. } => alpha0,
        })
    }

    /// Completed proportion of the current cycle, `mod(k-1, L) / L`.
    pub fn cycle_progress(&self, k: u64) -> Result<f64> {
        self.check_k(k)?;
        let len = self.cycle_len();
        Ok(((k - 1) % len) as f64 / len as f64)
    }

    /// Stage label for a cyclical schedule. Errors on non-cyclical specs; use
    /// [`ScheduleSpec::effective_stage`] when any schedule kind is acceptable.
    pub fn stage(&self, k: u64) -> Result<Stage> {
        match *self {
            ScheduleSpec::CyclicalCosine { beta, .. } => {
                let r = self.cycle_progress(k)?;
                Ok(if r < beta {
                    Stage::Exploration
                } else {
                    Stage::Sampling
                })
            }
            _ => Err(Error::InvalidSchedule(
                "stage labels are only defined for the cyclical schedule".into(),
            )),
        }
    }

    /// Like [`ScheduleSpec::stage`], but non-cyclical schedules sample at every iteration.
    pub fn effective_stage(&self, k: u64) -> Result<Stage> {
        if self.is_cyclical() {
            self.stage(k)
        } else {
            self.check_k(k)?;
            Ok(Stage::Sampling)
        }
    }

    /// 1-based cycle index `1 + floor((k-1) / L)`.
    pub fn cycle_index(&self, k: u64) -> Result<u64> {
        if !self.is_cyclical() {
            return Err(Error::InvalidSchedule(
                "cycle index is only defined for the cyclical schedule".into(),
            ));
        }
        self.check_k(k)?;
        Ok(1 + (k - 1) / self.cycle_len())
    }

    /// Number of cycles that actually contain iterations. With ceiling
    /// division this can be below `num_cycles` when K is not a multiple of M.
    pub fn realized_cycles(&self) -> u64 {
        self.total_iters().div_ceil(self.cycle_len())
    }

    /// First and last iteration (inclusive) of cycle `m`.
    pub fn cycle_bounds(&self, m: u64) -> (u64, u64) {
        let len = self.cycle_len();
        let first = (m - 1) * len + 1;
        let last = (m * len).min(self.total_iters());
        (first, last)
    }

    /// Sampling-stage iterations in cycle `m`.
    pub fn sampling_len(&self, m: u64) -> u64 {
        let (first, last) = self.cycle_bounds(m);
        (first..=last)
            .filter(|&k| matches!(self.effective_stage(k), Ok(Stage::Sampling)))
            .count() as u64
    }

    /// Shortest sampling stage over all cycles.
    pub fn min_sampling_len(&self) -> u64 {
        (1..=self.realized_cycles())
            .map(|m| self.sampling_len(m))
            .min()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mixture_cyclical() -> ScheduleSpec {
        ScheduleSpec::cyclical(0.09, 30, 50_000, 0.25).unwrap()
    }

    #[test]
    fn cyclical_first_iteration_is_alpha0() {
        assert_eq!(mixture_cyclical().stepsize(1).unwrap(), 0.09);
    }

    #[test]
    fn cyclical_half_cycle_is_half_alpha0() {
        let a = mixture_cyclical().stepsize(834).unwrap();
        assert!((a / 0.045 - 1.0).abs() < 0.005, "{a}");
    }

    #[test]
    fn polynomial_first_iteration() {
        let s = ScheduleSpec::polynomial(0.05, 0.0, 0.55, 100).unwrap();
        assert_eq!(s.stepsize(1).unwrap(), 0.05);
    }

    #[test]
    fn constant_schedule() {
        let s = ScheduleSpec::constant(0.3, 10).unwrap();
        assert_eq!(s.stepsize(7).unwrap(), 0.3);
        assert_eq!(s.effective_stage(7).unwrap(), Stage::Sampling);
    }

    #[test]
    fn out_of_range_iterations() {
        let s = mixture_cyclical();
        assert!(matches!(
            s.stepsize(0),
            Err(Error::IterationOutOfRange { .. })
        ));
        assert!(matches!(
            s.stepsize(50_001),
            Err(Error::IterationOutOfRange { .. })
        ));
        assert!(s.cycle_index(50_001).is_err());
    }

    #[test]
    fn stage_examples() {
        // K = 1000, M = 1 -> L = 1000, r(k) = (k-1)/1000.
        let s = ScheduleSpec::cyclical(0.1, 1, 1000, 0.25).unwrap();
        assert_eq!(s.stage(101).unwrap(), Stage::Exploration); // r = 0.1
        assert_eq!(s.stage(501).unwrap(), Stage::Sampling); // r = 0.5
        assert_eq!(mixture_cyclical().stage(1).unwrap(), Stage::Exploration);
    }

    #[test]
    fn stage_rejects_non_cyclical() {
        let s = ScheduleSpec::constant(0.1, 10).unwrap();
        assert!(matches!(s.stage(1), Err(Error::InvalidSchedule(_))));
    }

    #[test]
    fn cycle_index_examples() {
        let s = mixture_cyclical();
        assert_eq!(s.cycle_len(), 1667);
        assert_eq!(s.cycle_index(1).unwrap(), 1);
        assert_eq!(s.cycle_index(1668).unwrap(), 2);
        // 1 + floor(49999 / 1667) = 1 + 29
        assert_eq!(s.cycle_index(50_000).unwrap(), 30);
    }

    #[test]
    fn validation_collects_every_violation() {
        let s = ScheduleSpec::CyclicalCosine {
            alpha0: -1.0,
            num_cycles: 0,
            total_iters: 10,
            beta: 1.5,
        };
        assert_eq!(s.violations().len(), 3);
        let p = ScheduleSpec::PolynomialDecay {
            decay_a: 0.1,
            decay_b: 0.0,
            decay_gamma: 0.5,
            total_iters: 10,
        };
        assert_eq!(p.violations().len(), 1);
    }

    #[test]
    fn sampling_lengths_for_mixture_setting() {
        let s = mixture_cyclical();
        // 417 exploration iterations (j < 0.25 * 1667) per cycle.
        assert_eq!(s.sampling_len(1), 1250);
        // Last cycle is truncated: 50000 - 29 * 1667 = 1657 iterations.
        assert_eq!(s.sampling_len(30), 1240);
        assert_eq!(s.min_sampling_len(), 1240);
        assert_eq!(s.realized_cycles(), 30);
    }
}
