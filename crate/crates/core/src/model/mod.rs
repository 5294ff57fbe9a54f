//! Differentiable target distributions `p(theta | D) ∝ exp(-U(theta))`.

mod data;
mod gaussian;
mod logistic;
mod mixture;

pub use data::{load_csv, synth_logistic, Dataset};
pub use gaussian::GaussianTarget;
pub use logistic::{blr_target, LogisticRegression, DEFAULT_PRIOR_VARIANCE};
pub use mixture::{mixture_target, GaussianMixture, GaussianMixtureSpec};

use rand::Rng;

use crate::error::{Error, Result};

/// A target the samplers can run on.
///
/// Implementations are immutable after construction; every method is a pure
/// function of its arguments so one instance can be shared by many chains.
pub trait TargetModel: Send + Sync {
    fn dim(&self) -> usize;

    /// Number of data points, or `None` for targets without a dataset (whose
    /// minibatch gradient is the full gradient).
    fn num_data(&self) -> Option<usize> {
        None
    }

    /// `U(theta) = -log p(D | theta) - log p(theta)`, up to an additive constant.
    fn potential(&self, theta: &[f64]) -> f64;

    fn grad_potential_full(&self, theta: &[f64], grad: &mut [f64]);

    /// Unbiased minibatch estimate of the gradient; the likelihood part is
    /// rescaled by `N / N'`.
    fn grad_potential_minibatch(&self, theta: &[f64], batch: &Minibatch, grad: &mut [f64]) {
        let _ = batch;
        self.grad_potential_full(theta, grad);
    }

    /// `log p(D | theta)` over the full dataset. Targets without data treat the
    /// whole density as likelihood under a flat prior, i.e. return `-U(theta)`.
    fn full_log_likelihood(&self, theta: &[f64]) -> f64;
}

impl<T: TargetModel + ?Sized> TargetModel for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn num_data(&self) -> Option<usize> {
        (**self).num_data()
    }
    fn potential(&self, theta: &[f64]) -> f64 {
        (**self).potential(theta)
    }
    fn grad_potential_full(&self, theta: &[f64], grad: &mut [f64]) {
        (**self).grad_potential_full(theta, grad)
    }
    fn grad_potential_minibatch(&self, theta: &[f64], batch: &Minibatch, grad: &mut [f64]) {
        (**self).grad_potential_minibatch(theta, batch, grad)
    }
    fn full_log_likelihood(&self, theta: &[f64]) -> f64 {
        (**self).full_log_likelihood(theta)
    }
}

/// Row indices of one minibatch together with the `N / N'` likelihood scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Minibatch {
    indices: Vec<usize>,
    scale: f64,
}

impl Minibatch {
    pub fn new(indices: Vec<usize>, num_data: usize) -> Result<Self> {
        if indices.is_empty() || indices.len() > num_data {
            return Err(Error::InvalidArgument(format!(
                "minibatch size {} must lie in 1..={num_data}",
                indices.len()
            )));
        }
        let mut seen = vec![false; num_data];
        for &i in &indices {
            if i >= num_data {
                return Err(Error::InvalidArgument(format!(
                    "row index {i} >= {num_data}"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(format!(
                    "row index {i} repeated in minibatch"
                )));
            }
        }
        let scale = num_data as f64 / indices.len() as f64;
        Ok(Self { indices, scale })
    }

    /// Uniform draw without replacement.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, num_data: usize, size: usize) -> Result<Self> {
        if size == 0 || size > num_data {
            return Err(Error::InvalidArgument(format!(
                "minibatch size {size} must lie in 1..={num_data}"
            )));
        }
        let indices = rand::seq::index::sample(rng, num_data, size).into_vec();
        let scale = num_data as f64 / size as f64;
        Ok(Self { indices, scale })
    }

    pub fn full(num_data: usize) -> Self {
        Self {
            indices: (0..num_data).collect(),
            scale: 1.0,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}
