//! Bayesian logistic regression with an isotropic Gaussian prior.

use super::{Dataset, Minibatch, TargetModel};
use crate::error::{Error, Result};

/// Weakly informative prior variance used when a config does not set one.
pub const DEFAULT_PRIOR_VARIANCE: f64 = 100.0;

#[derive(Debug, Clone)]
pub struct LogisticRegression {
    /// Row-major design matrix with a trailing column of ones.
    design: Vec<f64>,
    labels: Vec<f64>,
    rows: usize,
    dim: usize,
    prior_variance: f64,
}

pub fn blr_target(data: &Dataset, prior_variance: f64) -> Result<LogisticRegression> {
    LogisticRegression::new(data, prior_variance)
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticRegression {
    pub fn new(data: &Dataset, prior_variance: f64) -> Result<Self> {
        if !(prior_variance.is_finite() && prior_variance > 0.0) {
            return Err(Error::InvalidModel(format!(
                "prior variance must be positive (got {prior_variance})"
            )));
        }
        let labels = data
            .labels()
            .ok_or_else(|| Error::InvalidModel(format!("dataset {} has no labels", data.name())))?;
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::InvalidModel(format!("label {bad} is not binary")));
        }
        let rows = data.rows();
        let cols = data.cols();
        let dim = cols + 1;
        let mut design = Vec::with_capacity(rows * dim);
        for i in 0..rows {
            design.extend_from_slice(data.row(i));
            design.push(1.0);
        }
        Ok(Self {
            design,
            labels: labels.iter().map(|&y| f64::from(y)).collect(),
            rows,
            dim,
            prior_variance,
        })
    }

    pub fn prior_variance(&self) -> f64 {
        self.prior_variance
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.design[i * self.dim..(i + 1) * self.dim]
    }

    fn logit(&self, i: usize, theta: &[f64]) -> f64 {
        self.row(i).iter().zip(theta).map(|(x, t)| x * t).sum()
    }

    fn accumulate_grad(
        &self,
        theta: &[f64],
        rows: impl Iterator<Item = usize>,
        scale: f64,
        grad: &mut [f64],
    ) {
        for (g, t) in grad.iter_mut().zip(theta) {
            *g = t / self.prior_variance;
        }
        for i in rows {
            let resid = scale * (self.labels[i] - sigmoid(self.logit(i, theta)));
            for (g, x) in grad.iter_mut().zip(self.row(i)) {
                *g -= resid * x;
            }
        }
    }
}

impl TargetModel for LogisticRegression {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_data(&self) -> Option<usize> {
        Some(self.rows)
    }

    fn potential(&self, theta: &[f64]) -> f64 {
        let prior: f64 = theta.iter().map(|t| t * t).sum::<f64>() / (2.0 * self.prior_variance);
        prior - self.full_log_likelihood(theta)
    }

    fn grad_potential_full(&self, theta: &[f64], grad: &mut [f64]) {
        self.accumulate_grad(theta, 0..self.rows, 1.0, grad);
    }

    fn grad_potential_minibatch(&self, theta: &[f64], batch: &Minibatch, grad: &mut [f64]) {
        self.accumulate_grad(theta, batch.indices().iter().copied(), batch.scale(), grad);
    }

    fn full_log_likelihood(&self, theta: &[f64]) -> f64 {
        // y log s(z) + (1 - y) log(1 - s(z)) = y z - log(1 + e^z)
        (0..self.rows)
            .map(|i| {
                let z = self.logit(i, theta);
                self.labels[i] * z - softplus(z)
            })
            .sum()
    }
}
