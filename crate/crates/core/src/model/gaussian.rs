use super::TargetModel;
use crate::error::{Error, Result};

/// Isotropic Gaussian `N(mean, variance * I)`; every posterior moment is known
/// in closed form, which makes it the reference target for bias/MSE probes.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianTarget {
    mean: Vec<f64>,
    variance: f64,
}

impl GaussianTarget {
    pub fn new(mean: Vec<f64>, variance: f64) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::InvalidModel("gaussian target needs dim >= 1".into()));
        }
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::InvalidModel(format!(
                "gaussian variance must be positive (got {variance})"
            )));
        }
        Ok(Self { mean, variance })
    }

    pub fn standard(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            variance: 1.0,
        }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

impl TargetModel for GaussianTarget {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn potential(&self, theta: &[f64]) -> f64 {
        let sq: f64 = theta
            .iter()
            .zip(&self.mean)
            .map(|(t, m)| (t - m) * (t - m))
            .sum();
        sq / (2.0 * self.variance)
    }

    fn grad_potential_full(&self, theta: &[f64], grad: &mut [f64]) {
        for ((g, t), m) in grad.iter_mut().zip(theta).zip(&self.mean) {
            *g = (t - m) / self.variance;
        }
    }

    fn full_log_likelihood(&self, theta: &[f64]) -> f64 {
        -self.potential(theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let t = GaussianTarget::new(vec![1.0, -2.0, 0.5], 0.25).unwrap();
        let mut g = vec![9.0; 3];
        t.grad_potential_full(&[1.0, -2.0, 0.5], &mut g);
        assert_eq!(g, vec![0.0; 3]);
        assert_eq!(t.potential(&[1.0, -2.0, 0.5]), 0.0);
        t.grad_potential_full(&[2.0, -2.0, 0.5], &mut g);
        assert_eq!(g, vec![4.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_variance() {
        assert!(GaussianTarget::new(vec![0.0], 0.0).is_err());
        assert!(GaussianTarget::new(vec![0.0], f64::NAN).is_err());
        assert!(GaussianTarget::new(vec![], 1.0).is_err());
    }
}
