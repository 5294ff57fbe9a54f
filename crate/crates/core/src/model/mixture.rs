//! Two-dimensional Gaussian mixture with a shared covariance.

use std::f64::consts::PI;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{log_sum_exp, TargetModel};
use crate::error::{Error, Result};
use crate::numerics::exact_sum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixtureSpec {
    pub weights: Vec<f64>,
    pub centers: Vec<[f64; 2]>,
    /// Row-major 2x2 covariance shared by every component.
    pub covariance: [[f64; 2]; 2],
}

impl GaussianMixtureSpec {
    /// Equal-weight components on the square grid `values × values` with an
    /// isotropic covariance.
    pub fn grid(values: &[f64], variance: f64) -> Self {
        let centers: Vec<[f64; 2]> = values
            .iter()
            .flat_map(|&x| values.iter().map(move |&y| [x, y]))
            .collect();
        let n = centers.len();
        Self {
            weights: vec![1.0 / n as f64; n],
            centers,
            covariance: [[variance, 0.0], [0.0, variance]],
        }
    }

    /// 25 modes on `{-4,-2,0,2,4}^2`, weight 1/25 each, covariance `0.03 I`.
    pub fn grid25() -> Self {
        Self::grid(&[-4.0, -2.0, 0.0, 2.0, 4.0], 0.03)
    }

    pub fn validate(&self) -> Result<()> {
        if self.centers.is_empty() || self.weights.len() != self.centers.len() {
            return Err(Error::InvalidModel(format!(
                "mixture needs one weight per center ({} weights, {} centers)",
                self.weights.len(),
                self.centers.len()
            )));
        }
        if self.weights.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
            return Err(Error::InvalidModel(
                "mixture weights must be positive".into(),
            ));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        let [[a, b], [c, d]] = self.covariance;
        if b != c {
            return Err(Error::InvalidModel(
                "mixture covariance must be symmetric".into(),
            ));
        }
        if !(a > 0.0 && a * d - b * c > 0.0) {
            return Err(Error::InvalidModel(
                "mixture covariance must be positive definite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GaussianMixture {
    spec: GaussianMixtureSpec,
    log_weights: Vec<f64>,
    precision: [[f64; 2]; 2],
    chol: [[f64; 2]; 2],
    log_norm: f64,
}

pub fn mixture_target(spec: GaussianMixtureSpec) -> Result<GaussianMixture> {
    GaussianMixture::new(spec)
}

impl GaussianMixture {
    pub fn new(spec: GaussianMixtureSpec) -> Result<Self> {
        spec.validate()?;
        let [[a, b], [_, d]] = spec.covariance;
        let det = a * d - b * b;
        let precision = [[d / det, -b / det], [-b / det, a / det]];
        let l00 = a.sqrt();
        let l10 = b / l00;
        let l11 = (d - l10 * l10).sqrt();
        let log_weights = spec.weights.iter().map(|w| w.ln()).collect();
        Ok(Self {
            log_weights,
            precision,
            chol: [[l00, 0.0], [l10, l11]],
            log_norm: (2.0 * PI).ln() + 0.5 * det.ln(),
            spec,
        })
    }

    pub fn spec(&self) -> &GaussianMixtureSpec {
        &self.spec
    }

    pub fn centers(&self) -> Vec<Vec<f64>> {
        self.spec.centers.iter().map(|c| c.to_vec()).collect()
    }

    fn mahalanobis(&self, dx: f64, dy: f64) -> f64 {
        let p = &self.precision;
        dx * (p[0][0] * dx + p[0][1] * dy) + dy * (p[1][0] * dx + p[1][1] * dy)
    }

    fn component_log_terms<'a>(&'a self, x: &'a [f64]) -> impl Iterator<Item = f64> + Clone + 'a {
        self.spec
            .centers
            .iter()
            .zip(&self.log_weights)
            .map(move |(c, lw)| lw - 0.5 * self.mahalanobis(x[0] - c[0], x[1] - c[1]))
    }

    /// Density `F(x)`.
    pub fn density(&self, x: &[f64]) -> f64 {
        (-self.potential(x)).exp()
    }

    /// Exact draws: component by weight, then `mu + L z`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<Vec<f64>> {
        let pick = WeightedIndex::new(&self.spec.weights).expect("validated weights");
        let l = &self.chol;
        (0..n)
            .map(|_| {
                let c = self.spec.centers[pick.sample(rng)];
                let z0: f64 = rng.sample(StandardNormal);
                let z1: f64 = rng.sample(StandardNormal);
                vec![c[0] + l[0][0] * z0, c[1] + l[1][0] * z0 + l[1][1] * z1]
            })
            .collect()
    }
}

impl TargetModel for GaussianMixture {
    fn dim(&self) -> usize {
        2
    }

    fn potential(&self, theta: &[f64]) -> f64 {
        self.log_norm - log_sum_exp(self.component_log_terms(theta))
    }

    fn grad_potential_full(&self, theta: &[f64], grad: &mut [f64]) {
        // Responsibilities via a max-shifted softmax so distant points do not
        // underflow every component at once.
        let terms = self.component_log_terms(theta);
        let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
        let p = &self.precision;
        let mut gx = Vec::with_capacity(self.spec.centers.len());
        let mut gy = Vec::with_capacity(self.spec.centers.len());
        let mut total = 0.0;
        for (c, t) in self.spec.centers.iter().zip(terms) {
            let r = (t - max).exp();
            let dx = theta[0] - c[0];
            let dy = theta[1] - c[1];
            gx.push(r * (p[0][0] * dx + p[0][1] * dy));
            gy.push(r * (p[1][0] * dx + p[1][1] * dy));
            total += r;
        }
        let (gx, gy) = (exact_sum(gx), exact_sum(gy));
        grad[0] = gx / total;
        grad[1] = gy / total;
    }

    fn full_log_likelihood(&self, theta: &[f64]) -> f64 {
        -self.potential(theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_at_origin() {
        let m = mixture_target(GaussianMixtureSpec::grid25()).unwrap();
        // -log(lambda / (2 pi 0.03)); neighbouring modes contribute < e^-66.
        let expected = -(1.0f64 / 25.0 / (2.0 * PI * 0.03)).ln();
        assert!((m.potential(&[0.0, 0.0]) - 1.5504).abs() < 1e-3);
        assert!((m.potential(&[0.0, 0.0]) - expected).abs() < 1e-12);
    }

    #[test]
    fn gradient_vanishes_at_origin() {
        let m = mixture_target(GaussianMixtureSpec::grid25()).unwrap();
        let mut g = [1.0, 1.0];
        m.grad_potential_full(&[0.0, 0.0], &mut g);
        assert_eq!(g, [0.0, 0.0]);
    }

    #[test]
    fn far_field_is_finite() {
        let m = mixture_target(GaussianMixtureSpec::grid25()).unwrap();
        let u = m.potential(&[100.0, 100.0]);
        assert!(u.is_finite() && u > 0.0);
        let mut g = [0.0; 2];
        m.grad_potential_full(&[100.0, 100.0], &mut g);
        // Nearest center (4, 4) dominates.
        assert!((g[0] - 96.0 / 0.03).abs() < 1e-6 * 96.0 / 0.03);
        assert!(g[1].is_finite());
    }

    #[test]
    fn rejects_bad_covariance_and_weights() {
        let mut s = GaussianMixtureSpec::grid25();
        s.covariance = [[0.03, 0.1], [0.1, 0.03]];
        assert!(mixture_target(s).is_err());
        let mut s = GaussianMixtureSpec::grid25();
        s.covariance = [[0.03, 0.01], [0.0, 0.03]];
        assert!(mixture_target(s).is_err());
        let mut s = GaussianMixtureSpec::grid25();
        s.weights[0] += 0.01;
        assert!(mixture_target(s).is_err());
    }

    #[test]
    fn normalizes_to_one_on_grid() {
        let m = mixture_target(GaussianMixtureSpec::grid25()).unwrap();
        let n = 1200;
        let h = 12.0 / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = -6.0 + (i as f64 + 0.5) * h;
                let y = -6.0 + (j as f64 + 0.5) * h;
                total += m.density(&[x, y]);
            }
        }
        assert!((total * h * h - 1.0).abs() < 1e-3, "{}", total * h * h);
    }

    #[test]
    fn correlated_covariance_sampling_matches_moments() {
        use rand::SeedableRng;
        let spec = GaussianMixtureSpec {
            weights: vec![1.0],
            centers: vec![[1.0, -1.0]],
            covariance: [[2.0, 0.6], [0.6, 0.5]],
        };
        let m = mixture_target(spec).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let xs = m.sample(&mut rng, 200_000);
        let n = xs.len() as f64;
        let mx = xs.iter().map(|p| p[0]).sum::<f64>() / n;
        let my = xs.iter().map(|p| p[1]).sum::<f64>() / n;
        let cxy = xs.iter().map(|p| (p[0] - mx) * (p[1] - my)).sum::<f64>() / n;
        let cyy = xs.iter().map(|p| (p[1] - my).powi(2)).sum::<f64>() / n;
        assert!((mx - 1.0).abs() < 0.02 && (my + 1.0).abs() < 0.01);
        assert!((cxy - 0.6).abs() < 0.02 && (cyy - 0.5).abs() < 0.01);
    }
}
