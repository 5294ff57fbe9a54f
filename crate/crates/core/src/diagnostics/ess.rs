use crate::error::{Error, Result};

/// A scalar chain together with reference moments from an independent sampler.
#[derive(Debug, Clone, Copy)]
pub struct EssInput<'a> {
    pub chain: &'a [f64],
    pub ref_mean: f64,
    pub ref_var: f64,
}

/// Lag-`s` autocorrelation against the reference moments.
fn autocorrelation(x: &[f64], mean: f64, var: f64, s: usize) -> f64 {
    let b = x.len();
    let sum: f64 = x[s..]
        .iter()
        .zip(x)
        .map(|(a, c)| (a - mean) * (c - mean))
        .sum();
    sum / (var * (b - s) as f64)
}

/// `B / (1 + 2 sum_s (1 - s/B) rho_s)` with the lag sum cut at the first
/// negative autocorrelation (or at `max_lag`), clamped to `(0, B]`.
pub fn ess(input: EssInput<'_>, max_lag: usize) -> Result<f64> {
    let x = input.chain;
    let b = x.len();
    if b < 10 {
        return Err(Error::InvalidArgument(format!(
            "ESS needs at least 10 samples (got {b})"
        )));
    }
    if max_lag >= b {
        return Err(Error::InvalidArgument(format!(
            "max_lag {max_lag} must be below the chain length {b}"
        )));
    }
    if !(input.ref_var.is_finite() && input.ref_var > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "reference variance must be positive (got {})",
            input.ref_var
        )));
    }
    if !input.ref_mean.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "chain and reference mean must be finite".into(),
        ));
    }
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::DegenerateChain(format!(
            "all {b} values equal {}",
            x[0]
        )));
    }
    let mut tau = 1.0;
    for s in 1..=max_lag {
        let rho = autocorrelation(x, input.ref_mean, input.ref_var, s);
        if rho < 0.0 {
            break;
        }
        tau += 2.0 * (1.0 - s as f64 / b as f64) * rho;
    }
    let n = b as f64;
    Ok((n / tau).min(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn input(chain: &[f64]) -> EssInput<'_> {
        EssInput {
            chain,
            ref_mean: 0.0,
            ref_var: 1.0,
        }
    }

    #[test]
    fn iid_draws_are_nearly_independent() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..5000).map(|_| rng.sample(StandardNormal)).collect();
            let e = ess(input(&x), 4999).unwrap();
            assert!((4000.0..=5000.0).contains(&e), "seed {seed}: {e}");
        }
    }

    #[test]
    fn ar1_matches_closed_form() {
        let rho: f64 = 0.5;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sd = (1.0 - rho * rho).sqrt();
        let mut v = 0.0;
        let x: Vec<f64> = (0..50_000)
            .map(|_| {
                v = rho * v + sd * rng.sample::<f64, _>(StandardNormal);
                v
            })
            .collect();
        let ratio = ess(input(&x), 1000).unwrap() / 50_000.0;
        let expected = (1.0 - rho) / (1.0 + rho);
        assert!((ratio / expected - 1.0).abs() < 0.15, "{ratio}");
    }

    #[test]
    fn affine_rescaling_is_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..2000)
            .map(|i| (i as f64 * 0.01).sin() + rng.random::<f64>())
            .collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 7.0).collect();
        let a = ess(
            EssInput {
                chain: &x,
                ref_mean: 0.2,
                ref_var: 0.5,
            },
            500,
        )
        .unwrap();
        let b = ess(
            EssInput {
                chain: &y,
                ref_mean: 3.0 * 0.2 - 7.0,
                ref_var: 9.0 * 0.5,
            },
            500,
        )
        .unwrap();
        assert!((a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn clamped_to_chain_length() {
        // Alternating chain: rho_1 < 0 immediately.
        let x: Vec<f64> = (0..100)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        assert_eq!(ess(input(&x), 50).unwrap(), 100.0);
    }

    #[test]
    fn errors() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        assert!(ess(input(&x[..9]), 1).is_err());
        assert!(ess(input(&x), 20).is_err());
        assert!(ess(
            EssInput {
                chain: &x,
                ref_mean: 0.0,
                ref_var: 0.0
            },
            5
        )
        .is_err());
        let c = vec![2.0; 20];
        assert!(matches!(ess(input(&c), 5), Err(Error::DegenerateChain(_))));
    }
}
