use csgmcmc::model::{
    blr_target, mixture_target, synth_logistic, GaussianMixtureSpec, GaussianTarget, Minibatch,
};
use csgmcmc::TargetModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn central_difference(t: &dyn TargetModel, theta: &[f64], h: f64) -> Vec<f64> {
    (0..theta.len())
        .map(|j| {
            let mut up = theta.to_vec();
            let mut down = theta.to_vec();
            up[j] += h;
            down[j] -= h;
            (t.potential(&up) - t.potential(&down)) / (2.0 * h)
        })
        .collect()
}

/// `|g - fd| / max(|g|, 1)`; the floor avoids dividing by a vanishing gradient.
fn relative_error(t: &dyn TargetModel, theta: &[f64]) -> f64 {
    let mut g = vec![0.0; theta.len()];
    t.grad_potential_full(theta, &mut g);
    let fd = central_difference(t, theta, 1e-5);
    let diff: f64 = g
        .iter()
        .zip(&fd)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt();
    diff / norm.max(1.0)
}

fn check(t: &dyn TargetModel, scale: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..20 {
        let theta: Vec<f64> = (0..t.dim())
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let err = relative_error(t, &theta);
        assert!(err <= 1e-5, "theta={theta:?} err={err}");
    }
}

#[test]
fn gaussian_gradient_matches_finite_differences() {
    check(
        &GaussianTarget::new(vec![0.5, -1.0, 2.0], 0.7).unwrap(),
        2.0,
        1,
    );
    check(&GaussianTarget::standard(1), 1.0, 2);
}

#[test]
fn mixture_gradient_matches_finite_differences() {
    let t = mixture_target(GaussianMixtureSpec::grid25()).unwrap();
    check(&t, 3.0, 3);
    let mut g = vec![0.0; 2];
    t.grad_potential_full(&[0.1, -0.2], &mut g);
    let fd = central_difference(&t, &[0.1, -0.2], 1e-5);
    for (a, b) in g.iter().zip(&fd) {
        assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0));
    }
}

#[test]
fn logistic_gradient_matches_finite_differences() {
    let data = synth_logistic(300, 6, 11).unwrap();
    let t = blr_target(&data, 100.0).unwrap();
    check(&t, 1.0, 4);
}

#[test]
fn logistic_minibatches_average_to_full_gradient() {
    let data = synth_logistic(120, 4, 5).unwrap();
    let t = blr_target(&data, 10.0).unwrap();
    let theta = vec![0.3, -0.2, 0.8, 0.1, -0.5];
    let mut full = vec![0.0; 5];
    t.grad_potential_full(&theta, &mut full);
    let mut avg = [0.0; 5];
    let mut g = vec![0.0; 5];
    for b in 0..4 {
        let batch = Minibatch::new((b * 30..(b + 1) * 30).collect(), 120).unwrap();
        t.grad_potential_minibatch(&theta, &batch, &mut g);
        avg.iter_mut().zip(&g).for_each(|(a, x)| *a += x / 4.0);
    }
    for (a, b) in avg.iter().zip(&full) {
        assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
    }
}
