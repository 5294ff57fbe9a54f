use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::exact_sum;
use crate::sampler::derive_seed;

/// Largest point set handled by the exact solver; larger sets are subsampled.
pub const W2_CAP: usize = 512;

/// Minimum-cost perfect matching on a square row-major `n x n` cost matrix
/// (shortest augmenting paths with dual potentials, O(n^3)).
///
/// Returns `assignment` with row `i` matched to column `assignment[i]`.
pub fn optimal_assignment(cost: &[f64], n: usize) -> Result<Vec<usize>> {
    if cost.len() != n * n {
        return Err(Error::SizeMismatch {
            left: cost.len(),
            right: n * n,
        });
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument(
            "assignment costs must be finite".into(),
        ));
    }
    // 1-based internally; column 0 is the virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_to = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        min_to.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    way[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[row_of[j] - 1] = j - 1;
    }
    Ok(assignment)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_sets(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument(
            "W2 needs non-empty point sets".into(),
        ));
    }
    let d = a[0].len();
    if let Some(p) = a.iter().chain(b).find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: p.len(),
        });
    }
    Ok(())
}

/// Exact 2-Wasserstein distance between two equal-size empirical measures.
pub fn wasserstein2(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    check_sets(a, b)?;
    let n = a.len();
    if n > W2_CAP {
        return Err(Error::InvalidArgument(format!(
            "exact W2 is limited to {W2_CAP} points (got {n}); use wasserstein2_capped"
        )));
    }
    let cost: Vec<f64> = a
        .iter()
        .flat_map(|p| b.iter().map(move |q| sq_dist(p, q)))
        .collect();
    let assignment = optimal_assignment(&cost, n)?;
    // Exactly rounded, so the result does not depend on which side is `a`.
    let total = exact_sum(assignment.iter().enumerate().map(|(i, &j)| cost[i * n + j]));
    Ok((total / n as f64).sqrt())
}

/// W2 after uniformly subsampling each set (without replacement) to at most
/// `cap` points with seeds derived from `seed`. Unequal sizes are cut to the
/// smaller one.
pub fn wasserstein2_capped(a: &[Vec<f64>], b: &[Vec<f64>], cap: usize, seed: u64) -> Result<f64> {
    let cap = cap.min(W2_CAP);
    let n = a.len().min(b.len()).min(cap);
    let pick = |set: &[Vec<f64>], stream: u64| -> Vec<Vec<f64>> {
        if set.len() == n {
            return set.to_vec();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream));
        let mut idx = sample(&mut rng, set.len(), n).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| set[i].clone()).collect()
    };
    wasserstein2(&pick(a, 0), &pick(b, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn cloud(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect()
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    fn brute_force(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        let n = a.len();
        permutations(n)
            .iter()
            .map(|p| (0..n).map(|i| sq_dist(&a[i], &b[p[i]])).sum::<f64>() / n as f64)
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    #[test]
    fn trivial_cases() {
        assert_eq!(
            wasserstein2(&[vec![0.0, 0.0]], &[vec![3.0, 4.0]]).unwrap(),
            5.0
        );
        let a = vec![vec![1.0, 2.0], vec![-1.0, 0.5], vec![3.0, 3.0]];
        let b = vec![a[2].clone(), a[0].clone(), a[1].clone()];
        assert_eq!(wasserstein2(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn matches_brute_force_on_six_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        assert_eq!(permutations(6).len(), 720);
        for _ in 0..50 {
            let a = cloud(&mut rng, 6, 2);
            let b = cloud(&mut rng, 6, 2);
            let exact = wasserstein2(&a, &b).unwrap();
            assert!((exact - brute_force(&a, &b)).abs() <= 1e-12);
        }
    }

    #[test]
    fn metric_axioms_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let a = cloud(&mut rng, 8, 2);
            let b = cloud(&mut rng, 8, 2);
            let c = cloud(&mut rng, 8, 2);
            let ab = wasserstein2(&a, &b).unwrap();
            assert_eq!(ab, wasserstein2(&b, &a).unwrap());
            assert!(ab > 0.0);
            let ac = wasserstein2(&a, &c).unwrap();
            let bc = wasserstein2(&b, &c).unwrap();
            assert!(ac <= ab + bc + 1e-9);
        }
    }

    #[test]
    fn assignment_recovers_permutation() {
        let n = 40;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = cloud(&mut rng, n, 3);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.reverse();
        let b: Vec<Vec<f64>> = perm.iter().map(|&i| a[i].clone()).collect();
        let cost: Vec<f64> = a
            .iter()
            .flat_map(|p| b.iter().map(move |q| sq_dist(p, q)))
            .collect();
        let got = optimal_assignment(&cost, n).unwrap();
        for (i, &j) in got.iter().enumerate() {
            assert_eq!(perm[j], i);
        }
    }

    #[test]
    fn capped_is_deterministic_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = cloud(&mut rng, 700, 2);
        let b = cloud(&mut rng, 900, 2);
        let x = wasserstein2_capped(&a, &b, 512, 3).unwrap();
        assert_eq!(x, wasserstein2_capped(&a, &b, 512, 3).unwrap());
        assert!(wasserstein2(&a[..513], &b[..513]).is_err());
    }

    #[test]
    fn size_mismatch() {
        assert!(matches!(
            wasserstein2(&[vec![0.0]], &[vec![0.0], vec![1.0]]),
            Err(Error::SizeMismatch { .. })
        ));
        assert!(wasserstein2(&[], &[]).is_err());
    }
}
