//! Weighted combination of per-cycle sample averages.
//!
//! Each cycle's normalising constant is estimated with the harmonic mean of
//! its sample likelihoods. That estimator has notoriously heavy tails;
//! [`CycleWeights::uniform`] is the usual practical substitute.

use crate::error::{Error, Result};
use crate::model::{log_sum_exp, TargetModel};
use crate::samples::SampleSet;

#[derive(Debug, Clone, PartialEq)]
pub struct CycleWeights {
    /// Cycle tags, ascending.
    pub cycles: Vec<u64>,
    /// Normalised weights, aligned with `cycles`.
    pub weights: Vec<f64>,
    /// Unnormalised `log w_m`, i.e. minus the log harmonic mean of the cycle's
    /// inverse likelihoods. Zero for uniform weights.
    pub log_evidence_terms: Vec<f64>,
}

impl CycleWeights {
    pub fn uniform(cycles: Vec<u64>) -> Result<Self> {
        if cycles.is_empty() {
            return Err(Error::DegenerateWeights("no cycles".into()));
        }
        let m = cycles.len();
        Ok(Self {
            weights: vec![1.0 / m as f64; m],
            log_evidence_terms: vec![0.0; m],
            cycles,
        })
    }

    /// Normalises raw log weights in the log domain.
    pub fn from_log_terms(cycles: Vec<u64>, log_terms: Vec<f64>) -> Result<Self> {
        if cycles.len() != log_terms.len() {
            return Err(Error::SizeMismatch {
                left: cycles.len(),
                right: log_terms.len(),
            });
        }
        if cycles.is_empty() {
            return Err(Error::DegenerateWeights("no cycles".into()));
        }
        if log_terms.iter().any(|t| t.is_nan() || *t == f64::INFINITY) {
            return Err(Error::DegenerateWeights(format!(
                "invalid log weight in {log_terms:?}"
            )));
        }
        let total = log_sum_exp(log_terms.iter().copied());
        if total == f64::NEG_INFINITY {
            return Err(Error::DegenerateWeights(
                "every cycle has zero likelihood".into(),
            ));
        }
        let raw: Vec<f64> = log_terms.iter().map(|t| (t - total).exp()).collect();
        let sum: f64 = raw.iter().sum();
        Ok(Self {
            cycles,
            weights: raw.iter().map(|w| w / sum).collect(),
            log_evidence_terms: log_terms,
        })
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn weight(&self, cycle: u64) -> Option<f64> {
        self.cycles
            .binary_search(&cycle)
            .ok()
            .map(|i| self.weights[i])
    }
}

/// Harmonic-mean weights: `log w_m = -(logsumexp_j(-l_j) - log K_m)` with
/// `l_j` the full-data log-likelihood of sample `j` in cycle `m`.
///
/// Stored `full_log_lik` values are used when present; missing ones are
/// computed from `target`.
pub fn harmonic_weights<T: TargetModel + ?Sized>(
    samples: &SampleSet,
    target: &T,
) -> Result<CycleWeights> {
    let groups = samples.by_cycle();
    if groups.is_empty() {
        return Err(Error::DegenerateWeights("no samples".into()));
    }
    let mut cycles = Vec::with_capacity(groups.len());
    let mut log_terms = Vec::with_capacity(groups.len());
    for (cycle, records) in groups {
        if records.is_empty() {
            return Err(Error::EmptyCycle(cycle as usize));
        }
        let neg_ll: Vec<f64> = records
            .iter()
            .map(|r| {
                -r.full_log_lik
                    .unwrap_or_else(|| target.full_log_likelihood(&r.theta))
            })
            .collect();
        if neg_ll.iter().any(|v| v.is_nan()) {
            return Err(Error::DegenerateWeights(format!(
                "NaN log-likelihood in cycle {cycle}"
            )));
        }
        let lse = log_sum_exp(neg_ll.iter().copied());
        cycles.push(cycle);
        log_terms.push(-(lse - (records.len() as f64).ln()));
    }
    CycleWeights::from_log_terms(cycles, log_terms)
}

fn check_cycles(samples: &SampleSet, weights: &CycleWeights) -> Result<()> {
    let present = samples.cycles();
    if present != weights.cycles {
        return Err(Error::CycleMismatch(format!(
            "samples have cycles {present:?}, weights have {:?}",
            weights.cycles
        )));
    }
    Ok(())
}

/// `sum_m w_m (1/K_m) sum_j f(theta_j^(m))`.
pub fn weighted_expectation<F>(samples: &SampleSet, weights: &CycleWeights, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let v = weighted_expectation_vec(samples, weights, |x| vec![f(x)])?;
    Ok(v[0])
}

/// Vector-valued form of [`weighted_expectation`]; `f` must return vectors of one length.
pub fn weighted_expectation_vec<F>(
    samples: &SampleSet,
    weights: &CycleWeights,
    f: F,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    check_cycles(samples, weights)?;
    let mut out: Option<Vec<f64>> = None;
    for ((_, records), w) in samples.by_cycle().into_iter().zip(&weights.weights) {
        let mut mean: Option<Vec<f64>> = None;
        for r in &records {
            let v = f(&r.theta);
            match &mut mean {
                None => mean = Some(v),
                Some(acc) => {
                    if acc.len() != v.len() {
                        return Err(Error::SizeMismatch {
                            left: acc.len(),
                            right: v.len(),
                        });
                    }
                    acc.iter_mut().zip(&v).for_each(|(a, b)| *a += b);
                }
            }
        }
        let mean = mean.expect("every listed cycle has a record");
        let k = records.len() as f64;
        let acc = out.get_or_insert_with(|| vec![0.0; mean.len()]);
        if acc.len() != mean.len() {
            return Err(Error::SizeMismatch {
                left: acc.len(),
                right: mean.len(),
            });
        }
        for (a, m) in acc.iter_mut().zip(&mean) {
            *a += w * (m / k);
        }
    }
    Ok(out.unwrap_or_default())
}

/// Assigns each parameter vector to one of `num_regions` disjoint regions.
pub trait RegionClassifier {
    fn num_regions(&self) -> usize;
    /// Region index in `0..num_regions()`.
    fn assign(&self, theta: &[f64]) -> usize;
}

/// Voronoi regions around the per-cycle sample centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestCentroid {
    pub centroids: Vec<Vec<f64>>,
}

impl NearestCentroid {
    /// One centroid per cycle, in ascending cycle order.
    pub fn from_samples(samples: &SampleSet) -> Result<Self> {
        let d = samples.dim();
        let centroids: Vec<Vec<f64>> = samples
            .by_cycle()
            .values()
            .map(|records| {
                let mut c = vec![0.0; d];
                for r in records {
                    c.iter_mut().zip(&r.theta).for_each(|(a, b)| *a += b);
                }
                c.iter_mut().for_each(|a| *a /= records.len() as f64);
                c
            })
            .collect();
        if centroids.is_empty() {
            return Err(Error::InvalidArgument(
                "no samples to build centroids from".into(),
            ));
        }
        Ok(Self { centroids })
    }
}

impl RegionClassifier for NearestCentroid {
    fn num_regions(&self) -> usize {
        self.centroids.len()
    }

    /// Ties go to the lowest index.
    fn assign(&self, theta: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.centroids.iter().enumerate() {
            let d2: f64 = c.iter().zip(theta).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        best.0
    }
}

/// Pools every sample, reassigns it with `classifier`, and combines the
/// per-region means with the weights of the matching cycles (region `i` takes
/// `weights.weights[i]`). Unoccupied regions are dropped and the remaining
/// weights renormalised.
pub fn region_expectation<C, F>(
    samples: &SampleSet,
    classifier: &C,
    weights: &CycleWeights,
    f: F,
) -> Result<f64>
where
    C: RegionClassifier + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    let m = classifier.num_regions();
    if m != weights.len() {
        return Err(Error::CycleMismatch(format!(
            "classifier has {m} regions, weights cover {} cycles",
            weights.len()
        )));
    }
    let mut sums = vec![0.0; m];
    let mut counts = vec![0usize; m];
    for p in samples.points() {
        let r = classifier.assign(p);
        if r >= m {
            return Err(Error::InvalidArgument(format!(
                "classifier returned region {r} of {m}"
            )));
        }
        sums[r] += f(p);
        counts[r] += 1;
    }
    let occupied_weight: f64 = (0..m)
        .filter(|&i| counts[i] > 0)
        .map(|i| weights.weights[i])
        .sum();
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::InvalidArgument("no occupied regions".into()));
    }
    if occupied_weight <= 0.0 {
        return Err(Error::DegenerateWeights(
            "occupied regions carry zero weight".into(),
        ));
    }
    Ok((0..m)
        .filter(|&i| counts[i] > 0)
        .map(|i| weights.weights[i] / occupied_weight * (sums[i] / counts[i] as f64))
        .sum())
}
