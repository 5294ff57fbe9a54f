use crate::error::{Error, Result};
use crate::samples::SampleSet;

pub const DEFAULT_RADIUS: f64 = 0.25;
pub const DEFAULT_MIN_COUNT: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeCoverageSpec {
    pub centers: Vec<Vec<f64>>,
    pub radius: f64,
    pub min_count: usize,
}

impl ModeCoverageSpec {
    /// Radius 0.25 and a threshold of 100 samples.
    pub fn new(centers: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_threshold(centers, DEFAULT_RADIUS, DEFAULT_MIN_COUNT)
    }

    pub fn with_threshold(centers: Vec<Vec<f64>>, radius: f64, min_count: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "radius must be positive (got {radius})"
            )));
        }
        if min_count == 0 {
            return Err(Error::InvalidArgument("min_count must be >= 1".into()));
        }
        if let Some(first) = centers.first() {
            if centers.iter().any(|c| c.len() != first.len()) {
                return Err(Error::InvalidArgument(
                    "centers have different dimensions".into(),
                ));
            }
        }
        for i in 0..centers.len() {
            for j in i + 1..centers.len() {
                if centers[i] == centers[j] {
                    return Err(Error::InvalidArgument(format!(
                        "centers {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(Self {
            centers,
            radius,
            min_count,
        })
    }
}

/// Number of samples within `radius` of each center.
pub fn coverage_counts(samples: &SampleSet, spec: &ModeCoverageSpec) -> Result<Vec<usize>> {
    if let Some(c) = spec.centers.first() {
        if c.len() != samples.dim() && !samples.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: c.len(),
                actual: samples.dim(),
            });
        }
    }
    let r2 = spec.radius * spec.radius;
    let mut counts = vec![0; spec.centers.len()];
    for p in samples.points() {
        for (count, c) in counts.iter_mut().zip(&spec.centers) {
            let d2: f64 = p.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 <= r2 {
                *count += 1;
            }
        }
    }
    Ok(counts)
}

/// Centers with at least `min_count` samples inside the radius.
pub fn mode_coverage(samples: &SampleSet, spec: &ModeCoverageSpec) -> Result<usize> {
    Ok(coverage_counts(samples, spec)?
        .into_iter()
        .filter(|&c| c >= spec.min_count)
        .count())
}
