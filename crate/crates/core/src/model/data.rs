use std::collections::BTreeSet;
use std::path::Path;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Row-major feature matrix with optional binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Vec<f64>,
    rows: usize,
    cols: usize,
    labels: Option<Vec<u8>>,
    warnings: Vec<String>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Vec<f64>,
        rows: usize,
        cols: usize,
        labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        let name = name.into();
        if rows == 0 || cols == 0 || features.len() != rows * cols {
            return Err(Error::InvalidModel(format!(
                "dataset {name}: {} values do not form a non-empty {rows}x{cols} matrix",
                features.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "dataset {name} has non-finite features"
            )));
        }
        if let Some(l) = &labels {
            if l.len() != rows {
                return Err(Error::InvalidModel(format!(
                    "dataset {name}: {} labels for {rows} rows",
                    l.len()
                )));
            }
        }
        Ok(Self {
            name,
            features,
            rows,
            cols,
            labels,
            warnings: Vec::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |i| self.features[i * self.cols + j])
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    /// Notes recorded during ingestion (e.g. constant columns left unscaled).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Z-scores every column in place (population standard deviation).
    /// Constant columns are left untouched and reported in [`Dataset::warnings`].
    pub fn standardize(&mut self) {
        let n = self.rows as f64;
        for j in 0..self.cols {
            let mean = self.column(j).sum::<f64>() / n;
            let var = self.column(j).map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd <= f64::EPSILON * mean.abs().max(1.0) {
                let msg = format!("column {} is constant; left unscaled", j + 1);
                warn!("{}: {msg}", self.name);
                self.warnings.push(msg);
                continue;
            }
            for i in 0..self.rows {
                let v = &mut self.features[i * self.cols + j];
                *v = (*v - mean) / sd;
            }
        }
    }
}

/// Reads a numeric CSV whose last column is a binary label.
///
/// Labels may use any two distinct raw values; the lexicographically smaller
/// one maps to 0.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool, standardize: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_path(path)?;

    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 1 + usize::from(has_header);
        let w = record.len();
        match width {
            None if w < 2 => {
                return Err(Error::Data {
                    path: path.into(),
                    message: format!("need at least 2 columns, found {w}"),
                })
            }
            None => width = Some(w),
            Some(expected) if expected != w => {
                return Err(Error::Parse {
                    path: path.into(),
                    row: line,
                    column: w.min(expected) + 1,
                    message: format!("expected {expected} columns, found {w}"),
                })
            }
            _ => {}
        }
        for (j, field) in record.iter().take(w - 1).enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                path: path.into(),
                row: line,
                column: j + 1,
                message: format!("cannot parse {field:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.into(),
                    row: line,
                    column: j + 1,
                    message: "missing or non-finite value".into(),
                });
            }
            features.push(v);
        }
        let label = &record[w - 1];
        if label.is_empty() {
            return Err(Error::Parse {
                path: path.into(),
                row: line,
                column: w,
                message: "missing label".into(),
            });
        }
        raw_labels.push(label.to_owned());
    }

    let Some(width) = width else {
        return Err(Error::Data {
            path: path.into(),
            message: "no data rows".into(),
        });
    };
    let distinct: BTreeSet<&str> = raw_labels.iter().map(String::as_str).collect();
    if distinct.len() > 2 {
        return Err(Error::Data {
            path: path.into(),
            message: format!("labels are not binary: {distinct:?}"),
        });
    }
    let zero = *distinct.iter().next().expect("at least one row");
    let labels = raw_labels.iter().map(|l| u8::from(l != zero)).collect();

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let rows = raw_labels.len();
    let mut data = Dataset::new(name, features, rows, width - 1, Some(labels))?;
    if standardize {
        data.standardize();
    }
    Ok(data)
}

/// Draws `theta* ~ N(0, I)`, `x_i ~ N(0, I)`, `y_i ~ Bernoulli(sigmoid(x_i . theta*))`.
pub fn synth_logistic(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    if n < 10 || d < 1 {
        return Err(Error::InvalidArgument(format!(
            "synthetic logistic data needs n >= 10 and d >= 1 (got n={n}, d={d})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let start = features.len();
        features.extend((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let z: f64 = features[start..]
            .iter()
            .zip(&truth)
            .map(|(x, t)| x * t)
            .sum();
        let p = 1.0 / (1.0 + (-z).exp());
        labels.push(u8::from(rng.random::<f64>() < p));
    }
    Dataset::new(
        format!("synthetic-n{n}-d{d}-s{seed}"),
        features,
        n,
        d,
        Some(labels),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_small_file() {
        let f = write("1,2,0\n3,4,1\n5,6,0\n");
        let d = load_csv(f.path(), false, false).unwrap();
        assert_eq!((d.rows(), d.cols()), (3, 2));
        assert_eq!(d.labels().unwrap(), &[0, 1, 0]);
        assert_eq!(d.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn standardizes_columns() {
        let f = write("1,2,0\n3,4,1\n5,6,0\n");
        let d = load_csv(f.path(), false, true).unwrap();
        for j in 0..2 {
            let mean = d.column(j).sum::<f64>() / 3.0;
            let sd = (d.column(j).map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0).sqrt();
            assert!(mean.abs() < 1e-12);
            assert!((sd - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_column_is_left_with_warning() {
        let f = write("7,1,a\n7,2,b\n7,3,a\n");
        let d = load_csv(f.path(), false, true).unwrap();
        assert_eq!(d.column(0).collect::<Vec<_>>(), vec![7.0; 3]);
        assert_eq!(d.warnings().len(), 1);
        assert_eq!(d.labels().unwrap(), &[0, 1, 0]);
    }

    #[test]
    fn header_and_signed_labels() {
        let f = write("x,y,label\n0.5,1,1\n0.25,2,-1\n");
        let d = load_csv(f.path(), true, false).unwrap();
        // "-1" < "1" lexicographically.
        assert_eq!(d.labels().unwrap(), &[1, 0]);
    }

    #[test]
    fn reports_parse_location() {
        let f = write("1,2,0\n3,oops,1\n");
        match load_csv(f.path(), false, false) {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column), (2, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_ragged_narrow_and_multiclass() {
        assert!(load_csv(write("1,2,0\n3,1\n").path(), false, false).is_err());
        assert!(load_csv(write("1\n2\n").path(), false, false).is_err());
        assert!(load_csv(write("1,0\n2,1\n3,2\n").path(), false, false).is_err());
    }

    #[test]
    fn synthetic_is_deterministic_and_binary() {
        let a = synth_logistic(100, 2, 7).unwrap();
        let b = synth_logistic(100, 2, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.labels().unwrap().iter().all(|&y| y <= 1));
        assert!(synth_logistic(5, 2, 7).is_err());
    }

    #[test]
    fn synthetic_labels_are_not_degenerate() {
        for seed in 0..20 {
            let d = synth_logistic(10_000, 2, seed).unwrap();
            let mean = d
                .labels()
                .unwrap()
                .iter()
                .map(|&y| f64::from(y))
                .sum::<f64>()
                / 10_000.0;
            assert!(mean > 0.05 && mean < 0.95, "seed {seed}: {mean}");
        }
    }
}
