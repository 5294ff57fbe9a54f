//! Collected samples, tagged by iteration, cycle and stage.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::TargetModel;
use crate::schedule::Stage;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub theta: Vec<f64>,
    pub iter: u64,
    pub cycle: u64,
    pub stage: Stage,
    /// `log p(D | theta)`, filled on demand by [`SampleSet::fill_log_likelihood`].
    pub full_log_lik: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSet {
    dim: usize,
    records: Vec<SampleRecord>,
}

impl SampleSet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            records: Vec::new(),
        }
    }

    pub fn from_records(dim: usize, records: Vec<SampleRecord>) -> Result<Self> {
        let mut set = Self::new(dim);
        for r in records {
            set.push(r)?;
        }
        Ok(set)
    }

    /// Pools several sets of equal dimension, keeping record order.
    pub fn pooled<'a>(sets: impl IntoIterator<Item = &'a SampleSet>) -> Result<Self> {
        let mut out: Option<SampleSet> = None;
        for s in sets {
            match &mut out {
                None => out = Some(s.clone()),
                Some(acc) => {
                    for r in &s.records {
                        acc.push(r.clone())?;
                    }
                }
            }
        }
        Ok(out.unwrap_or_default())
    }

    pub fn push(&mut self, record: SampleRecord) -> Result<()> {
        if record.theta.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: record.theta.len(),
            });
        }
        self.records.push(record);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + Clone + '_ {
        self.records.iter().map(|r| r.theta.as_slice())
    }

    /// Values of one coordinate, in record order.
    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.theta[j]).collect()
    }

    /// Distinct cycle tags in ascending order.
    pub fn cycles(&self) -> Vec<u64> {
        let mut c: Vec<u64> = self.records.iter().map(|r| r.cycle).collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn by_cycle(&self) -> BTreeMap<u64, Vec<&SampleRecord>> {
        let mut map: BTreeMap<u64, Vec<&SampleRecord>> = BTreeMap::new();
        for r in &self.records {
            map.entry(r.cycle).or_default().push(r);
        }
        map
    }

    /// Records whose cycle tag is at most `last_cycle`.
    pub fn through_cycle(&self, last_cycle: u64) -> SampleSet {
        SampleSet {
            dim: self.dim,
            records: self
                .records
                .iter()
                .filter(|r| r.cycle <= last_cycle)
                .cloned()
                .collect(),
        }
    }

    pub fn fill_log_likelihood<T: TargetModel + ?Sized>(&mut self, target: &T) {
        for r in &mut self.records {
            if r.full_log_lik.is_none() {
                r.full_log_lik = Some(target.full_log_likelihood(&r.theta));
            }
        }
    }

    /// CSV with columns `iter,cycle,stage,theta_0..theta_{d-1}`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["iter".to_string(), "cycle".into(), "stage".into()];
        header.extend((0..self.dim).map(|j| format!("theta_{j}")));
        w.write_record(&header)?;
        let mut row = Vec::with_capacity(3 + self.dim);
        for r in &self.records {
            row.clear();
            row.push(r.iter.to_string());
            row.push(r.cycle.to_string());
            row.push(r.stage.as_str().to_string());
            row.extend(r.theta.iter().map(|v| format!("{v:?}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let dim = header.len().saturating_sub(3);
        let expected: Vec<String> = ["iter", "cycle", "stage"]
            .iter()
            .map(|s| s.to_string())
            .chain((0..dim).map(|j| format!("theta_{j}")))
            .collect();
        if header.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::InvalidArgument(format!(
                "unexpected sample CSV header {header:?}"
            )));
        }
        let mut set = SampleSet::new(dim);
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |column: usize, message: String| {
                Error::InvalidArgument(format!(
                    "sample CSV row {}, column {}: {message}",
                    i + 2,
                    column + 1
                ))
            };
            let int = |j: usize| rec[j].parse::<u64>().map_err(|e| bad(j, e.to_string()));
            let theta = (0..dim)
                .map(|j| {
                    rec[3 + j]
                        .parse::<f64>()
                        .map_err(|e| bad(3 + j, e.to_string()))
                })
                .collect::<Result<Vec<_>>>()?;
            set.push(SampleRecord {
                iter: int(0)?,
                cycle: int(1)?,
                stage: rec[2].parse()?,
                theta,
                full_log_lik: None,
            })?;
        }
        Ok(set)
    }

    pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}
