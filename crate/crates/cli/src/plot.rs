//! Plot-ready CSV tables derived from a finished run directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use csgmcmc::diagnostics::DiagnosticsReport;
use csgmcmc::sampler::plain_stepsize;
use csgmcmc::SampleSet;

use crate::config::{self, ExperimentConfig, ExperimentKind, SamplerEntry, TargetConfig};
use crate::error::{CliError, Result};
use crate::output::{CONFIG_FILE, REPORT_FILE, SUMMARY_FILE};
use crate::table::Table;

pub const PLOT_DIR: &str = "plot";
/// Histogram window `[-HIST_EXTENT, HIST_EXTENT]^2`; samples outside land in the edge bins.
pub const HIST_EXTENT: f64 = 6.0;
pub const HIST_BINS: usize = 48;

fn require(dir: &Path, name: &str) -> Result<PathBuf> {
    let p = dir.join(name);
    if p.is_file() {
        Ok(p)
    } else {
        Err(CliError::IncompleteRun {
            path: dir.to_path_buf(),
            missing: name.to_string(),
        })
    }
}

/// Writes `plot/schedule_<sampler>.csv`, `plot/histogram_<sampler>.csv`
/// (2D targets) and `plot/summary_by_sampler.csv`; returns the files written.
pub fn emit_plot_data(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let config_path = require(run_dir, CONFIG_FILE)?;
    let report_path = require(run_dir, REPORT_FILE)?;
    let summary_path = require(run_dir, SUMMARY_FILE)?;
    let raw = config::read_table(&config_path)?;
    let cfg = config::from_table(&raw).map_err(CliError::Invalid)?;
    let report_text = fs::read_to_string(&report_path).map_err(|source| CliError::Io {
        path: report_path.clone(),
        source,
    })?;
    let report: DiagnosticsReport = report_text.parse()?;
    let summary = Table::read_file(&summary_path)?;

    let out = run_dir.join(PLOT_DIR);
    fs::create_dir_all(&out).map_err(|source| CliError::Io {
        path: out.clone(),
        source,
    })?;
    let mut written = Vec::new();
    for entry in &cfg.samplers {
        let path = out.join(format!("schedule_{}.csv", entry.name));
        schedule_table(entry, stepsize_factor(&cfg, &report))?.write_file(&path)?;
        written.push(path);
    }
    if matches!(cfg.target, TargetConfig::Mixture { .. }) {
        for entry in &cfg.samplers {
            let samples = pooled_chains(run_dir, &entry.name)?;
            if samples.is_empty() {
                continue;
            }
            let path = out.join(format!("histogram_{}.csv", entry.name));
            histogram(&samples).write_file(&path)?;
            written.push(path);
        }
    }
    let path = out.join("summary_by_sampler.csv");
    summary_by_sampler(&cfg, &summary)?.write_file(&path)?;
    written.push(path);
    Ok(written)
}

fn stepsize_factor(cfg: &ExperimentConfig, report: &DiagnosticsReport) -> f64 {
    match &cfg.target {
        TargetConfig::Logistic {
            stepsizes_scaled_by_n: true,
            ..
        } => report.get_f64("dataset.rows").map_or(1.0, |n| 1.0 / n),
        _ => 1.0,
    }
}

/// `k, alpha, stage, cycle` for every iteration the sampler runs.
pub fn schedule_table(entry: &SamplerEntry, factor: f64) -> Result<Table> {
    let schedule = &entry.config.schedule;
    let mut t = Table::new(["k", "alpha", "stage", "cycle"]);
    for k in 1..=schedule.total_iters() {
        let (alpha, stage, cycle) = if schedule.is_cyclical() {
            (
                schedule.stepsize(k)?,
                schedule.stage(k)?.as_str(),
                schedule.cycle_index(k)?,
            )
        } else {
            let phase = if k <= entry.burn_in {
                "burn_in"
            } else {
                "sampling"
            };
            (plain_stepsize(schedule, entry.burn_in, k)?, phase, 1)
        };
        t.push([
            k.to_string(),
            (alpha * factor).to_string(),
            stage.to_string(),
            cycle.to_string(),
        ]);
    }
    Ok(t)
}

/// Every chain CSV for `sampler` under the run directory, in path order.
fn pooled_chains(run_dir: &Path, sampler: &str) -> Result<SampleSet> {
    let mut files = Vec::new();
    let mut reps: Vec<PathBuf> = read_dir_sorted(run_dir)?
        .into_iter()
        .filter(|p| {
            p.is_dir()
                && p.file_name()
                    .is_some_and(|n| n.to_string_lossy().starts_with("rep_"))
        })
        .collect();
    reps.sort_by_key(|p| rep_index(p));
    for rep in reps {
        let dir = rep.join(sampler);
        if !dir.is_dir() {
            continue;
        }
        let mut chains: Vec<PathBuf> = read_dir_sorted(&dir)?
            .into_iter()
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect();
        chains.sort_by_key(|p| chain_index(p));
        files.extend(chains);
    }
    let sets = files
        .iter()
        .map(SampleSet::read_csv_file)
        .collect::<csgmcmc::Result<Vec<_>>>()?;
    Ok(SampleSet::pooled(&sets)?)
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut out: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    out.sort();
    Ok(out)
}

fn trailing_number(p: &Path, prefix: &str) -> u64 {
    p.file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.strip_prefix(prefix))
        .and_then(|s| s.parse().ok())
        .unwrap_or(u64::MAX)
}

fn rep_index(p: &Path) -> u64 {
    trailing_number(p, "rep_")
}

fn chain_index(p: &Path) -> u64 {
    trailing_number(p, "chain_")
}

/// Counts on a `HIST_BINS`^2 grid; out-of-window samples are clamped to the
/// nearest edge bin, so the counts sum to the number of samples.
pub fn histogram(samples: &SampleSet) -> Table {
    let width = 2.0 * HIST_EXTENT / HIST_BINS as f64;
    let bin = |v: f64| -> usize {
        let i = ((v + HIST_EXTENT) / width).floor();
        if i.is_nan() || i < 0.0 {
            0
        } else {
            (i as usize).min(HIST_BINS - 1)
        }
    };
    let mut counts = vec![0u64; HIST_BINS * HIST_BINS];
    for p in samples.points() {
        counts[bin(p[0]) * HIST_BINS + bin(p[1])] += 1;
    }
    let mut t = Table::new(["x_lo", "x_hi", "y_lo", "y_hi", "count"]);
    for i in 0..HIST_BINS {
        for j in 0..HIST_BINS {
            let x = -HIST_EXTENT + i as f64 * width;
            let y = -HIST_EXTENT + j as f64 * width;
            t.push([
                x.to_string(),
                (x + width).to_string(),
                y.to_string(),
                (y + width).to_string(),
                counts[i * HIST_BINS + j].to_string(),
            ]);
        }
    }
    t
}

/// Mean and standard error of each experiment's headline metric, grouped by
/// sampler (and by budget or checkpoint where the experiment has one).
fn summary_by_sampler(cfg: &ExperimentConfig, summary: &Table) -> Result<Table> {
    let (group_cols, metric): (&[&str], &str) = match cfg.experiment {
        ExperimentKind::Mixture25 => (&["sampler", "chain"], "coverage"),
        ExperimentKind::BlrEss => (&["sampler"], "median_ess"),
        ExperimentKind::BiasMse => (&["sampler", "total_iters"], "mse"),
        ExperimentKind::W2Probe => (&["sampler", "cycles"], "w2"),
    };
    let col = |name: &str| {
        summary.column(name).ok_or_else(|| CliError::IncompleteRun {
            path: PathBuf::from(SUMMARY_FILE),
            missing: format!("column {name}"),
        })
    };
    let group_idx = group_cols
        .iter()
        .map(|c| col(c))
        .collect::<Result<Vec<_>>>()?;
    let metric_idx = col(metric)?;
    // Keep first-seen group order.
    let mut order: Vec<Vec<String>> = Vec::new();
    let mut groups: BTreeMap<Vec<String>, Vec<f64>> = BTreeMap::new();
    for row in &summary.rows {
        let mut key: Vec<String> = group_idx.iter().map(|&i| row[i].clone()).collect();
        if cfg.experiment == ExperimentKind::Mixture25 && key[1] != "pooled" {
            key[1] = "single".into();
        }
        let v: f64 = row[metric_idx]
            .parse()
            .map_err(|_| CliError::IncompleteRun {
                path: PathBuf::from(SUMMARY_FILE),
                missing: format!("numeric {metric} value (found {:?})", row[metric_idx]),
            })?;
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(v);
    }
    let mut header: Vec<String> = group_cols.iter().map(|c| c.to_string()).collect();
    header.extend([
        "n".to_string(),
        format!("{metric}_mean"),
        format!("{metric}_se"),
    ]);
    let mut t = Table::new(header);
    for key in order {
        let vals = &groups[&key];
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let se = if vals.len() > 1 {
            (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
        } else {
            0.0
        };
        let mut row = key;
        row.extend([vals.len().to_string(), mean.to_string(), se.to_string()]);
        t.push(row);
    }
    Ok(t)
}
