//! The four experiments the harness knows how to run.
//!
//! Every random stream is derived from the configured master seed:
//! repetition `r` uses `derive_seed(seed, r)`, sampler `s` within it
//! `derive_seed(rep_seed, s)`, and chain `c` of that sampler
//! `derive_seed(sampler_seed, c)` (inside `run_parallel`).

use std::path::PathBuf;

use csgmcmc::diagnostics::{
    bias_mse_probe, ess, mode_coverage, wasserstein2_capped, ConvergenceProbe, DiagnosticsReport,
    EssInput, ModeCoverageSpec,
};
use csgmcmc::model::{
    blr_target, load_csv, synth_logistic, Dataset, GaussianMixture, GaussianMixtureSpec,
    GaussianTarget,
};
use csgmcmc::sampler::{derive_seed, hmc_reference, run_parallel, ChainRun, Execution};
use csgmcmc::{SampleSet, ScheduleSpec, TargetModel};
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{
    ChainOutput, DatasetConfig, ExperimentConfig, ExperimentKind, ProbeFunction, SamplerEntry,
    TargetConfig,
};
use crate::error::{CliError, Result};
use crate::table::Table;

/// A sample CSV to be written under the run directory.
#[derive(Debug, Clone)]
pub struct ChainFile {
    pub relative_path: PathBuf,
    pub samples: SampleSet,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: DiagnosticsReport,
    pub summary: Table,
    pub chains: Vec<ChainFile>,
}

pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    info!(
        "running {} with {} repetition(s) and {} sampler(s)",
        config.experiment,
        config.repetitions,
        config.samplers.len()
    );
    let mut outcome = match config.experiment {
        ExperimentKind::Mixture25 => mixture25(config)?,
        ExperimentKind::BlrEss => blr_ess(config)?,
        ExperimentKind::BiasMse => bias_mse(config)?,
        ExperimentKind::W2Probe => w2_probe(config)?,
    };
    let mut head = DiagnosticsReport::new();
    head.insert("experiment", config.experiment);
    head.insert("repetitions", config.repetitions);
    head.insert("chains", config.chains);
    head.insert("seed", config.seed);
    for (k, v) in outcome.report.entries() {
        head.insert(k.clone(), v);
    }
    outcome.report = head;
    Ok(outcome)
}

fn repetition_seed(config: &ExperimentConfig, r: u64) -> u64 {
    derive_seed(config.seed, r)
}

fn inits(config: &ExperimentConfig, dim: usize) -> Result<Vec<Vec<f64>>> {
    let pool = if config.init.is_empty() {
        vec![vec![0.0; dim]]
    } else {
        config.init.clone()
    };
    if let Some(p) = pool.iter().find(|p| p.len() != dim) {
        return Err(CliError::Invalid(vec![format!(
            "init: expected {dim} coordinates, found {}",
            p.len()
        )]));
    }
    Ok((0..config.chains)
        .map(|c| pool[c % pool.len()].clone())
        .collect())
}

/// Runs every chain of one sampler for one repetition.
fn run_chains<T: TargetModel + ?Sized>(
    target: &T,
    entry: &SamplerEntry,
    sampler_seed: u64,
    starts: &[Vec<f64>],
    repetition: u64,
) -> Result<Vec<ChainRun>> {
    let mut cfg = entry.config.clone();
    cfg.seed = sampler_seed;
    let budget = cfg.schedule.total_iters();
    run_parallel(
        target,
        &cfg,
        starts,
        entry.plan(),
        budget,
        Execution::Concurrent,
    )
    .into_iter()
    .enumerate()
    .map(|(chain, r)| {
        r.map_err(|f| CliError::Chain {
            sampler: entry.name.clone(),
            repetition,
            chain,
            message: f.to_string(),
        })
    })
    .collect()
}

fn keep_chain_files(config: &ExperimentConfig, repetition: u64) -> bool {
    match config.write_chains {
        ChainOutput::All => true,
        ChainOutput::First => repetition == 0,
        ChainOutput::None => false,
    }
}

fn chain_files(repetition: u64, sampler: &str, runs: &[ChainRun]) -> Vec<ChainFile> {
    runs.iter()
        .enumerate()
        .map(|(c, run)| ChainFile {
            relative_path: PathBuf::from(format!("rep_{repetition}"))
                .join(sampler)
                .join(format!("chain_{c}.csv")),
            samples: run.samples.clone(),
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean; zero for a single value.
fn standard_error(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mixture_spec(config: &ExperimentConfig) -> Result<GaussianMixture> {
    let TargetConfig::Mixture { grid, variance } = &config.target else {
        unreachable!("validated experiment/target pairing")
    };
    Ok(GaussianMixture::new(GaussianMixtureSpec::grid(
        grid, *variance,
    ))?)
}

fn mixture25(config: &ExperimentConfig) -> Result<Outcome> {
    let target = mixture_spec(config)?;
    let spec = ModeCoverageSpec::with_threshold(
        target.centers(),
        config.coverage.radius,
        config.coverage.min_count,
    )?;
    let starts = inits(config, 2)?;

    struct Rep {
        per_sampler: Vec<(Vec<usize>, usize)>,
        files: Vec<ChainFile>,
    }
    let reps: Vec<Rep> = (0..config.repetitions)
        .into_par_iter()
        .map(|r| -> Result<Rep> {
            let rep_seed = repetition_seed(config, r);
            let mut per_sampler = Vec::new();
            let mut files = Vec::new();
            for (s, entry) in config.samplers.iter().enumerate() {
                let runs = run_chains(&target, entry, derive_seed(rep_seed, s as u64), &starts, r)?;
                let per_chain = runs
                    .iter()
                    .map(|run| mode_coverage(&run.samples, &spec))
                    .collect::<csgmcmc::Result<Vec<usize>>>()?;
                let pooled = SampleSet::pooled(runs.iter().map(|run| &run.samples))?;
                per_sampler.push((per_chain, mode_coverage(&pooled, &spec)?));
                if keep_chain_files(config, r) {
                    files.extend(chain_files(r, &entry.name, &runs));
                }
            }
            Ok(Rep { per_sampler, files })
        })
        .collect::<Result<_>>()?;

    let mut summary = Table::new(["repetition", "sampler", "chain", "coverage"]);
    let mut report = DiagnosticsReport::new();
    report.insert("coverage.radius", config.coverage.radius);
    report.insert("coverage.min_count", config.coverage.min_count);
    for (s, entry) in config.samplers.iter().enumerate() {
        let mut chain_vals = Vec::new();
        let mut pooled_vals = Vec::new();
        for (r, rep) in reps.iter().enumerate() {
            let (per_chain, pooled) = &rep.per_sampler[s];
            for (c, v) in per_chain.iter().enumerate() {
                summary.push([
                    r.to_string(),
                    entry.name.clone(),
                    c.to_string(),
                    v.to_string(),
                ]);
                chain_vals.push(*v as f64);
            }
            summary.push([
                r.to_string(),
                entry.name.clone(),
                "pooled".into(),
                pooled.to_string(),
            ]);
            pooled_vals.push(*pooled as f64);
        }
        let n = &entry.name;
        report.insert(format!("{n}.coverage.chain.mean"), mean(&chain_vals));
        report.insert(
            format!("{n}.coverage.chain.min"),
            chain_vals.iter().copied().fold(f64::INFINITY, f64::min),
        );
        report.insert(format!("{n}.coverage.pooled.mean"), mean(&pooled_vals));
        report.insert(
            format!("{n}.coverage.pooled.se"),
            standard_error(&pooled_vals),
        );
        report.insert(
            format!("{n}.coverage.pooled.values"),
            pooled_vals
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        );
    }
    Ok(Outcome {
        report,
        summary,
        chains: reps.into_iter().flat_map(|r| r.files).collect(),
    })
}

/// Loads the configured dataset, or the synthetic stand-in when the file is
/// absent and the fallback is enabled. The flag says which one was used.
pub fn load_dataset(cfg: &DatasetConfig, seed: u64) -> Result<(Dataset, bool)> {
    match &cfg.path {
        Some(path) if path.is_file() => {
            Ok((load_csv(path, cfg.has_header, cfg.standardize)?, false))
        }
        path if cfg.synthetic_fallback => {
            warn!(
                "dataset {:?}: {} not found; using a synthetic {}x{} stand-in",
                cfg.name,
                path.as_ref()
                    .map_or("<unset>".into(), |p| p.display().to_string()),
                cfg.synthetic_rows,
                cfg.synthetic_cols
            );
            let mut data = synth_logistic(cfg.synthetic_rows, cfg.synthetic_cols, seed)?;
            if cfg.standardize {
                data.standardize();
            }
            Ok((data, true))
        }
        path => Err(CliError::DatasetMissing {
            name: cfg.name.clone(),
            path: path.clone().unwrap_or_default(),
        }),
    }
}

fn scale_schedule(spec: &ScheduleSpec, factor: f64) -> ScheduleSpec {
    let mut s = *spec;
    match &mut s {
        ScheduleSpec::CyclicalCosine { alpha0, .. } | ScheduleSpec::Constant { alpha0, .. } => {
            *alpha0 *= factor
        }
        ScheduleSpec::PolynomialDecay { decay_a, .. } => *decay_a *= factor,
    }
    s
}

fn blr_ess(config: &ExperimentConfig) -> Result<Outcome> {
    let TargetConfig::Logistic {
        dataset,
        prior_variance,
        stepsizes_scaled_by_n,
    } = &config.target
    else {
        unreachable!("validated experiment/target pairing")
    };
    let (data, synthetic) = load_dataset(dataset, config.seed)?;
    let target = blr_target(&data, *prior_variance)?;
    let n = data.rows();
    let d = target.dim();
    let starts = inits(config, d)?;

    let reference_seed = derive_seed(config.seed, u64::MAX);
    let reference = hmc_reference(
        &target,
        &vec![0.0; d],
        config.reference.leapfrog_steps,
        config.reference.stepsize,
        config.reference.iters,
        reference_seed,
    )?;
    let kept = &reference.samples.records()[config.reference.burn_in as usize..];
    let ref_mean: Vec<f64> = (0..d)
        .map(|j| mean(&kept.iter().map(|r| r.theta[j]).collect::<Vec<_>>()))
        .collect();
    let ref_var: Vec<f64> = (0..d)
        .map(|j| {
            let m = ref_mean[j];
            kept.iter().map(|r| (r.theta[j] - m).powi(2)).sum::<f64>() / (kept.len() - 1) as f64
        })
        .collect();
    info!(
        "HMC reference acceptance rate {:.3}",
        reference.acceptance_rate
    );

    let entries: Vec<SamplerEntry> = config
        .samplers
        .iter()
        .map(|e| {
            let mut e = e.clone();
            if *stepsizes_scaled_by_n {
                e.config.schedule = scale_schedule(&e.config.schedule, 1.0 / n as f64);
            }
            e
        })
        .collect();

    struct Rep {
        per_sampler: Vec<Vec<(usize, f64, f64)>>,
        files: Vec<ChainFile>,
    }
    let reps: Vec<Rep> = (0..config.repetitions)
        .into_par_iter()
        .map(|r| -> Result<Rep> {
            let rep_seed = repetition_seed(config, r);
            let mut per_sampler = Vec::new();
            let mut files = Vec::new();
            for (s, entry) in entries.iter().enumerate() {
                let runs = run_chains(&target, entry, derive_seed(rep_seed, s as u64), &starts, r)?;
                let stats = runs
                    .iter()
                    .map(|run| chain_ess(&run.samples, &ref_mean, &ref_var))
                    .collect::<Result<Vec<_>>>()?;
                per_sampler.push(stats);
                if keep_chain_files(config, r) {
                    files.extend(chain_files(r, &entry.name, &runs));
                }
            }
            Ok(Rep { per_sampler, files })
        })
        .collect::<Result<_>>()?;

    let mut report = DiagnosticsReport::new();
    report.insert("dataset.name", &dataset.name);
    report.insert(
        "dataset.source",
        if synthetic { "synthetic" } else { "file" },
    );
    report.insert("dataset.rows", n);
    report.insert("dataset.dim", d);
    report.insert("reference.acceptance_rate", reference.acceptance_rate);
    for (i, w) in reference.warnings.iter().enumerate() {
        report.insert(format!("reference.warning.{i}"), w);
    }
    let mut summary = Table::new([
        "repetition",
        "sampler",
        "chain",
        "samples",
        "median_ess",
        "min_ess",
    ]);
    for (s, entry) in entries.iter().enumerate() {
        let mut medians = Vec::new();
        for (r, rep) in reps.iter().enumerate() {
            for (c, (count, med, min)) in rep.per_sampler[s].iter().enumerate() {
                summary.push([
                    r.to_string(),
                    entry.name.clone(),
                    c.to_string(),
                    count.to_string(),
                    med.to_string(),
                    min.to_string(),
                ]);
                medians.push(*med);
            }
        }
        let name = &entry.name;
        report.insert(format!("{name}.ess.median"), median(&medians));
        report.insert(
            format!("{name}.ess.values"),
            medians
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        );
        report.insert(
            format!("{name}.initial_stepsize"),
            entry.config.schedule.initial_stepsize(),
        );
    }
    Ok(Outcome {
        report,
        summary,
        chains: reps.into_iter().flat_map(|r| r.files).collect(),
    })
}

/// Sample count, then median and minimum ESS over coordinates.
fn chain_ess(samples: &SampleSet, ref_mean: &[f64], ref_var: &[f64]) -> Result<(usize, f64, f64)> {
    let b = samples.len();
    let values = (0..samples.dim())
        .map(|j| {
            let chain = samples.coordinate(j);
            Ok(ess(
                EssInput {
                    chain: &chain,
                    ref_mean: ref_mean[j],
                    ref_var: ref_var[j],
                },
                b.saturating_sub(1),
            )?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((
        b,
        median(&values),
        values.iter().copied().fold(f64::INFINITY, f64::min),
    ))
}

fn bias_mse(config: &ExperimentConfig) -> Result<Outcome> {
    let TargetConfig::Gaussian { mean: m, variance } = &config.target else {
        unreachable!("validated experiment/target pairing")
    };
    let target = GaussianTarget::new(m.clone(), *variance)?;
    let start = inits(config, m.len())?.swap_remove(0);
    let (test_fn, true_mean): (fn(&[f64]) -> f64, f64) = match config.probe.function {
        ProbeFunction::FirstMoment => (|x| x[0], m[0]),
        ProbeFunction::SecondMoment => (|x| x[0] * x[0], m[0] * m[0] + variance),
    };
    let probe = ConvergenceProbe {
        test_fn,
        true_mean,
        seeds: config.probe.seeds,
    };
    let mut summary = Table::new([
        "repetition",
        "sampler",
        "total_iters",
        "mean_estimate",
        "bias",
        "mse",
    ]);
    let mut report = DiagnosticsReport::new();
    report.insert("probe.true_mean", true_mean);
    report.insert("probe.seeds", config.probe.seeds);
    for (s, entry) in config.samplers.iter().enumerate() {
        let mut mse_by_k = vec![Vec::new(); config.probe.k_values.len()];
        let mut bias_by_k = vec![Vec::new(); config.probe.k_values.len()];
        let mut votes = 0;
        for r in 0..config.repetitions {
            let mut cfg = entry.config.clone();
            cfg.seed = derive_seed(repetition_seed(config, r), s as u64);
            let rows = bias_mse_probe(&target, &cfg, &start, &probe, &config.probe.k_values)?;
            for (i, row) in rows.iter().enumerate() {
                summary.push([
                    r.to_string(),
                    entry.name.clone(),
                    row.total_iters.to_string(),
                    row.mean_estimate.to_string(),
                    row.bias.to_string(),
                    row.mse.to_string(),
                ]);
                mse_by_k[i].push(row.mse);
                bias_by_k[i].push(row.bias);
            }
            if rows.windows(2).all(|w| w[1].mse < w[0].mse) {
                votes += 1;
            }
        }
        let name = &entry.name;
        for (i, k) in config.probe.k_values.iter().enumerate() {
            report.insert(format!("{name}.k{k}.mse"), mean(&mse_by_k[i]));
            report.insert(format!("{name}.k{k}.bias"), mean(&bias_by_k[i]));
        }
        report.insert(format!("{name}.mse_decreasing_votes"), votes);
    }
    Ok(Outcome {
        report,
        summary,
        chains: Vec::new(),
    })
}

fn w2_probe(config: &ExperimentConfig) -> Result<Outcome> {
    let target = mixture_spec(config)?;
    let starts = inits(config, 2)?;
    let reference_schedule = &config
        .samplers
        .iter()
        .find(|s| s.config.schedule.is_cyclical())
        .expect("validated: at least one cyclical sampler")
        .config
        .schedule;
    let cycle_len = reference_schedule.cycle_len();
    let budget = reference_schedule.total_iters();
    let checkpoints: Vec<(u64, u64)> = config
        .probe
        .checkpoint_cycles
        .iter()
        .map(|&m| (m, (m * cycle_len).min(budget)))
        .collect();
    let points = config.probe.points;

    struct Rep {
        w2: Vec<Vec<(u64, usize, f64)>>,
        files: Vec<ChainFile>,
    }
    let reps: Vec<Rep> = (0..config.repetitions)
        .into_par_iter()
        .map(|r| -> Result<Rep> {
            let rep_seed = repetition_seed(config, r);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rep_seed, 1 << 32));
            let truth = target.sample(&mut rng, points);
            let mut w2 = Vec::new();
            let mut files = Vec::new();
            for (s, entry) in config.samplers.iter().enumerate() {
                let runs = run_chains(&target, entry, derive_seed(rep_seed, s as u64), &starts, r)?;
                let mut rows = Vec::new();
                for &(m, cut) in &checkpoints {
                    let pooled: Vec<Vec<f64>> = runs
                        .iter()
                        .flat_map(|run| run.samples.records().iter())
                        .filter(|rec| rec.iter <= cut)
                        .map(|rec| rec.theta.clone())
                        .collect();
                    if pooled.is_empty() {
                        return Err(CliError::Invalid(vec![format!(
                            "samplers.{}: no samples by iteration {cut} (checkpoint {m} cycles)",
                            entry.name
                        )]));
                    }
                    let dist = wasserstein2_capped(
                        &pooled,
                        &truth,
                        points,
                        derive_seed(rep_seed, (1 << 33) + m),
                    )?;
                    rows.push((m, pooled.len(), dist));
                }
                w2.push(rows);
                if keep_chain_files(config, r) {
                    files.extend(chain_files(r, &entry.name, &runs));
                }
            }
            Ok(Rep { w2, files })
        })
        .collect::<Result<_>>()?;

    let mut report = DiagnosticsReport::new();
    report.insert("probe.points", points);
    report.insert("probe.cycle_len", cycle_len);
    let mut summary = Table::new([
        "repetition",
        "sampler",
        "cycles",
        "iterations",
        "samples",
        "w2",
    ]);
    for (s, entry) in config.samplers.iter().enumerate() {
        for (i, &(m, cut)) in checkpoints.iter().enumerate() {
            let mut vals = Vec::new();
            for (r, rep) in reps.iter().enumerate() {
                let (_, count, dist) = rep.w2[s][i];
                summary.push([
                    r.to_string(),
                    entry.name.clone(),
                    m.to_string(),
                    cut.to_string(),
                    count.to_string(),
                    dist.to_string(),
                ]);
                vals.push(dist);
            }
            report.insert(format!("{}.w2.cycles{m}", entry.name), mean(&vals));
        }
    }
    Ok(Outcome {
        report,
        summary,
        chains: reps.into_iter().flat_map(|r| r.files).collect(),
    })
}
