//! Experiment configuration: TOML text, `key=value` overrides, and a
//! validator that reports every violation with its field path.
//!
//! See `configs/README.md` for the schema.

use std::cell::RefCell;
use std::fmt;
use std::path::{Path, PathBuf};

use csgmcmc::sampler::ChainPlan;
use csgmcmc::{BaseSampler, SamplerConfig, ScheduleSpec};
use toml::{Table, Value};

use crate::error::{CliError, Result};

pub const OUTPUT_DIR_ENV: &str = "CSGMCMC_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "runs";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Mixture25,
    BlrEss,
    BiasMse,
    W2Probe,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Mixture25 => "mixture25",
            ExperimentKind::BlrEss => "blr_ess",
            ExperimentKind::BiasMse => "bias_mse",
            ExperimentKind::W2Probe => "w2_probe",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "mixture25" => ExperimentKind::Mixture25,
            "blr_ess" => ExperimentKind::BlrEss,
            "bias_mse" => ExperimentKind::BiasMse,
            "w2_probe" => ExperimentKind::W2Probe,
            _ => return None,
        })
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which chains get a sample CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainOutput {
    First,
    All,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub name: String,
    pub path: Option<PathBuf>,
    pub has_header: bool,
    pub standardize: bool,
    pub synthetic_fallback: bool,
    pub synthetic_rows: usize,
    pub synthetic_cols: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetConfig {
    Mixture {
        grid: Vec<f64>,
        variance: f64,
    },
    Gaussian {
        mean: Vec<f64>,
        variance: f64,
    },
    Logistic {
        dataset: DatasetConfig,
        prior_variance: f64,
        /// Stepsizes in the sampler tables are `alpha * N`.
        stepsizes_scaled_by_n: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerEntry {
    pub name: String,
    pub config: SamplerConfig,
    /// `None` for cyclical samplers means "as many as the shortest sampling stage allows".
    pub samples_per_cycle: Option<u64>,
    pub burn_in: u64,
    pub keep: Option<u64>,
}

impl SamplerEntry {
    pub fn plan(&self) -> ChainPlan {
        let schedule = &self.config.schedule;
        if schedule.is_cyclical() {
            ChainPlan::Cyclical {
                samples_per_cycle: self
                    .samples_per_cycle
                    .unwrap_or_else(|| schedule.min_sampling_len()),
            }
        } else {
            ChainPlan::Plain {
                burn_in: self.burn_in,
                keep: self
                    .keep
                    .unwrap_or_else(|| schedule.total_iters().saturating_sub(self.burn_in)),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageConfig {
    pub radius: f64,
    pub min_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceConfig {
    pub iters: u64,
    pub burn_in: u64,
    pub leapfrog_steps: usize,
    pub stepsize: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeFunction {
    FirstMoment,
    SecondMoment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub function: ProbeFunction,
    pub seeds: u64,
    pub k_values: Vec<u64>,
    pub points: usize,
    pub checkpoint_cycles: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub output_dir: Option<PathBuf>,
    pub repetitions: u64,
    pub seed: u64,
    pub chains: usize,
    pub write_chains: ChainOutput,
    pub init: Vec<Vec<f64>>,
    pub target: TargetConfig,
    pub samplers: Vec<SamplerEntry>,
    pub coverage: CoverageConfig,
    pub reference: ReferenceConfig,
    pub probe: ProbeConfig,
}

impl ExperimentConfig {
    pub fn dim(&self) -> usize {
        match &self.target {
            TargetConfig::Mixture { .. } => 2,
            TargetConfig::Gaussian { mean, .. } => mean.len(),
            // Features plus the bias column; known only once the data is loaded.
            TargetConfig::Logistic { .. } => 0,
        }
    }

    /// Output root: the config value, then `$CSGMCMC_OUTPUT_DIR`, then `runs`.
    pub fn resolved_output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }
}

/// A parsed, override-applied configuration tree plus its typed form.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub raw: Table,
    pub config: ExperimentConfig,
}

pub fn parse_toml(text: &str, origin: &str) -> Result<Table> {
    text.parse::<Table>().map_err(|e| CliError::Syntax {
        origin: origin.to_string(),
        message: e.to_string().trim_end().to_string(),
    })
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_toml(&text, &path.display().to_string())
}

/// Applies `a.b.c=value` overrides in order, so the last one for a key wins.
///
/// Path segments address table keys, array indices, or (inside
/// `samplers`) the entry whose `name` matches. Values are read as TOML
/// literals; anything that fails to parse is taken as a bare string.
pub fn apply_overrides(raw: &mut Table, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (path, literal) = item
            .split_once('=')
            .ok_or_else(|| CliError::Override(format!("{item:?} is not of the form key=value")))?;
        let value = parse_literal(literal.trim());
        let segments: Vec<&str> = path.trim().split('.').collect();
        if segments.iter().any(|s| s.is_empty()) {
            return Err(CliError::Override(format!("empty segment in {path:?}")));
        }
        set_path(raw, &segments, value).map_err(|m| CliError::Override(format!("{path}: {m}")))?;
    }
    Ok(())
}

fn parse_literal(literal: &str) -> Value {
    match format!("v = {literal}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("key just written"),
        Err(_) => Value::String(literal.to_string()),
    }
}

fn set_path(table: &mut Table, segments: &[&str], value: Value) -> std::result::Result<(), String> {
    let (head, rest) = segments.split_first().expect("non-empty path");
    if rest.is_empty() {
        table.insert(head.to_string(), value);
        return Ok(());
    }
    let child = table
        .entry(head.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    set_in_value(child, rest, value)
}

fn set_in_value(
    node: &mut Value,
    segments: &[&str],
    value: Value,
) -> std::result::Result<(), String> {
    match node {
        Value::Table(t) => set_path(t, segments, value),
        Value::Array(items) => {
            let (head, rest) = segments.split_first().expect("non-empty path");
            let idx = match head.parse::<usize>() {
                Ok(i) => i,
                Err(_) => items
                    .iter()
                    .position(|v| v.get("name").and_then(Value::as_str) == Some(*head))
                    .ok_or_else(|| format!("no array entry named {head:?}"))?,
            };
            let len = items.len();
            let slot = items
                .get_mut(idx)
                .ok_or_else(|| format!("index {idx} out of range (length {len})"))?;
            if rest.is_empty() {
                *slot = value;
                Ok(())
            } else {
                set_in_value(slot, rest, value)
            }
        }
        _ => Err(format!("cannot descend into a scalar at {:?}", segments[0])),
    }
}

/// Reads the file, applies overrides, and builds the typed configuration.
pub fn load(path: &Path, overrides: &[String]) -> Result<LoadedConfig> {
    let mut raw = read_table(path)?;
    apply_overrides(&mut raw, overrides)?;
    let config = from_table(&raw).map_err(CliError::Invalid)?;
    Ok(LoadedConfig { raw, config })
}

/// Every violation in the file, or an empty list when it is valid.
pub fn validate_file(path: &Path, overrides: &[String]) -> Result<Vec<String>> {
    let mut raw = match read_table(path) {
        Ok(t) => t,
        Err(CliError::Syntax { message, .. }) => return Ok(vec![format!("syntax: {message}")]),
        Err(e) => return Err(e),
    };
    apply_overrides(&mut raw, overrides)?;
    Ok(match from_table(&raw) {
        Ok(_) => Vec::new(),
        Err(v) => v,
    })
}

type Errors = RefCell<Vec<String>>;

/// Field reader that records problems instead of stopping at the first one.
struct Fields<'a> {
    table: &'a Table,
    prefix: String,
    errors: &'a Errors,
}

impl<'a> Fields<'a> {
    fn new(table: &'a Table, prefix: impl Into<String>, errors: &'a Errors) -> Self {
        Self {
            table,
            prefix: prefix.into(),
            errors,
        }
    }

    fn path(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.prefix)
        }
    }

    fn error(&mut self, key: &str, message: impl fmt::Display) {
        let p = self.path(key);
        self.errors.borrow_mut().push(format!("{p}: {message}"));
    }

    fn allow_only(&mut self, keys: &[&str]) {
        let mut unknown: Vec<&String> = self
            .table
            .keys()
            .filter(|k| !keys.contains(&k.as_str()))
            .collect();
        unknown.sort();
        for k in unknown {
            let k = k.clone();
            self.error(&k, "unknown field");
        }
    }

    fn missing(&mut self, key: &str) {
        self.error(key, "missing required field");
    }

    fn f64_value(&mut self, key: &str, v: &Value) -> Option<f64> {
        match v {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                self.error(
                    key,
                    format!("expected a number, found {}", other.type_str()),
                );
                None
            }
        }
    }

    fn req_f64(&mut self, key: &str) -> Option<f64> {
        match self.table.get(key) {
            Some(v) => self.f64_value(key, v),
            None => {
                self.missing(key);
                None
            }
        }
    }

    fn opt_f64(&mut self, key: &str, default: f64) -> f64 {
        match self.table.get(key) {
            Some(v) => self.f64_value(key, v).unwrap_or(default),
            None => default,
        }
    }

    fn u64_value(&mut self, key: &str, v: &Value) -> Option<u64> {
        match v {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            Value::Integer(i) => {
                self.error(key, format!("must be >= 0 (got {i})"));
                None
            }
            other => {
                self.error(
                    key,
                    format!("expected an integer, found {}", other.type_str()),
                );
                None
            }
        }
    }

    fn req_u64(&mut self, key: &str) -> Option<u64> {
        match self.table.get(key) {
            Some(v) => self.u64_value(key, v),
            None => {
                self.missing(key);
                None
            }
        }
    }

    fn opt_u64(&mut self, key: &str) -> Option<u64> {
        let v = self.table.get(key)?;
        self.u64_value(key, v)
    }

    fn opt_bool(&mut self, key: &str, default: bool) -> bool {
        match self.table.get(key) {
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                self.error(
                    key,
                    format!("expected a boolean, found {}", other.type_str()),
                );
                default
            }
            None => default,
        }
    }

    fn opt_str(&mut self, key: &str) -> Option<&'a str> {
        match self.table.get(key) {
            Some(Value::String(s)) => Some(s.as_str()),
            Some(other) => {
                self.error(
                    key,
                    format!("expected a string, found {}", other.type_str()),
                );
                None
            }
            None => None,
        }
    }

    fn req_str(&mut self, key: &str) -> Option<&'a str> {
        if !self.table.contains_key(key) {
            self.missing(key);
            return None;
        }
        self.opt_str(key)
    }

    fn f64_list(&mut self, key: &str, v: &Value) -> Option<Vec<f64>> {
        let Value::Array(items) = v else {
            self.error(
                key,
                format!("expected an array of numbers, found {}", v.type_str()),
            );
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            out.push(self.f64_value(&format!("{key}[{i}]"), item)?);
        }
        Some(out)
    }

    fn opt_f64_list(&mut self, key: &str) -> Option<Vec<f64>> {
        let v = self.table.get(key)?;
        self.f64_list(key, v)
    }

    fn opt_u64_list(&mut self, key: &str) -> Option<Vec<u64>> {
        let v = self.table.get(key)?;
        let Value::Array(items) = v else {
            self.error(
                key,
                format!("expected an array of integers, found {}", v.type_str()),
            );
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            out.push(self.u64_value(&format!("{key}[{i}]"), item)?);
        }
        Some(out)
    }

    fn opt_points(&mut self, key: &str) -> Option<Vec<Vec<f64>>> {
        let v = self.table.get(key)?;
        let Value::Array(items) = v else {
            self.error(key, "expected an array of points");
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            out.push(self.f64_list(&format!("{key}[{i}]"), item)?);
        }
        Some(out)
    }

    fn subtable(&mut self, key: &str) -> Option<&'a Table> {
        match self.table.get(key) {
            Some(Value::Table(t)) => Some(t),
            Some(other) => {
                self.error(key, format!("expected a table, found {}", other.type_str()));
                None
            }
            None => None,
        }
    }
}

static EMPTY: std::sync::LazyLock<Table> = std::sync::LazyLock::new(Table::new);

/// Builds the typed configuration, or returns every violation found.
pub fn from_table(raw: &Table) -> std::result::Result<ExperimentConfig, Vec<String>> {
    let errors = Errors::default();
    let mut top = Fields::new(raw, "", &errors);
    top.allow_only(&[
        "experiment",
        "output_dir",
        "repetitions",
        "seed",
        "chains",
        "write_chains",
        "init",
        "target",
        "samplers",
        "coverage",
        "reference",
        "probe",
    ]);
    let experiment = match top.req_str("experiment") {
        Some(s) => match ExperimentKind::parse(s) {
            Some(k) => Some(k),
            None => {
                top.error("experiment", format!("unknown experiment {s:?} (expected mixture25, blr_ess, bias_mse or w2_probe)"));
                None
            }
        },
        None => None,
    };
    let output_dir = top.opt_str("output_dir").map(PathBuf::from);
    let repetitions = top.opt_u64("repetitions").unwrap_or(1);
    if repetitions == 0 {
        top.error("repetitions", "must be >= 1");
    }
    let seed = top.opt_u64("seed").unwrap_or(0);
    let chains = top.opt_u64("chains").unwrap_or(1) as usize;
    if chains == 0 {
        top.error("chains", "must be >= 1");
    }
    let write_chains = match top.opt_str("write_chains").unwrap_or("first") {
        "first" => ChainOutput::First,
        "all" => ChainOutput::All,
        "none" => ChainOutput::None,
        other => {
            top.error(
                "write_chains",
                format!("expected first, all or none (got {other:?})"),
            );
            ChainOutput::First
        }
    };
    let init = top.opt_points("init");
    let target_table = top.subtable("target");
    let coverage_table = top.subtable("coverage");
    let reference_table = top.subtable("reference");
    let probe_table = top.subtable("probe");
    let samplers_value = raw.get("samplers");

    let Some(experiment) = experiment else {
        return Err(errors.take());
    };

    let target = target_config(experiment, target_table.unwrap_or(&EMPTY), &errors);
    let samplers = sampler_entries(samplers_value, &target, &errors);

    let mut cov = Fields::new(coverage_table.unwrap_or(&EMPTY), "coverage", &errors);
    cov.allow_only(&["radius", "min_count"]);
    let coverage = CoverageConfig {
        radius: cov.opt_f64("radius", csgmcmc::diagnostics::DEFAULT_RADIUS),
        min_count: cov
            .opt_u64("min_count")
            .map_or(csgmcmc::diagnostics::DEFAULT_MIN_COUNT, |v| v as usize),
    };
    if !(coverage.radius > 0.0) {
        cov.error(
            "radius",
            format!("must be positive (got {})", coverage.radius),
        );
    }
    if coverage.min_count == 0 {
        cov.error("min_count", "must be >= 1");
    }

    let mut refr = Fields::new(reference_table.unwrap_or(&EMPTY), "reference", &errors);
    refr.allow_only(&["iters", "burn_in", "leapfrog_steps", "stepsize"]);
    let reference = ReferenceConfig {
        iters: refr.opt_u64("iters").unwrap_or(50_000),
        burn_in: refr.opt_u64("burn_in").unwrap_or(1000),
        leapfrog_steps: refr.opt_u64("leapfrog_steps").unwrap_or(10) as usize,
        stepsize: refr.opt_f64("stepsize", 0.01),
    };
    if experiment == ExperimentKind::BlrEss {
        if reference.iters <= reference.burn_in + 10 {
            refr.error(
                "iters",
                format!(
                    "must exceed burn_in + 10 (got {} with burn_in {})",
                    reference.iters, reference.burn_in
                ),
            );
        }
        if reference.leapfrog_steps == 0 {
            refr.error("leapfrog_steps", "must be >= 1");
        }
        if !(reference.stepsize > 0.0) {
            refr.error(
                "stepsize",
                format!("must be positive (got {})", reference.stepsize),
            );
        }
    }

    let mut pr = Fields::new(probe_table.unwrap_or(&EMPTY), "probe", &errors);
    pr.allow_only(&[
        "function",
        "seeds",
        "k_values",
        "points",
        "checkpoint_cycles",
    ]);
    let function = match pr.opt_str("function").unwrap_or("second_moment") {
        "first_moment" => ProbeFunction::FirstMoment,
        "second_moment" => ProbeFunction::SecondMoment,
        other => {
            pr.error(
                "function",
                format!("expected first_moment or second_moment (got {other:?})"),
            );
            ProbeFunction::SecondMoment
        }
    };
    let probe = ProbeConfig {
        function,
        seeds: pr.opt_u64("seeds").unwrap_or(20),
        k_values: pr
            .opt_u64_list("k_values")
            .unwrap_or_else(|| vec![1000, 10_000, 100_000]),
        points: pr.opt_u64("points").unwrap_or(512) as usize,
        checkpoint_cycles: pr
            .opt_u64_list("checkpoint_cycles")
            .unwrap_or_else(|| vec![3, 30]),
    };
    match experiment {
        ExperimentKind::BiasMse => {
            if probe.seeds == 0 {
                pr.error("seeds", "must be >= 1");
            }
            if probe.k_values.is_empty() || probe.k_values.contains(&0) {
                pr.error(
                    "k_values",
                    "must be a non-empty list of positive iteration counts",
                );
            }
        }
        ExperimentKind::W2Probe => {
            if !(1..=csgmcmc::diagnostics::W2_CAP).contains(&probe.points) {
                pr.error(
                    "points",
                    format!(
                        "must lie in [1, {}] (got {})",
                        csgmcmc::diagnostics::W2_CAP,
                        probe.points
                    ),
                );
            }
            if probe.checkpoint_cycles.is_empty() || probe.checkpoint_cycles.contains(&0) {
                pr.error(
                    "checkpoint_cycles",
                    "must be a non-empty list of positive cycle counts",
                );
            }
        }
        _ => {}
    }

    let dim = match &target {
        Some(TargetConfig::Mixture { .. }) => Some(2),
        Some(TargetConfig::Gaussian { mean, .. }) => Some(mean.len()),
        _ => None,
    };
    let init = match (init, dim) {
        (Some(points), Some(d)) => {
            for (i, p) in points.iter().enumerate() {
                if p.len() != d {
                    errors.borrow_mut().push(format!(
                        "init[{i}]: expected {d} coordinates, found {}",
                        p.len()
                    ));
                }
            }
            if points.is_empty() {
                errors
                    .borrow_mut()
                    .push("init: must list at least one point".into());
            }
            points
        }
        (Some(points), None) => points,
        (None, Some(d)) => vec![vec![0.0; d]],
        (None, None) => Vec::new(),
    };

    if experiment == ExperimentKind::W2Probe {
        if let Some(samplers) = &samplers {
            if !samplers.iter().any(|s| s.config.schedule.is_cyclical()) {
                errors.borrow_mut().push(
                    "samplers: w2_probe needs at least one cyclical sampler to define checkpoints"
                        .into(),
                );
            }
        }
    }
    if experiment == ExperimentKind::BiasMse {
        if let Some(samplers) = &samplers {
            for (i, s) in samplers.iter().enumerate() {
                if !s.config.schedule.is_cyclical() {
                    errors.borrow_mut().push(format!("samplers[{i}].schedule.kind: bias_mse probes need a cyclical_cosine schedule"));
                }
            }
        }
    }

    let clean = errors.borrow().is_empty();
    match (target, samplers, clean) {
        (Some(target), Some(samplers), true) => Ok(ExperimentConfig {
            experiment,
            output_dir,
            repetitions,
            seed,
            chains,
            write_chains,
            init,
            target,
            samplers,
            coverage,
            reference,
            probe,
        }),
        _ => Err(errors.take()),
    }
}

fn target_config(kind: ExperimentKind, table: &Table, errors: &Errors) -> Option<TargetConfig> {
    let mut f = Fields::new(table, "target", errors);
    match kind {
        ExperimentKind::Mixture25 | ExperimentKind::W2Probe => {
            f.allow_only(&["grid", "variance"]);
            let grid = f
                .opt_f64_list("grid")
                .unwrap_or_else(|| vec![-4.0, -2.0, 0.0, 2.0, 4.0]);
            let variance = f.opt_f64("variance", 0.03);
            if grid.is_empty() {
                f.error("grid", "must list at least one coordinate");
            }
            let mut sorted = grid.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                f.error("grid", "coordinates must be distinct");
            }
            if !(variance > 0.0) {
                f.error("variance", format!("must be positive (got {variance})"));
            }
            Some(TargetConfig::Mixture { grid, variance })
        }
        ExperimentKind::BiasMse => {
            f.allow_only(&["mean", "variance"]);
            let mean = f.opt_f64_list("mean").unwrap_or_else(|| vec![0.0]);
            let variance = f.opt_f64("variance", 1.0);
            if mean.is_empty() {
                f.error("mean", "must have at least one coordinate");
            }
            if !(variance > 0.0) {
                f.error("variance", format!("must be positive (got {variance})"));
            }
            Some(TargetConfig::Gaussian { mean, variance })
        }
        ExperimentKind::BlrEss => {
            f.allow_only(&[
                "dataset",
                "path",
                "has_header",
                "standardize",
                "synthetic_fallback",
                "synthetic_rows",
                "synthetic_cols",
                "prior_variance",
                "stepsizes_scaled_by_n",
            ]);
            let name = f.req_str("dataset").unwrap_or("").to_string();
            let path = f.opt_str("path").map(PathBuf::from);
            let has_header = f.opt_bool("has_header", false);
            let standardize = f.opt_bool("standardize", true);
            let synthetic_fallback = f.opt_bool("synthetic_fallback", false);
            let synthetic_rows = f.opt_u64("synthetic_rows").unwrap_or(690) as usize;
            let synthetic_cols = f.opt_u64("synthetic_cols").unwrap_or(14) as usize;
            let prior_variance =
                f.opt_f64("prior_variance", csgmcmc::model::DEFAULT_PRIOR_VARIANCE);
            let stepsizes_scaled_by_n = f.opt_bool("stepsizes_scaled_by_n", true);
            if !(prior_variance > 0.0) {
                f.error(
                    "prior_variance",
                    format!("must be positive (got {prior_variance})"),
                );
            }
            let exists = path.as_ref().is_some_and(|p| p.is_file());
            if !exists && !synthetic_fallback {
                let shown = path
                    .as_ref()
                    .map_or("<unset>".to_string(), |p| p.display().to_string());
                f.error(
                    "path",
                    format!("dataset file {shown} not found; set target.synthetic_fallback = true to use a synthetic dataset of the same shape"),
                );
            }
            if synthetic_fallback && (synthetic_rows < 10 || synthetic_cols < 1) {
                f.error(
                    "synthetic_rows",
                    "synthetic fallback needs at least 10 rows and 1 column",
                );
            }
            Some(TargetConfig::Logistic {
                dataset: DatasetConfig {
                    name,
                    path,
                    has_header,
                    standardize,
                    synthetic_fallback,
                    synthetic_rows,
                    synthetic_cols,
                },
                prior_variance,
                stepsizes_scaled_by_n,
            })
        }
    }
}

fn sampler_entries(
    value: Option<&Value>,
    target: &Option<TargetConfig>,
    errors: &Errors,
) -> Option<Vec<SamplerEntry>> {
    let items = match value {
        Some(Value::Array(items)) if !items.is_empty() => items,
        Some(Value::Array(_)) | None => {
            errors
                .borrow_mut()
                .push("samplers: at least one [[samplers]] entry is required".into());
            return None;
        }
        Some(other) => {
            errors.borrow_mut().push(format!(
                "samplers: expected an array of tables, found {}",
                other.type_str()
            ));
            return None;
        }
    };
    let has_data = matches!(target, Some(TargetConfig::Logistic { .. }));
    let mut out = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let start = errors.borrow().len();
    for (i, item) in items.iter().enumerate() {
        let prefix = format!("samplers[{i}]");
        let Value::Table(t) = item else {
            errors
                .borrow_mut()
                .push(format!("{prefix}: expected a table"));
            continue;
        };
        let mut f = Fields::new(t, prefix.clone(), errors);
        f.allow_only(&[
            "name",
            "base",
            "schedule",
            "temperature",
            "friction_eta",
            "noise_estimate_gammahat",
            "minibatch_size",
            "samples_per_cycle",
            "burn_in",
            "keep",
        ]);
        let name = f.req_str("name").map(str::to_string);
        if let Some(n) = &name {
            if names.contains(n) {
                f.error("name", format!("duplicate sampler name {n:?}"));
            } else if n.is_empty()
                || !n
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                f.error(
                    "name",
                    format!("must be non-empty and use only [A-Za-z0-9_-] (got {n:?})"),
                );
            }
            names.push(n.clone());
        }
        let base = match f.req_str("base") {
            Some("sgld") => Some(BaseSampler::Sgld),
            Some("sghmc") => Some(BaseSampler::Sghmc),
            Some(other) => {
                f.error("base", format!("expected sgld or sghmc (got {other:?})"));
                None
            }
            None => None,
        };
        let temperature = f.opt_f64("temperature", 1.0);
        let friction_eta = f.opt_f64("friction_eta", 0.5);
        let gammahat = f.opt_f64("noise_estimate_gammahat", 0.0);
        let minibatch_size = f.opt_u64("minibatch_size").map(|v| v as usize);
        if minibatch_size.is_some() && !has_data {
            f.error("minibatch_size", "only applies to data-backed targets");
        }
        let samples_per_cycle = f.opt_u64("samples_per_cycle");
        let burn_in = f.opt_u64("burn_in").unwrap_or(0);
        let keep = f.opt_u64("keep");
        let schedule_table = f.subtable("schedule");
        if schedule_table.is_none() && !t.contains_key("schedule") {
            f.missing("schedule");
        }
        let schedule =
            schedule_table.and_then(|st| schedule_spec(st, &format!("{prefix}.schedule"), errors));
        let (Some(name), Some(base), Some(schedule)) = (name, base, schedule) else {
            continue;
        };
        let mut config = SamplerConfig::new(base, schedule, 0);
        config.temperature = temperature;
        config.friction_eta = friction_eta;
        config.noise_estimate_gammahat = gammahat;
        config.minibatch_size = minibatch_size;
        for v in config.violations() {
            errors.borrow_mut().push(format!("{prefix}.{v}"));
        }
        let entry = SamplerEntry {
            name,
            config,
            samples_per_cycle,
            burn_in,
            keep,
        };
        let sched = &entry.config.schedule;
        if sched.is_cyclical() {
            if burn_in != 0 || keep.is_some() {
                errors.borrow_mut().push(format!(
                    "{prefix}: burn_in/keep apply only to non-cyclical schedules"
                ));
            }
            if samples_per_cycle == Some(0) {
                errors
                    .borrow_mut()
                    .push(format!("{prefix}.samples_per_cycle: must be >= 1"));
            }
        } else {
            if samples_per_cycle.is_some() {
                errors.borrow_mut().push(format!(
                    "{prefix}.samples_per_cycle: applies only to cyclical_cosine schedules"
                ));
            }
            if let ChainPlan::Plain { burn_in, keep } = entry.plan() {
                if burn_in > sched.total_iters()
                    || (keep > 0 && burn_in + keep > sched.total_iters())
                {
                    errors.borrow_mut().push(format!(
                        "{prefix}.keep: burn_in {burn_in} + keep {keep} exceeds schedule.total_iters {}",
                        sched.total_iters()
                    ));
                }
            }
        }
        out.push(entry);
    }
    if errors.borrow().len() > start {
        None
    } else {
        Some(out)
    }
}

fn schedule_spec(t: &Table, prefix: &str, errors: &Errors) -> Option<ScheduleSpec> {
    let mut f = Fields::new(t, prefix, errors);
    let kind = f.req_str("kind")?;
    let spec = match kind {
        "cyclical_cosine" => {
            f.allow_only(&["kind", "alpha0", "num_cycles", "total_iters", "beta"]);
            let alpha0 = f.req_f64("alpha0");
            let num_cycles = f.req_u64("num_cycles");
            let total_iters = f.req_u64("total_iters");
            let beta = f.req_f64("beta");
            ScheduleSpec::CyclicalCosine {
                alpha0: alpha0?,
                num_cycles: num_cycles?,
                total_iters: total_iters?,
                beta: beta?,
            }
        }
        "polynomial_decay" => {
            f.allow_only(&["kind", "decay_a", "decay_b", "decay_gamma", "total_iters"]);
            let decay_a = f.req_f64("decay_a");
            let decay_b = f.opt_f64("decay_b", 0.0);
            let decay_gamma = f.req_f64("decay_gamma");
            let total_iters = f.req_u64("total_iters");
            ScheduleSpec::PolynomialDecay {
                decay_a: decay_a?,
                decay_b,
                decay_gamma: decay_gamma?,
                total_iters: total_iters?,
            }
        }
        "constant" => {
            f.allow_only(&["kind", "alpha0", "total_iters"]);
            let alpha0 = f.req_f64("alpha0");
            let total_iters = f.req_u64("total_iters");
            ScheduleSpec::Constant {
                alpha0: alpha0?,
                total_iters: total_iters?,
            }
        }
        other => {
            f.error(
                "kind",
                format!("expected cyclical_cosine, polynomial_decay or constant (got {other:?})"),
            );
            return None;
        }
    };
    let v = spec.violations();
    if v.is_empty() {
        Some(spec)
    } else {
        // Schedule messages lead with the field name.
        errors
            .borrow_mut()
            .extend(v.into_iter().map(|m| format!("{prefix}.{m}")));
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIXTURE: &str = r#"
experiment = "mixture25"
repetitions = 2
seed = 7

[[samplers]]
name = "csgld"
base = "sgld"
samples_per_cycle = 10
[samplers.schedule]
kind = "cyclical_cosine"
alpha0 = 0.09
num_cycles = 30
total_iters = 50000
beta = 0.25

[[samplers]]
name = "sgld"
base = "sgld"
[samplers.schedule]
kind = "polynomial_decay"
decay_a = 0.05
decay_gamma = 0.55
total_iters = 50000
"#;

    fn parse(text: &str) -> std::result::Result<ExperimentConfig, Vec<String>> {
        from_table(&parse_toml(text, "test").unwrap())
    }

    #[test]
    fn valid_mixture_config() {
        let c = parse(MIXTURE).unwrap();
        assert_eq!(c.experiment, ExperimentKind::Mixture25);
        assert_eq!(c.samplers.len(), 2);
        assert_eq!(
            c.samplers[0].plan(),
            ChainPlan::Cyclical {
                samples_per_cycle: 10
            }
        );
        assert_eq!(
            c.samplers[1].plan(),
            ChainPlan::Plain {
                burn_in: 0,
                keep: 50_000
            }
        );
        assert_eq!(c.init, vec![vec![0.0, 0.0]]);
        assert_eq!(c.coverage.min_count, 100);
    }

    #[test]
    fn missing_alpha0_is_one_violation() {
        let text = MIXTURE.replacen("alpha0 = 0.09\n", "", 1);
        let errs = parse(&text).unwrap_err();
        assert_eq!(
            errs,
            vec!["samplers[0].schedule.alpha0: missing required field".to_string()]
        );
    }

    #[test]
    fn every_violation_is_reported() {
        let text = MIXTURE
            .replace("beta = 0.25", "beta = 1.5")
            .replace("decay_gamma = 0.55", "decay_gamma = 0.3");
        let errs = parse(&text).unwrap_err();
        assert_eq!(errs.len(), 2, "{errs:?}");
        assert!(errs[0].starts_with("samplers[0].schedule.beta") && errs[0].contains("[0, 1)"));
        assert!(errs[1].starts_with("samplers[1].schedule.decay_gamma"));
    }

    #[test]
    fn unknown_fields_and_experiments() {
        let errs = parse("experiment = \"nope\"\nbogus = 1\n").unwrap_err();
        assert_eq!(errs.len(), 2, "{errs:?}");
        let errs = parse(&MIXTURE.replace("seed = 7", "seed = 7\nsed = 8")).unwrap_err();
        assert_eq!(errs, vec!["sed: unknown field".to_string()]);
    }

    #[test]
    fn overrides_last_wins_and_named_entries() {
        let mut raw = parse_toml(MIXTURE, "test").unwrap();
        apply_overrides(
            &mut raw,
            &[
                "samplers.csgld.schedule.alpha0=0.5".into(),
                "samplers.csgld.schedule.alpha0=0.2".into(),
                "samplers.1.name=plain".into(),
                "repetitions=3".into(),
            ],
        )
        .unwrap();
        let c = from_table(&raw).unwrap();
        assert_eq!(c.samplers[0].config.schedule.initial_stepsize(), 0.2);
        assert_eq!(c.samplers[1].name, "plain");
        assert_eq!(c.repetitions, 3);
        assert!(apply_overrides(&mut raw, &["samplers.missing.base=sgld".into()]).is_err());
        assert!(apply_overrides(&mut raw, &["noequals".into()]).is_err());
    }

    #[test]
    fn blr_requires_data_or_fallback() {
        let text = r#"
experiment = "blr_ess"
[target]
dataset = "australian"
path = "/definitely/not/here.csv"
[[samplers]]
name = "sgld"
base = "sgld"
burn_in = 5000
keep = 5000
minibatch_size = 50
[samplers.schedule]
kind = "polynomial_decay"
decay_a = 1.2
decay_gamma = 0.55
total_iters = 10000
"#;
        let errs = parse(text).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(
            errs[0].contains("/definitely/not/here.csv") && errs[0].contains("synthetic_fallback")
        );
        let ok = parse(&text.replace("[target]", "[target]\nsynthetic_fallback = true")).unwrap();
        assert_eq!(
            ok.samplers[0].plan(),
            ChainPlan::Plain {
                burn_in: 5000,
                keep: 5000
            }
        );
    }
}
