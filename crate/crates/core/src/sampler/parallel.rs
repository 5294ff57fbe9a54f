use rayon::prelude::*;

use super::driver::{run_cyclical, run_plain, ChainFailure, ChainRun};
use super::SamplerConfig;
use crate::error::Error;
use crate::model::TargetModel;

/// Per-chain seed: a SplitMix64 finalizer over the master seed and chain index.
///
/// The mapping is part of the output format: changing it changes every
/// multi-chain result.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainPlan {
    Cyclical { samples_per_cycle: u64 },
    Plain { burn_in: u64, keep: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Concurrent,
}

fn run_chain<T: TargetModel + ?Sized>(
    target: &T,
    cfg: &SamplerConfig,
    init: &[f64],
    plan: ChainPlan,
) -> Result<ChainRun, ChainFailure> {
    match plan {
        ChainPlan::Cyclical { samples_per_cycle } => {
            run_cyclical(target, cfg, init, samples_per_cycle)
        }
        ChainPlan::Plain { burn_in, keep } => run_plain(target, cfg, init, burn_in, keep),
    }
}

/// Independent chains, one per initial point, each seeded with
/// `derive_seed(cfg.seed, index)` and run for `per_chain_budget` iterations.
///
/// The output depends only on the arguments, never on `execution`; a failed
/// chain is reported in its slot without stopping the others.
pub fn run_parallel<T: TargetModel + ?Sized>(
    target: &T,
    cfg: &SamplerConfig,
    inits: &[Vec<f64>],
    plan: ChainPlan,
    per_chain_budget: u64,
    execution: Execution,
) -> Vec<Result<ChainRun, ChainFailure>> {
    if inits.is_empty() {
        return vec![Err(Error::InvalidArgument(
            "run_parallel needs at least one initial point".into(),
        )
        .into())];
    }
    let chain_cfg = |i: usize| {
        let mut c = cfg.clone();
        c.seed = derive_seed(cfg.seed, i as u64);
        c.schedule = c.schedule.with_total_iters(per_chain_budget);
        c
    };
    match execution {
        Execution::Sequential => inits
            .iter()
            .enumerate()
            .map(|(i, init)| run_chain(target, &chain_cfg(i), init, plan))
            .collect(),
        Execution::Concurrent => inits
            .par_iter()
            .enumerate()
            .map(|(i, init)| run_chain(target, &chain_cfg(i), init, plan))
            .collect(),
    }
}
