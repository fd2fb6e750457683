use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::env::{drifted_observed, noisy};
use crate::error::Result;
use crate::policy::{build_policy, Algorithm};
use crate::rng::{self, StreamKind};

/// One round of one run. Column order matches `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub t: usize,
    pub explored: bool,
    pub matched: bool,
    pub arm: usize,
    pub reward: f64,
    pub regret: f64,
    pub cumulative_regret: f64,
}

/// All rounds of one (algorithm, seed) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run_id: usize,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub records: Vec<RunRecord>,
}

impl RunResult {
    pub fn final_regret(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cumulative_regret)
    }
}

/// Runs every (algorithm, seed) pair in parallel. Results come back in
/// algorithm-major order; run ids follow the same order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize, u64)> = cfg
        .algorithms
        .iter()
        .enumerate()
        .flat_map(|(ai, _)| cfg.seeds.iter().map(move |&s| (ai, s)))
        .enumerate()
        .map(|(id, (ai, s))| (id, ai, s))
        .collect();
    jobs.par_iter()
        .map(|&(id, ai, seed)| run_single(cfg, id, ai, seed))
        .collect()
}

/// One run. Randomness comes from streams keyed by `(master_seed, seed)`
/// and the algorithm's position in the config, so results do not depend on
/// scheduling.
pub fn run_single(
    cfg: &ExperimentConfig,
    run_id: usize,
    algo_index: usize,
    seed: u64,
) -> Result<RunResult> {
    let algorithm = cfg.algorithms[algo_index];
    let mut instance = cfg.instance.build(seed)?;
    if let Some(s) = cfg.sigma {
        instance = instance.with_noise(s);
    }
    let pc = cfg.policy_config(instance.noise_sigma());
    let idx = algo_index as u64;
    let mut policy = build_policy(
        algorithm,
        &instance,
        &pc,
        rng::stream(cfg.master_seed, seed, StreamKind::Policy, idx),
    )?;
    let mut env_rng = rng::stream(cfg.master_seed, seed, StreamKind::Environment, idx);
    // Shared by all algorithms on this seed.
    let mut drift_rng = rng::stream(cfg.master_seed, seed, StreamKind::Drift, 0);

    let fixed_x = instance.x();
    let mut records = Vec::with_capacity(cfg.horizon);
    let mut cumulative = 0.0;
    for t in 1..=cfg.horizon {
        let (observed, means) = if cfg.time_varying {
            let x_t = drifted_observed(&instance, cfg.jitter, &mut drift_rng);
            let means = instance.expected_rewards_with_observed(&x_t);
            (x_t, means)
        } else {
            (fixed_x.clone(), instance.expected_rewards().clone())
        };
        let sigma = instance.noise_sigma();
        let out = policy.step(t, &observed, &mut |a| noisy(means[a], sigma, &mut env_rng))?;
        let regret = means.max() - means[out.arm];
        cumulative += regret;
        records.push(RunRecord {
            run_id,
            seed,
            algorithm,
            t,
            explored: out.explored,
            matched: out.matched,
            arm: out.arm,
            reward: out.reward,
            regret,
            cumulative_regret: cumulative,
        });
    }
    Ok(RunResult {
        run_id,
        algorithm,
        seed,
        records,
    })
}
