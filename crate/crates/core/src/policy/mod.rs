//! Decision policies, advanced one round at a time.
//!
//! Every policy sees the observed feature matrix of the current round and a
//! `pull` callback that plays an arm and returns its realized reward. The
//! RoLF variants work on augmented features built from the observed block;
//! the baselines use the observed block only (or no features at all).

mod baselines;
mod rolf;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dr::{DrSettings, RefitSchedule};
use crate::env::ProblemInstance;
use crate::error::{Error, Result};
use crate::linalg::LassoOptions;
use crate::rng::SimRng;

pub use baselines::{DrLassoBaseline, LinTs, LinUcb, UcbDelta};
pub use rolf::{exploration_constant, ExplorationGate, ExplorationScale, Rolf, RolfEstimator, RolfV};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "&'static str")]
pub enum Algorithm {
    RolfLasso,
    RolfRidge,
    RolfV,
    LinUcb,
    LinTs,
    UcbDelta,
    DrLasso,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::RolfLasso,
        Algorithm::RolfRidge,
        Algorithm::RolfV,
        Algorithm::LinUcb,
        Algorithm::LinTs,
        Algorithm::UcbDelta,
        Algorithm::DrLasso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::RolfLasso => "rolf_lasso",
            Algorithm::RolfRidge => "rolf_ridge",
            Algorithm::RolfV => "rolf_v",
            Algorithm::LinUcb => "linucb",
            Algorithm::LinTs => "lints",
            Algorithm::UcbDelta => "ucb_delta",
            Algorithm::DrLasso => "drlasso",
        }
    }

    /// True for policies that assume the observed features never change.
    pub fn needs_fixed_features(self) -> bool {
        matches!(
            self,
            Algorithm::RolfLasso | Algorithm::RolfRidge | Algorithm::DrLasso
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl TryFrom<String> for Algorithm {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Algorithm> for &'static str {
    fn from(a: Algorithm) -> Self {
        a.name()
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm '{s}'")))
    }
}

/// What happened in one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub arm: usize,
    pub reward: f64,
    /// Forced exploration (RoLF ledger round, UCB initialization sweep,
    /// DRLasso random draw).
    pub explored: bool,
    /// Pseudo-arm matched the played arm; always false for baselines.
    pub matched: bool,
    /// Resampling attempts; 1 for policies without coupling.
    pub attempts: usize,
}

pub trait Policy: Send {
    fn algorithm(&self) -> Algorithm;

    /// Plays round `t` (starting at 1, strictly increasing).
    fn step(
        &mut self,
        t: usize,
        observed: &DMatrix<f64>,
        pull: &mut dyn FnMut(usize) -> f64,
    ) -> Result<StepOutcome>;
}

/// Hyperparameters shared across policies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig {
    pub p: f64,
    pub delta: f64,
    pub delta_prime: f64,
    /// Noise level the policies assume.
    pub sigma: f64,
    pub horizon: usize,
    pub exploration: ExplorationScale,
    pub refit: RefitSchedule,
    pub lasso: LassoOptions,
    /// Multiplier on the RoLF-Lasso penalty schedule.
    pub penalty_scale: f64,
    /// LinUCB bonus multiplier.
    pub linucb_alpha: f64,
    /// LinTS posterior scale; `None` uses `sigma`.
    pub lints_scale: Option<f64>,
    /// Baseline ridge regularizer.
    pub ridge_lambda: f64,
}

impl PolicyConfig {
    pub fn new(horizon: usize) -> Self {
        Self {
            p: 0.6,
            delta: 1e-4,
            delta_prime: 1e-4,
            sigma: 0.05,
            horizon,
            exploration: ExplorationScale::Auto,
            refit: RefitSchedule::default(),
            lasso: LassoOptions::default(),
            penalty_scale: 1.0,
            linucb_alpha: 1.0,
            lints_scale: None,
            ridge_lambda: 1.0,
        }
    }

    pub fn dr_settings(&self) -> Result<DrSettings> {
        let mut s = DrSettings::new(self.p, self.delta, self.sigma)?;
        s.refit = self.refit;
        s.lasso = self.lasso;
        s.penalty_scale = self.penalty_scale;
        Ok(s)
    }
}

/// Builds a policy for `instance`. Only the observed block of the instance is
/// read.
pub fn build_policy(
    algorithm: Algorithm,
    instance: &ProblemInstance,
    cfg: &PolicyConfig,
    rng: SimRng,
) -> Result<Box<dyn Policy>> {
    let x = instance.x();
    Ok(match algorithm {
        Algorithm::RolfLasso => Box::new(Rolf::lasso(&x, cfg, rng)?),
        Algorithm::RolfRidge => Box::new(Rolf::ridge(&x, cfg, rng)?),
        Algorithm::RolfV => Box::new(RolfV::new(x.nrows(), x.ncols(), cfg, rng)?),
        Algorithm::LinUcb => Box::new(LinUcb::new(x.nrows(), cfg.ridge_lambda, cfg.linucb_alpha)),
        Algorithm::LinTs => Box::new(LinTs::new(
            x.nrows(),
            cfg.ridge_lambda,
            cfg.lints_scale.unwrap_or(cfg.sigma),
            rng,
        )),
        Algorithm::UcbDelta => Box::new(UcbDelta::new(x.ncols(), cfg.sigma, cfg.delta)),
        Algorithm::DrLasso => Box::new(DrLassoBaseline::new(x.nrows(), x.ncols(), cfg, rng)),
    })
}

/// Index of the largest score, lowest index on ties.
pub fn argmax(scores: &DVector<f64>) -> usize {
    crate::env::argmax(scores.as_slice())
}

/// Prefix sums of `best - expected[arm_t]`.
pub fn cumulative_regret(arms: &[usize], instance: &ProblemInstance) -> Vec<f64> {
    let best = instance.optimal_reward();
    let rewards = instance.expected_rewards();
    arms.iter()
        .scan(0.0, |acc, &a| {
            *acc += best - rewards[a];
            Some(*acc)
        })
        .collect()
}
