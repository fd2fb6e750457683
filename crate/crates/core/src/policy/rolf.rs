use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{argmax, Algorithm, Policy, PolicyConfig, StepOutcome};
use crate::dr::{resample_couple, CouplingParams, DrLassoEstimator, DrRidgeEstimator};
use crate::error::{Error, Result};
use crate::linalg::{augment_observed, AugmentedFeatureSet};
use crate::rng::SimRng;

/// Multiplier applied to the exploration constant `C_e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExplorationScale {
    /// Chosen so the ledger closes after roughly `min(10 K ln K, T / 4)` rounds.
    Auto,
    Fixed(f64),
}

/// `C_e` for the Lasso variant: `(8K)^3 σ̃_min^{-2} σ̃_max^2 (1 - p)^{-2}`.
pub fn lasso_exploration_constant(arms: usize, sigma_min_sq: f64, sigma_max_sq: f64, p: f64) -> f64 {
    (8.0 * arms as f64).powi(3) * sigma_max_sq / sigma_min_sq / (1.0 - p).powi(2)
}

/// `C_e` for the ridge variants: `32 (1 - p)^{-2} D^2`.
pub fn ridge_exploration_constant(dim: usize, p: f64) -> f64 {
    32.0 * (dim as f64).powi(2) / (1.0 - p).powi(2)
}

/// Alias kept for callers that want a single entry point.
pub fn exploration_constant(
    algorithm: Algorithm,
    features: &AugmentedFeatureSet,
    p: f64,
) -> f64 {
    match algorithm {
        Algorithm::RolfLasso => lasso_exploration_constant(
            features.arms(),
            features.sigma_min_sq(),
            features.sigma_max_sq(),
            p,
        ),
        _ => ridge_exploration_constant(features.dim(), p),
    }
}

/// Forced-exploration ledger. Round `t` explores while
/// `|E_{t-1}| <= scale * C_e * log(2 K t^2 / δ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationGate {
    c_e: f64,
    scale: f64,
    arms: usize,
    delta: f64,
    ledger: usize,
}

impl ExplorationGate {
    pub fn new(c_e: f64, scale: ExplorationScale, arms: usize, delta: f64, horizon: usize) -> Result<Self> {
        if !(c_e > 0.0 && c_e.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "exploration constant must be positive and finite, got {c_e}"
            )));
        }
        let log_at = |t: f64| (2.0 * arms as f64 * t * t / delta).ln();
        let scale = match scale {
            ExplorationScale::Fixed(s) if s > 0.0 => s,
            ExplorationScale::Fixed(s) => {
                return Err(Error::InvalidParameter(format!(
                    "exploration scale must be positive, got {s}"
                )))
            }
            ExplorationScale::Auto => {
                let k = arms as f64;
                let target = (10.0 * k * k.ln()).min(horizon as f64 / 4.0).max(1.0);
                target / (c_e * log_at(target))
            }
        };
        Ok(Self {
            c_e,
            scale,
            arms,
            delta,
            ledger: 0,
        })
    }

    pub fn threshold(&self, t: usize) -> f64 {
        let t = t as f64;
        self.scale * self.c_e * (2.0 * self.arms as f64 * t * t / self.delta).ln()
    }

    pub fn is_open(&self, t: usize) -> bool {
        self.ledger as f64 <= self.threshold(t)
    }

    fn admit(&mut self) {
        self.ledger += 1;
    }

    pub fn ledger(&self) -> usize {
        self.ledger
    }

    pub fn c_e(&self) -> f64 {
        self.c_e
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

#[derive(Debug, Clone)]
pub enum RolfEstimator {
    Lasso(DrLassoEstimator),
    Ridge(DrRidgeEstimator),
}

impl RolfEstimator {
    pub fn main_mu(&self) -> &DVector<f64> {
        match self {
            RolfEstimator::Lasso(e) => e.main_mu(),
            RolfEstimator::Ridge(e) => e.main_mu(),
        }
    }

    pub fn imputation_mu(&self) -> &DVector<f64> {
        match self {
            RolfEstimator::Lasso(e) => e.imputation_mu(),
            RolfEstimator::Ridge(e) => e.imputation_mu(),
        }
    }
}

/// RoLF on a fixed arm set with either DR estimator.
#[derive(Debug, Clone)]
pub struct Rolf {
    features: AugmentedFeatureSet,
    estimator: RolfEstimator,
    gate: ExplorationGate,
    coupling: CouplingParams,
    rng: SimRng,
    last_t: usize,
    updates: usize,
}

impl Rolf {
    /// Reduces, augments and wraps the observed features with the DR Lasso.
    pub fn lasso(x: &DMatrix<f64>, cfg: &PolicyConfig, rng: SimRng) -> Result<Self> {
        let (_, _, features) = augment_observed(x)?;
        let c_e = exploration_constant(Algorithm::RolfLasso, &features, cfg.p);
        let gate = ExplorationGate::new(c_e, cfg.exploration, features.arms(), cfg.delta, cfg.horizon)?;
        let estimator = RolfEstimator::Lasso(DrLassoEstimator::new(features.clone(), cfg.dr_settings()?));
        Self::from_parts(features, estimator, gate, CouplingParams::new(cfg.p, cfg.delta_prime)?, rng)
    }

    pub fn ridge(x: &DMatrix<f64>, cfg: &PolicyConfig, rng: SimRng) -> Result<Self> {
        let (_, _, features) = augment_observed(x)?;
        let c_e = exploration_constant(Algorithm::RolfRidge, &features, cfg.p);
        let gate = ExplorationGate::new(c_e, cfg.exploration, features.arms(), cfg.delta, cfg.horizon)?;
        let estimator = RolfEstimator::Ridge(DrRidgeEstimator::new(features.dim(), cfg.p)?);
        Self::from_parts(features, estimator, gate, CouplingParams::new(cfg.p, cfg.delta_prime)?, rng)
    }

    pub fn from_parts(
        features: AugmentedFeatureSet,
        estimator: RolfEstimator,
        gate: ExplorationGate,
        coupling: CouplingParams,
        rng: SimRng,
    ) -> Result<Self> {
        if estimator.main_mu().len() != features.dim() {
            return Err(Error::Dimension("estimator and features disagree".into()));
        }
        Ok(Self {
            features,
            estimator,
            gate,
            coupling,
            rng,
            last_t: 0,
            updates: 0,
        })
    }

    pub fn features(&self) -> &AugmentedFeatureSet {
        &self.features
    }

    pub fn estimator(&self) -> &RolfEstimator {
        &self.estimator
    }

    pub fn gate(&self) -> &ExplorationGate {
        &self.gate
    }

    /// Number of rounds on which the estimators were updated.
    pub fn updates(&self) -> usize {
        self.updates
    }

    /// Arm the greedy rule would pick now.
    pub fn greedy_arm(&self) -> usize {
        argmax(&self.features.values(self.estimator.main_mu()))
    }
}

impl Policy for Rolf {
    fn algorithm(&self) -> Algorithm {
        match self.estimator {
            RolfEstimator::Lasso(_) => Algorithm::RolfLasso,
            RolfEstimator::Ridge(_) => Algorithm::RolfRidge,
        }
    }

    fn step(
        &mut self,
        t: usize,
        _observed: &DMatrix<f64>,
        pull: &mut dyn FnMut(usize) -> f64,
    ) -> Result<StepOutcome> {
        debug_assert!(t > self.last_t, "rounds must increase");
        self.last_t = t;
        let arms = self.features.arms();
        let explored = self.gate.is_open(t);
        let candidate = if explored {
            self.gate.admit();
            self.rng.random_range(0..arms)
        } else {
            self.greedy_arm()
        };
        let c = resample_couple(candidate, t, arms, &self.coupling, &mut self.rng);
        let reward = pull(c.played);
        match &mut self.estimator {
            RolfEstimator::Lasso(est) => {
                est.record_play(c.played, reward);
                if c.matched {
                    est.update_matched(t, c.played, reward)?;
                }
            }
            RolfEstimator::Ridge(est) => {
                est.record_play(&self.features.arm(c.played), reward);
                if c.matched {
                    est.update_matched(self.features.matrix(), c.played, reward)?;
                }
            }
        }
        self.updates += usize::from(c.matched);
        Ok(StepOutcome {
            arm: c.played,
            reward,
            explored,
            matched: c.matched,
            attempts: c.attempts,
        })
    }
}

/// Ridge RoLF for observed features that change every round. Each arm's
/// feature is its observed vector followed by its standard basis indicator,
/// so the last `K` coefficients absorb the per-arm latent bias.
#[derive(Debug, Clone)]
pub struct RolfV {
    arms: usize,
    observed_dim: usize,
    estimator: DrRidgeEstimator,
    gate: ExplorationGate,
    coupling: CouplingParams,
    rng: SimRng,
    last_t: usize,
    updates: usize,
}

impl RolfV {
    pub fn new(observed_dim: usize, arms: usize, cfg: &PolicyConfig, rng: SimRng) -> Result<Self> {
        let dim = observed_dim + arms;
        let c_e = ridge_exploration_constant(dim, cfg.p);
        Ok(Self {
            arms,
            observed_dim,
            estimator: DrRidgeEstimator::new(dim, cfg.p)?,
            gate: ExplorationGate::new(c_e, cfg.exploration, arms, cfg.delta, cfg.horizon)?,
            coupling: CouplingParams::new(cfg.p, cfg.delta_prime)?,
            rng,
            last_t: 0,
            updates: 0,
        })
    }

    pub fn estimator(&self) -> &DrRidgeEstimator {
        &self.estimator
    }

    pub fn gate(&self) -> &ExplorationGate {
        &self.gate
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    /// Per-arm bias coefficients (the indicator block of the main estimate).
    pub fn bias_estimate(&self) -> DVector<f64> {
        self.estimator
            .main_mu()
            .rows(self.observed_dim, self.arms)
            .into_owned()
    }
}

impl Policy for RolfV {
    fn algorithm(&self) -> Algorithm {
        Algorithm::RolfV
    }

    fn step(
        &mut self,
        t: usize,
        observed: &DMatrix<f64>,
        pull: &mut dyn FnMut(usize) -> f64,
    ) -> Result<StepOutcome> {
        debug_assert!(t > self.last_t, "rounds must increase");
        self.last_t = t;
        if observed.shape() != (self.observed_dim, self.arms) {
            return Err(Error::Dimension(format!(
                "expected {}x{} observed features, got {:?}",
                self.observed_dim,
                self.arms,
                observed.shape()
            )));
        }
        let features = AugmentedFeatureSet::with_indicators(observed);
        let explored = self.gate.is_open(t);
        let candidate = if explored {
            self.gate.admit();
            self.rng.random_range(0..self.arms)
        } else {
            argmax(&features.values(self.estimator.main_mu()))
        };
        let c = resample_couple(candidate, t, self.arms, &self.coupling, &mut self.rng);
        let reward = pull(c.played);
        self.estimator.record_play(&features.arm(c.played), reward);
        if c.matched {
            self.estimator
                .update_matched(features.matrix(), c.played, reward)?;
            self.updates += 1;
        }
        Ok(StepOutcome {
            arm: c.played,
            reward,
            explored,
            matched: c.matched,
            attempts: c.attempts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{lower_bound_instance_thm1, sample_reward};
    use crate::rng;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exploration_constants() {
        assert_abs_diff_eq!(lasso_exploration_constant(2, 1.0, 5.0, 0.6), 128_000.0, epsilon = 1e-6);
        assert_abs_diff_eq!(ridge_exploration_constant(30, 0.6), 180_000.0, epsilon = 1e-6);
    }

    #[test]
    fn gate_open_on_first_round() {
        let gate = ExplorationGate::new(10.0, ExplorationScale::Fixed(1.0), 4, 1e-4, 100).unwrap();
        assert!(gate.is_open(1));
        assert_abs_diff_eq!(gate.threshold(1), 10.0 * (8.0f64 / 1e-4).ln(), epsilon = 1e-9);
    }

    #[test]
    fn auto_gate_closes_near_target() {
        let mut gate = ExplorationGate::new(128_000.0, ExplorationScale::Auto, 30, 1e-4, 1200).unwrap();
        let mut t = 1;
        while gate.is_open(t) {
            gate.admit();
            t += 1;
        }
        // target = min(10 * 30 * ln 30, 1200 / 4) = 300
        assert!((295..=305).contains(&gate.ledger()), "ledger {}", gate.ledger());
    }

    #[test]
    fn ledger_bounded_by_threshold() {
        let inst = lower_bound_instance_thm1();
        let mut cfg = PolicyConfig::new(500);
        cfg.sigma = 1.0;
        let mut policy = Rolf::lasso(&inst.x(), &cfg, rng::from_seed(4)).unwrap();
        let mut env = rng::from_seed(5);
        let x = inst.x();
        let mut prev = 0;
        for t in 1..=500 {
            policy.step(t, &x, &mut |a| sample_reward(&inst, a, &mut env)).unwrap();
            let ledger = policy.gate().ledger();
            assert!(ledger >= prev);
            assert!(ledger as f64 <= policy.gate().threshold(t) + 1.0);
            prev = ledger;
        }
    }

    #[test]
    fn unmatched_rounds_leave_estimates_alone() {
        let inst = lower_bound_instance_thm1();
        let cfg = PolicyConfig::new(300);
        for ridge in [false, true] {
            let mut policy = if ridge {
                Rolf::ridge(&inst.x(), &cfg, rng::from_seed(8)).unwrap()
            } else {
                Rolf::lasso(&inst.x(), &cfg, rng::from_seed(8)).unwrap()
            };
            let mut env = rng::from_seed(9);
            let x = inst.x();
            let mut matched = 0;
            for t in 1..=300 {
                let before = policy.estimator().main_mu().clone();
                let out = policy.step(t, &x, &mut |a| sample_reward(&inst, a, &mut env)).unwrap();
                if out.matched {
                    matched += 1;
                } else {
                    assert_eq!(policy.estimator().main_mu(), &before);
                }
            }
            assert_eq!(policy.updates(), matched);
        }
    }
}
