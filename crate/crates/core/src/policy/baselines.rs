//! Baselines that see only the observed features (or none at all).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{argmax, Algorithm, Policy, PolicyConfig, StepOutcome};
use crate::error::{Error, Result};
use crate::linalg::{solve_lasso_gram, LassoOptions};
use crate::rng::SimRng;

fn check_dim(observed: &DMatrix<f64>, dim: usize) -> Result<()> {
    if observed.nrows() != dim {
        return Err(Error::Dimension(format!(
            "policy expects {dim}-dim features, got {}",
            observed.nrows()
        )));
    }
    Ok(())
}

/// Ridge regression on observed features with an `alpha * ||x||_{V^{-1}}`
/// bonus. `V^{-1}` is maintained with Sherman-Morrison updates.
#[derive(Debug, Clone)]
pub struct LinUcb {
    v_inv: DMatrix<f64>,
    b: DVector<f64>,
    theta: DVector<f64>,
    alpha: f64,
}

impl LinUcb {
    pub fn new(dim: usize, lambda: f64, alpha: f64) -> Self {
        Self {
            v_inv: DMatrix::identity(dim, dim) / lambda,
            b: DVector::zeros(dim),
            theta: DVector::zeros(dim),
            alpha,
        }
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    /// Upper confidence score of every column of `observed`.
    pub fn scores(&self, observed: &DMatrix<f64>) -> DVector<f64> {
        let means = observed.tr_mul(&self.theta);
        let v_x = &self.v_inv * observed;
        DVector::from_fn(observed.ncols(), |a, _| {
            let width = observed.column(a).dot(&v_x.column(a)).max(0.0).sqrt();
            means[a] + self.alpha * width
        })
    }

    fn update(&mut self, x: &DVector<f64>, reward: f64) {
        let v_x = &self.v_inv * x;
        let denom = 1.0 + x.dot(&v_x);
        self.v_inv.ger(-1.0 / denom, &v_x, &v_x, 1.0);
        self.b.axpy(reward, x, 1.0);
        self.theta = &self.v_inv * &self.b;
    }
}

impl Policy for LinUcb {
    fn algorithm(&self) -> Algorithm {
        Algorithm::LinUcb
    }

    fn step(
        &mut self,
        _t: usize,
        observed: &DMatrix<f64>,
        pull: &mut dyn FnMut(usize) -> f64,
    ) -> Result<StepOutcome> {
        check_dim(observed, self.b.len())?;
        let arm = argmax(&self.scores(observed));
        let reward = pull(arm);
        self.update(&observed.column(arm).into_owned(), reward);
        Ok(StepOutcome {
            arm,
            reward,
            explored: false,
            matched: false,
            attempts: 1,
        })
    }
}

/// Thompson sampling with a Gaussian posterior `N(θ̂, v^2 V^{-1})` on the
/// observed features.
#[derive(Debug, Clone)]
pub struct LinTs {
    v: DMatrix<f64>,
    b: DVector<f64>,
    scale: f64,
    rng: SimRng,
}

impl LinTs {
    pub fn new(dim: usize, lambda: f64, scale: f64, rng: SimRng) -> Self {
        Self {
            v: DMatrix::identity(dim, dim) * lambda,
            b: DVector::zeros(dim),
            scale,
            rng,
        }
    }

    /// Ridge estimate `V^{-1} b`.
    pub fn theta_hat(&self) -> Result<DVector<f64>> {
        let chol = self
            .v
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Singular("LinTS design matrix".into()))?;
        Ok(chol.solve(&self.b))
    }

    /// One posterior draw.
    pub fn sample_theta(&mut self) -> Result<DVector<f64>> {
        let chol = self
            .v
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Singular("LinTS design matrix".into()))?;
        let mean = chol.solve(&self.b);
        let z = DVector::from_fn(self.b.len(), |_, _| StandardNormal.sample(&mut self.rng));
        // V = L L^T, so L^{-T} z has covariance V^{-1}.
        let noise = chol
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or_else(|| Error::Singular("LinTS Cholesky factor".into()))?;
        Ok(mean + noise * self.scale)
    }
}

impl Policy for LinTs {
    fn algorithm(&self) -> Algorithm {
        Algorithm::LinTs
    }

    fn step(
        &mut self,
        _t: usize,
        observed: &DMatrix<f64>,
        pull: &mut dyn FnMut(usize) -> f64,
    ) -> Result<StepOutcome> {
        check_dim(observed, self.b.len())?;
        let theta = self.sample_theta()?;
        let arm = argmax(&observed.tr_mul(&theta));
        let reward = pull(arm);
        let x = observed.column(arm).into_owned();
        self.v.ger(1.0, &x, &x, 1.0);
        self.b.axpy(reward, &x, 1.0);
        Ok(StepOutcome {
            arm,
            reward,
            explored: false,
            matched: false,
            attempts: 1,
        })
    }
}

/// Feature-free UCB: each arm once in index order, then
/// `mean + scale * sqrt(2 log(1/δ) / N_a)`.
#[derive(Debug, Clone)]
pub struct UcbDelta {
    counts: Vec<usize>,
    sums: Vec<f64>,
    scale: f64,
    delta: f64,
}

impl UcbDelta {
    pub fn new(arms: usize, scale: f64, delta: f64) -> Self {
        Self {
            counts: vec![0; arms],
            sums: vec![0.0; arms],
            scale,
            delta,
        }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    fn index(&self, a: usize) -> f64 {
        let n = self.counts[a] as f64;
        self.sums[a] / n + self.scale * (2.0 * (1.0 / self.delta).ln() / n).sqrt()
    }
}

impl Policy for UcbDelta {
    fn algorithm(&self) -> Algorithm {
        Algorithm::UcbDelta
    }

    fn step(
        &mut self,
        _t: usize,
        _observed: &DMatrix<f64>,
        pull: &mut dyn FnMut(usize) -> f64,
    ) -> Result<StepOutcome> {
        let unplayed = self.counts.iter().position(|&n| n == 0);
        let arm = match unplayed {
            Some(a) => a,
            None => {
                let idx = DVector::from_fn(self.counts.len(), |a, _| self.index(a));
                argmax(&idx)
            }
        };
        let reward = pull(arm);
        self.counts[arm] += 1;
        self.sums[arm] += reward;
        Ok(StepOutcome {
            arm,
            reward,
            explored: unplayed.is_some(),
            matched: false,
            attempts: 1,
        })
    }
}

/// Reference DR Lasso bandit on observed features. Each round regresses a
/// doubly robust pseudo-reward on the arm-averaged context; with fixed arms
/// that context never changes. Exploration draws a uniform arm with
/// probability `min(1, sqrt((ln t + ln d) / t))`.
#[derive(Debug, Clone)]
pub struct DrLassoBaseline {
    dim: usize,
    arms: usize,
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    beta: DVector<f64>,
    /// Penalty scale; the per-round weight is `scale * sqrt(t (ln t + ln d))`.
    penalty_scale: f64,
    lasso: LassoOptions,
    rng: SimRng,
}

impl DrLassoBaseline {
    pub fn new(dim: usize, arms: usize, cfg: &PolicyConfig, rng: SimRng) -> Self {
        Self {
            dim,
            arms,
            gram: DMatrix::zeros(dim, dim),
            xty: DVector::zeros(dim),
            beta: DVector::zeros(dim),
            penalty_scale: cfg.sigma,
            lasso: cfg.lasso,
            rng,
        }
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    fn explore_prob(&self, t: usize) -> f64 {
        let t = t as f64;
        ((t.ln() + (self.dim as f64).ln()) / t).sqrt().min(1.0)
    }
}

impl Policy for DrLassoBaseline {
    fn algorithm(&self) -> Algorithm {
        Algorithm::DrLasso
    }

    fn step(
        &mut self,
        t: usize,
        observed: &DMatrix<f64>,
        pull: &mut dyn FnMut(usize) -> f64,
    ) -> Result<StepOutcome> {
        check_dim(observed, self.dim)?;
        let eps = self.explore_prob(t);
        let greedy = argmax(&observed.tr_mul(&self.beta));
        let explored = self.rng.random::<f64>() < eps;
        let arm = if explored {
            self.rng.random_range(0..self.arms)
        } else {
            greedy
        };
        let uniform = eps / self.arms as f64;
        let prob = if arm == greedy { uniform + 1.0 - eps } else { uniform };
        let reward = pull(arm);

        let x_bar = observed.column_mean();
        let x_arm = observed.column(arm);
        let pseudo = x_bar.dot(&self.beta)
            + (reward - x_arm.dot(&self.beta)) / (self.arms as f64 * prob);
        self.gram.ger(1.0, &x_bar, &x_bar, 1.0);
        self.xty.axpy(pseudo, &x_bar, 1.0);
        let tf = t as f64;
        let lambda = self.penalty_scale * (tf * (tf.ln() + (self.dim as f64).ln())).sqrt();
        self.beta = solve_lasso_gram(&self.gram, &self.xty, lambda, self.lasso, Some(&self.beta))?.coef;
        Ok(StepOutcome {
            arm,
            reward,
            explored,
            matched: false,
            attempts: 1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{lower_bound_instance_thm1, lower_bound_instance_three_arm, sample_reward};
    use crate::rng;

    #[test]
    fn ucb_sweeps_arms_first() {
        let inst = lower_bound_instance_thm1();
        let mut ucb = UcbDelta::new(5, 1.0, 1e-4);
        let x = DMatrix::zeros(1, 5);
        for t in 1..=5 {
            let out = ucb.step(t, &x, &mut |a| a as f64).unwrap();
            assert_eq!(out.arm, t - 1);
            assert!(out.explored);
        }
        let out = ucb.step(6, &x, &mut |a| sample_reward(&inst, a % 2, &mut rng::from_seed(0))).unwrap();
        assert!(!out.explored);
    }

    #[test]
    fn greedy_linucb_locks_onto_wrong_arm() {
        let inst = lower_bound_instance_thm1().with_noise(0.0);
        let mut ucb = LinUcb::new(1, 1.0, 0.0);
        let x = inst.x();
        let mut env = rng::from_seed(0);
        // Seed the ridge fit with both arms so θ̂ reflects the misspecified fit.
        for arm in [0usize, 1] {
            let r = sample_reward(&inst, arm, &mut env);
            ucb.update(&x.column(arm).into_owned(), r);
        }
        let mut last = 0;
        for t in 1..=200 {
            last = ucb.step(t, &x, &mut |a| sample_reward(&inst, a, &mut env)).unwrap().arm;
        }
        assert!(ucb.theta()[0] < 0.0);
        assert_eq!(last, 0);
    }

    #[test]
    fn linucb_scores_identical_for_identical_observed() {
        let inst = lower_bound_instance_three_arm(4, 4).unwrap();
        let mut ucb = LinUcb::new(4, 1.0, 1.0);
        let x = inst.x();
        let mut env = rng::from_seed(1);
        for t in 1..=100 {
            let s = ucb.scores(&x);
            assert_eq!(s[0], s[1]);
            ucb.step(t, &x, &mut |a| sample_reward(&inst, a, &mut env)).unwrap();
        }
    }

    #[test]
    fn lints_posterior_draw_has_expected_spread() {
        let mut ts = LinTs::new(2, 1.0, 0.5, rng::from_seed(2));
        let n = 20_000;
        let draws: Vec<f64> = (0..n).map(|_| ts.sample_theta().unwrap()[0]).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.02);
        assert!((var - 0.25).abs() < 0.02);
    }

    #[test]
    fn baselines_reject_wrong_dimension() {
        let mut ucb = LinUcb::new(3, 1.0, 1.0);
        assert!(ucb.step(1, &DMatrix::zeros(2, 4), &mut |_| 0.0).is_err());
    }
}
