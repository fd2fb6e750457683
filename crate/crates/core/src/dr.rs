//! Doubly robust estimation with resampling and coupling.
//!
//! Each round the played arm `a_t` and a pseudo-arm `ã_t` are redrawn together
//! until they agree (or a per-round cap is hit). On agreement every arm gets
//! a pseudo-reward: the imputation model's prediction, plus an inverse
//! probability correction on the played arm. The main estimator then
//! regresses all `K` pseudo-rewards on all `K` augmented features, so its
//! Gram matrix is a multiple of the all-arms Gram regardless of which arms
//! were played.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{solve_lasso_gram, AugmentedFeatureSet, LassoOptions, RidgeAccumulator};

/// Coupling probability `p` and the resampling confidence `δ'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    p: f64,
    delta_prime: f64,
}

impl CouplingParams {
    pub fn new(p: f64, delta_prime: f64) -> Result<Self> {
        check_p(p)?;
        if !(delta_prime > 0.0 && delta_prime < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta' must lie in (0, 1), got {delta_prime}"
            )));
        }
        Ok(Self { p, delta_prime })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn delta_prime(&self) -> f64 {
        self.delta_prime
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.5 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "coupling probability must lie in (1/2, 1), got {p}"
        )))
    }
}

/// Pseudo-arm distribution given the played arm: `p` on `chosen`, the rest
/// spread evenly.
pub fn pseudo_action_probs(chosen: usize, arms: usize, p: f64) -> Result<Vec<f64>> {
    check_p(p)?;
    if arms < 2 || chosen >= arms {
        return Err(Error::InvalidParameter(format!(
            "arm {chosen} out of range for {arms} arms"
        )));
    }
    let other = (1.0 - p) / (arms - 1) as f64;
    let mut probs = vec![other; arms];
    probs[chosen] = p;
    Ok(probs)
}

/// Maximum number of resampling attempts at round `t`:
/// `ceil(log((t + 1)^2 / δ') / log(1 / (1 - p)))`.
pub fn rho_cap(t: usize, params: &CouplingParams) -> usize {
    let t1 = (t + 1) as f64;
    let ratio = (t1 * t1 / params.delta_prime).ln() / (1.0 / (1.0 - params.p)).ln();
    ratio.ceil().max(1.0) as usize
}

/// Result of the resampling loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coupling {
    /// Arm to play (from the last attempt).
    pub played: usize,
    pub pseudo: usize,
    pub matched: bool,
    pub attempts: usize,
}

fn uniform_other<R: Rng + ?Sized>(excluded: usize, arms: usize, rng: &mut R) -> usize {
    let j = rng.random_range(0..arms - 1);
    if j >= excluded {
        j + 1
    } else {
        j
    }
}

/// Draws an arm that equals `a_hat` with probability `1 - t^{-1/2}` and is
/// otherwise uniform over the remaining arms.
pub fn sample_played<R: Rng + ?Sized>(a_hat: usize, t: usize, arms: usize, rng: &mut R) -> usize {
    let keep = 1.0 - (t as f64).powf(-0.5);
    if rng.random::<f64>() < keep {
        a_hat
    } else {
        uniform_other(a_hat, arms, rng)
    }
}

/// Draws a pseudo-arm from [`pseudo_action_probs`].
pub fn sample_pseudo<R: Rng + ?Sized>(played: usize, arms: usize, p: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < p {
        played
    } else {
        uniform_other(played, arms, rng)
    }
}

/// Redraws `(a_t, ã_t)` until they agree, at most `rho_cap(t)` times.
pub fn resample_couple<R: Rng + ?Sized>(
    a_hat: usize,
    t: usize,
    arms: usize,
    params: &CouplingParams,
    rng: &mut R,
) -> Coupling {
    let cap = rho_cap(t, params);
    let mut attempts = 0;
    loop {
        attempts += 1;
        let played = sample_played(a_hat, t, arms, rng);
        let pseudo = sample_pseudo(played, arms, params.p, rng);
        if played == pseudo || attempts >= cap {
            return Coupling {
                played,
                pseudo,
                matched: played == pseudo,
                attempts,
            };
        }
    }
}

/// Pseudo-rewards with an explicit selection probability `phi` for `a_tilde`.
pub fn pseudo_rewards_weighted(
    features: &DMatrix<f64>,
    mu_check: &DVector<f64>,
    a_tilde: usize,
    y_observed: f64,
    phi: f64,
) -> DVector<f64> {
    let mut y = features * mu_check;
    let predicted = y[a_tilde];
    y[a_tilde] = predicted + (y_observed - predicted) / phi;
    y
}

/// Pseudo-rewards on a matched round, where the pseudo-arm's probability is `p`.
pub fn pseudo_rewards(
    features: &AugmentedFeatureSet,
    mu_check: &DVector<f64>,
    a_tilde: usize,
    y_observed: f64,
    p: f64,
) -> DVector<f64> {
    pseudo_rewards_weighted(features.matrix(), mu_check, a_tilde, y_observed, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyKind {
    Imputation,
    Main,
}

/// Lasso penalty weights for the sum-of-squares objectives.
///
/// Imputation: `2 σ̃_max σ sqrt(2 p t log(2 K t^2 / δ))`.
/// Main: `(4 σ σ̃_max / p) sqrt(2 t log(2 K t^2 / δ))`.
pub fn lasso_penalty(
    t: usize,
    arms: usize,
    p: f64,
    delta: f64,
    sigma: f64,
    sigma_max_sq: f64,
    kind: PenaltyKind,
) -> f64 {
    let t = t as f64;
    let log_term = (2.0 * arms as f64 * t * t / delta).ln();
    let sigma_max = sigma_max_sq.sqrt();
    match kind {
        PenaltyKind::Imputation => 2.0 * sigma_max * sigma * (2.0 * p * t * log_term).sqrt(),
        PenaltyKind::Main => 4.0 * sigma * sigma_max / p * (2.0 * t * log_term).sqrt(),
    }
}

/// When to re-solve the Lasso problems. Sufficient statistics are updated on
/// every matched round either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefitSchedule {
    EveryMatched,
    /// Refit on every matched round up to `dense_until`, afterwards whenever
    /// at least `ceil(t / per_horizon)` rounds passed since the last refit.
    Sparse {
        dense_until: usize,
        per_horizon: usize,
    },
}

impl Default for RefitSchedule {
    fn default() -> Self {
        RefitSchedule::Sparse {
            dense_until: 200,
            per_horizon: 100,
        }
    }
}

impl RefitSchedule {
    pub fn due(&self, t: usize, last_refit: Option<usize>) -> bool {
        match (*self, last_refit) {
            (RefitSchedule::EveryMatched, _) | (_, None) => true,
            (
                RefitSchedule::Sparse {
                    dense_until,
                    per_horizon,
                },
                Some(last),
            ) => t <= dense_until || t - last >= t.div_ceil(per_horizon.max(1)),
        }
    }
}

/// Parameters shared by the DR estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrSettings {
    pub p: f64,
    pub delta: f64,
    /// Noise level used in the penalty schedule.
    pub sigma: f64,
    pub refit: RefitSchedule,
    pub lasso: LassoOptions,
    /// Multiplier on both Lasso penalties; 1 keeps the theoretical schedule.
    pub penalty_scale: f64,
}

impl DrSettings {
    pub fn new(p: f64, delta: f64, sigma: f64) -> Result<Self> {
        check_p(p)?;
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        Ok(Self {
            p,
            delta,
            sigma,
            refit: RefitSchedule::default(),
            lasso: LassoOptions::default(),
            penalty_scale: 1.0,
        })
    }
}

/// Imputation Lasso on played arms plus the DR Lasso on pseudo-rewards, for a
/// fixed augmented feature set.
#[derive(Debug, Clone)]
pub struct DrLassoEstimator {
    features: AugmentedFeatureSet,
    settings: DrSettings,
    imputation_gram: DMatrix<f64>,
    imputation_xty: DVector<f64>,
    imputation_mu: DVector<f64>,
    main_xty: DVector<f64>,
    main_mu: DVector<f64>,
    plays: usize,
    matched: usize,
    last_refit: Option<usize>,
    unconverged_solves: usize,
}

impl DrLassoEstimator {
    pub fn new(features: AugmentedFeatureSet, settings: DrSettings) -> Self {
        let dim = features.dim();
        Self {
            features,
            settings,
            imputation_gram: DMatrix::zeros(dim, dim),
            imputation_xty: DVector::zeros(dim),
            imputation_mu: DVector::zeros(dim),
            main_xty: DVector::zeros(dim),
            main_mu: DVector::zeros(dim),
            plays: 0,
            matched: 0,
            last_refit: None,
            unconverged_solves: 0,
        }
    }

    /// Adds a played `(arm, reward)` pair to the imputation history.
    pub fn record_play(&mut self, arm: usize, reward: f64) {
        let x = self.features.arm(arm);
        self.imputation_gram.ger(1.0, &x, &x, 1.0);
        self.imputation_xty.axpy(reward, &x, 1.0);
        self.plays += 1;
    }

    /// Matched-round update: refresh the imputation fit, build pseudo-rewards
    /// for every arm and refit the main estimator.
    pub fn update_matched(&mut self, t: usize, arm: usize, reward: f64) -> Result<()> {
        let s = self.settings;
        let arms = self.features.arms();
        let refit = s.refit.due(t, self.last_refit);
        if refit {
            let lambda = lasso_penalty(
                t,
                arms,
                s.p,
                s.delta,
                s.sigma,
                self.features.sigma_max_sq(),
                PenaltyKind::Imputation,
            ) * s.penalty_scale;
            let fit = solve_lasso_gram(
                &self.imputation_gram,
                &self.imputation_xty,
                lambda,
                s.lasso,
                Some(&self.imputation_mu),
            )?;
            self.unconverged_solves += usize::from(!fit.converged);
            self.imputation_mu = fit.coef;
        }
        let pseudo = pseudo_rewards(&self.features, &self.imputation_mu, arm, reward, s.p);
        self.main_xty
            .gemv_tr(1.0, self.features.matrix(), &pseudo, 1.0);
        self.matched += 1;
        if refit {
            let lambda = lasso_penalty(
                t,
                arms,
                s.p,
                s.delta,
                s.sigma,
                self.features.sigma_max_sq(),
                PenaltyKind::Main,
            ) * s.penalty_scale;
            let gram = self.main_gram();
            let fit = solve_lasso_gram(&gram, &self.main_xty, lambda, s.lasso, Some(&self.main_mu))?;
            self.unconverged_solves += usize::from(!fit.converged);
            self.main_mu = fit.coef;
            self.last_refit = Some(t);
        }
        Ok(())
    }

    /// `matched * sum_a x_a x_a^T`.
    pub fn main_gram(&self) -> DMatrix<f64> {
        self.features.gram() * self.matched as f64
    }

    pub fn imputation_gram(&self) -> &DMatrix<f64> {
        &self.imputation_gram
    }

    pub fn main_xty(&self) -> &DVector<f64> {
        &self.main_xty
    }

    pub fn imputation_mu(&self) -> &DVector<f64> {
        &self.imputation_mu
    }

    pub fn main_mu(&self) -> &DVector<f64> {
        &self.main_mu
    }

    pub fn matched_rounds(&self) -> usize {
        self.matched
    }

    pub fn plays(&self) -> usize {
        self.plays
    }

    pub fn features(&self) -> &AugmentedFeatureSet {
        &self.features
    }

    /// Number of Lasso solves that stopped at the sweep limit.
    pub fn unconverged_solves(&self) -> usize {
        self.unconverged_solves
    }
}

/// Ridge counterparts: imputation `(Σ x x^T + p I)^{-1} Σ x y` over played
/// arms, main `(Σ_matched Σ_a x_a x_a^T + I)^{-1} Σ_matched Σ_a x_a ỹ_a`.
///
/// Features are passed per call so the same estimator serves time-varying
/// feature sets.
#[derive(Debug, Clone)]
pub struct DrRidgeEstimator {
    p: f64,
    imputation: RidgeAccumulator,
    main: RidgeAccumulator,
    imputation_mu: DVector<f64>,
    main_mu: DVector<f64>,
    matched: usize,
}

impl DrRidgeEstimator {
    pub fn new(dim: usize, p: f64) -> Result<Self> {
        check_p(p)?;
        Ok(Self {
            p,
            imputation: RidgeAccumulator::new(dim, p),
            main: RidgeAccumulator::new(dim, 1.0),
            imputation_mu: DVector::zeros(dim),
            main_mu: DVector::zeros(dim),
            matched: 0,
        })
    }

    pub fn record_play(&mut self, feature: &DVector<f64>, reward: f64) {
        self.imputation.update(feature, reward, 1.0);
    }

    /// `features` holds one row per arm for the current round.
    pub fn update_matched(&mut self, features: &DMatrix<f64>, arm: usize, reward: f64) -> Result<()> {
        self.imputation_mu = self.imputation.solve()?;
        let pseudo = pseudo_rewards_weighted(features, &self.imputation_mu, arm, reward, self.p);
        self.main.update_rows(features, &pseudo);
        self.main_mu = self.main.solve()?;
        self.matched += 1;
        Ok(())
    }

    pub fn imputation_mu(&self) -> &DVector<f64> {
        &self.imputation_mu
    }

    pub fn main_mu(&self) -> &DVector<f64> {
        &self.main_mu
    }

    pub fn main_accumulator(&self) -> &RidgeAccumulator {
        &self.main
    }

    pub fn imputation_accumulator(&self) -> &RidgeAccumulator {
        &self.imputation
    }

    pub fn matched_rounds(&self) -> usize {
        self.matched
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{lower_bound_instance_thm1, true_mu_star};
    use crate::linalg::augment_observed;
    use crate::rng;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pseudo_probs_examples() {
        let probs = pseudo_action_probs(5, 30, 0.6).unwrap();
        assert_eq!(probs[5], 0.6);
        assert_abs_diff_eq!(probs[0], 0.4 / 29.0, epsilon = 1e-15);
        assert_abs_diff_eq!(probs.iter().sum::<f64>(), 1.0, epsilon = 1e-12);

        let probs = pseudo_action_probs(0, 2, 0.9).unwrap();
        assert_abs_diff_eq!(probs[0], 0.9);
        assert_abs_diff_eq!(probs[1], 0.1, epsilon = 1e-15);

        assert!(pseudo_action_probs(0, 3, 0.5).is_err());
        assert!(pseudo_action_probs(0, 3, 1.0).is_err());
        assert!(pseudo_action_probs(3, 3, 0.7).is_err());
    }

    #[test]
    fn rho_cap_examples() {
        let a = CouplingParams::new(0.6, 1e-4).unwrap();
        assert_eq!(rho_cap(1, &a), 12);
        let b = CouplingParams::new(0.6, 0.01).unwrap();
        assert_eq!(rho_cap(9, &b), 11);
        let mut prev = 0;
        for t in 1..2000 {
            let r = rho_cap(t, &a);
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn coupling_params_validated() {
        assert!(CouplingParams::new(0.5, 0.1).is_err());
        assert!(CouplingParams::new(0.7, 0.0).is_err());
        assert!(CouplingParams::new(0.7, 1.0).is_err());
    }

    #[test]
    fn first_round_never_plays_candidate() {
        let params = CouplingParams::new(0.6, 1e-4).unwrap();
        let mut rng = rng::from_seed(3);
        for _ in 0..2000 {
            let c = resample_couple(2, 1, 4, &params, &mut rng);
            assert_ne!(c.played, 2);
            assert!(c.attempts <= rho_cap(1, &params));
            assert_eq!(c.matched, c.played == c.pseudo);
        }
    }

    #[test]
    fn pseudo_rewards_with_zero_imputation() {
        let (_, _, aug) = augment_observed(&DMatrix::from_row_slice(1, 2, &[1.0, 2.0])).unwrap();
        let y = pseudo_rewards(&aug, &DVector::zeros(2), 0, 1.0, 0.6);
        assert_abs_diff_eq!(y[0], 1.0 / 0.6, epsilon = 1e-15);
        assert_eq!(y[1], 0.0);
    }

    #[test]
    fn pseudo_rewards_exact_imputation_is_truth() {
        let inst = lower_bound_instance_thm1();
        let (_, basis, aug) = augment_observed(&inst.x()).unwrap();
        let mu = true_mu_star(&inst, &basis).unwrap();
        let y = pseudo_rewards(&aug, &mu, 1, inst.expected_rewards()[1], 0.6);
        assert!((y - inst.expected_rewards()).amax() < 1e-12);
    }

    #[test]
    fn pseudo_rewards_unbiased_analytically() {
        // Sum over the two cases of the indicator with their probabilities.
        let inst = lower_bound_instance_thm1();
        let (_, basis, aug) = augment_observed(&inst.x()).unwrap();
        let mu_star = true_mu_star(&inst, &basis).unwrap();
        let mu_check = DVector::from_vec(vec![3.0, -7.0]);
        let truth = aug.values(&mu_star);
        let played = 0;
        let probs = pseudo_action_probs(played, 2, 0.7).unwrap();
        let mut expectation = DVector::zeros(2);
        for (a_tilde, &phi) in probs.iter().enumerate() {
            let y = pseudo_rewards_weighted(aug.matrix(), &mu_check, a_tilde, truth[a_tilde], phi);
            expectation += y * phi;
        }
        assert!((expectation - truth).amax() < 1e-12);
    }

    #[test]
    fn penalty_examples() {
        for kind in [PenaltyKind::Imputation, PenaltyKind::Main] {
            assert_eq!(lasso_penalty(10, 5, 0.6, 1e-4, 0.0, 2.0, kind), 0.0);
        }
        // 2 sqrt(5) sqrt(1.2 ln(2 * 2 * 1 / 1e-4))
        let imp = lasso_penalty(1, 2, 0.6, 1e-4, 1.0, 5.0, PenaltyKind::Imputation);
        assert_abs_diff_eq!(imp, 15.947_389_554, epsilon = 1e-8);
        let p: f64 = 0.6;
        for t in [1, 7, 100] {
            let imp = lasso_penalty(t, 30, p, 1e-4, 0.3, 2.5, PenaltyKind::Imputation);
            let main = lasso_penalty(t, 30, p, 1e-4, 0.3, 2.5, PenaltyKind::Main);
            assert_abs_diff_eq!(main / imp, 2.0 / (p * p.sqrt()), epsilon = 1e-12);
        }
    }

    #[test]
    fn sparse_refit_schedule() {
        let s = RefitSchedule::default();
        assert!(s.due(5, Some(4)));
        assert!(s.due(200, Some(199)));
        assert!(!s.due(450, Some(448)));
        assert!(s.due(450, Some(445)));
        assert!(RefitSchedule::EveryMatched.due(10_000, Some(9_999)));
        assert!(s.due(10_000, None));
    }

    #[test]
    fn lasso_estimator_starts_at_zero() {
        let (_, _, aug) = augment_observed(&DMatrix::from_row_slice(1, 2, &[1.0, 2.0])).unwrap();
        let est = DrLassoEstimator::new(aug, DrSettings::new(0.6, 1e-4, 1.0).unwrap());
        assert_eq!(est.main_mu(), &DVector::zeros(2));
        assert_eq!(est.imputation_mu(), &DVector::zeros(2));
    }

    #[test]
    fn main_gram_is_multiple_of_all_arm_gram() {
        let inst = lower_bound_instance_thm1();
        let (_, _, aug) = augment_observed(&inst.x()).unwrap();
        let mut est = DrLassoEstimator::new(aug.clone(), DrSettings::new(0.6, 1e-4, 1.0).unwrap());
        for t in 1..=5 {
            est.record_play(t % 2, -1.0);
            est.update_matched(t, t % 2, -1.0).unwrap();
        }
        assert_eq!(est.matched_rounds(), 5);
        assert!((est.main_gram() - aug.gram() * 5.0).amax() == 0.0);
    }

    #[test]
    fn noiseless_lasso_recovers_mu_star() {
        let inst = lower_bound_instance_thm1().with_noise(0.0);
        let (_, basis, aug) = augment_observed(&inst.x()).unwrap();
        let mu_star = true_mu_star(&inst, &basis).unwrap();
        let mut settings = DrSettings::new(0.6, 1e-4, 0.0).unwrap();
        settings.lasso.tol = 1e-13;
        settings.lasso.max_iter = 100_000;
        let mut est = DrLassoEstimator::new(aug.clone(), settings);
        for a in [0, 1, 0, 1] {
            est.record_play(a, inst.expected_rewards()[a]);
        }
        est.update_matched(4, 1, inst.expected_rewards()[1]).unwrap();
        assert!((aug.values(est.imputation_mu()) - inst.expected_rewards()).amax() < 1e-8);
        assert!((est.main_mu() - &mu_star).amax() < 1e-6);
    }

    #[test]
    fn ridge_estimators_zero_without_data() {
        let est = DrRidgeEstimator::new(3, 0.6).unwrap();
        assert_eq!(est.main_mu(), &DVector::zeros(3));
        assert_eq!(est.imputation_mu(), &DVector::zeros(3));
    }

    #[test]
    fn ridge_one_round_shrinks_towards_zero() {
        let inst = lower_bound_instance_thm1().with_noise(0.0);
        let (_, basis, aug) = augment_observed(&inst.x()).unwrap();
        let mu_star = true_mu_star(&inst, &basis).unwrap();
        let mut est = DrRidgeEstimator::new(2, 0.6).unwrap();
        // Force the imputation to be exact by feeding it a huge amount of
        // noiseless data before the matched round.
        for _ in 0..2_000_000 {
            for a in 0..2 {
                est.record_play(&aug.arm(a), inst.expected_rewards()[a]);
            }
        }
        est.update_matched(aug.matrix(), 1, inst.expected_rewards()[1]).unwrap();
        let g = aug.gram();
        let expected = (g + DMatrix::identity(2, 2)).try_inverse().unwrap() * g * &mu_star;
        assert!((est.main_mu() - expected).amax() < 1e-6);
    }
}
