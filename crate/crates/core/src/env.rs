//! Problem instances: true features split into an observed block and a latent
//! block, a reward parameter, and Gaussian reward noise.
//!
//! Synthetic instances come in two scenarios (partial and full observability)
//! and three structural cases relating the row spaces of the observed and
//! latent blocks. Two hand-built instances show that observed-only policies
//! can be forced into linear regret.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::linalg::{ObservedFeatureSet, OrthonormalBasis};
use crate::rng::{self, SimRng, StreamKind};

/// Default reward noise standard deviation.
pub const DEFAULT_NOISE_SIGMA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// About half of the true feature dimensions are observed.
    PartiallyObserved,
    /// Everything is observed and `d > K`.
    FullyObserved,
}

impl Scenario {
    pub fn number(self) -> u8 {
        match self {
            Scenario::PartiallyObserved => 1,
            Scenario::FullyObserved => 2,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Scenario::PartiallyObserved),
            2 => Ok(Scenario::FullyObserved),
            _ => Err(Error::Config(format!("unknown scenario {n}"))),
        }
    }
}

/// Relationship between the row spaces `R(X)` and `R(U)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureCase {
    /// Neither row space contains the other.
    General,
    /// `R(U) ⊆ R(X)`: latent features are linear in observed ones.
    LatentInObserved,
    /// `R(X) ⊆ R(U)`: observed features are linear in latent ones.
    ObservedInLatent,
}

impl FeatureCase {
    pub fn number(self) -> u8 {
        match self {
            FeatureCase::General => 1,
            FeatureCase::LatentInObserved => 2,
            FeatureCase::ObservedInLatent => 3,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(FeatureCase::General),
            2 => Ok(FeatureCase::LatentInObserved),
            3 => Ok(FeatureCase::ObservedInLatent),
            _ => Err(Error::Config(format!("unknown case {n}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub case: FeatureCase,
    pub arms: usize,
    pub observed_dim: usize,
    pub true_dim: usize,
    pub latent_dim: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    /// `K = 30`, `d_z = 35`, `d = floor(d_z / 2) = 17`.
    pub fn partially_observed(case: FeatureCase, seed: u64) -> Self {
        let true_dim = 35;
        let observed_dim = true_dim / 2;
        Self {
            scenario: Scenario::PartiallyObserved,
            case,
            arms: 30,
            observed_dim,
            true_dim,
            latent_dim: true_dim - observed_dim,
            noise_sigma: DEFAULT_NOISE_SIGMA,
            seed,
        }
    }

    /// `K = 30`, `d = d_z = 2K = 60`, no latent block.
    pub fn fully_observed(case: FeatureCase, seed: u64) -> Self {
        Self {
            scenario: Scenario::FullyObserved,
            case,
            arms: 30,
            observed_dim: 60,
            true_dim: 60,
            latent_dim: 0,
            noise_sigma: DEFAULT_NOISE_SIGMA,
            seed,
        }
    }

    pub fn new(scenario: Scenario, case: FeatureCase, seed: u64) -> Self {
        match scenario {
            Scenario::PartiallyObserved => Self::partially_observed(case, seed),
            Scenario::FullyObserved => Self::fully_observed(case, seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.arms < 2 {
            return Err(Error::Config("need at least 2 arms".into()));
        }
        if self.observed_dim == 0 {
            return Err(Error::Config("observed dimension must be positive".into()));
        }
        if self.observed_dim + self.latent_dim != self.true_dim {
            return Err(Error::Config(format!(
                "d + d_u = {} + {} != d_z = {}",
                self.observed_dim, self.latent_dim, self.true_dim
            )));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::Config("noise sigma must be non-negative".into()));
        }
        match (self.scenario, self.case) {
            (Scenario::FullyObserved, FeatureCase::ObservedInLatent) => {
                return Err(Error::Config(
                    "case 3 is undefined without latent features (scenario 2)".into(),
                ))
            }
            (Scenario::FullyObserved, _) if self.latent_dim != 0 => {
                return Err(Error::Config("scenario 2 requires d_u = 0".into()))
            }
            (_, FeatureCase::ObservedInLatent) if self.latent_dim == 0 => {
                return Err(Error::Config("case 3 requires d_u > 0".into()))
            }
            _ => {}
        }
        Ok(())
    }
}

/// True features `Z = [X; U]` (`d_z x K`) and the reward parameter.
///
/// Equality compares the defining data (`Z`, `d`, `theta_star`, `sigma`);
/// whether `theta_star` was rescaled on construction is not part of it.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    z: DMatrix<f64>,
    observed_dim: usize,
    theta_star: DVector<f64>,
    noise_sigma: f64,
    expected_rewards: DVector<f64>,
    theta_rescaled: bool,
}

impl PartialEq for ProblemInstance {
    fn eq(&self, other: &Self) -> bool {
        self.z == other.z
            && self.observed_dim == other.observed_dim
            && self.theta_star == other.theta_star
            && self.noise_sigma == other.noise_sigma
    }
}

impl ProblemInstance {
    /// Stacks `x` over `u` and computes expected rewards. `theta_star` is
    /// used as given; see [`ProblemInstance::bounded`] for rescaling.
    pub fn from_parts(
        x: &DMatrix<f64>,
        u: &DMatrix<f64>,
        theta_star: DVector<f64>,
        noise_sigma: f64,
    ) -> Result<Self> {
        let k = x.ncols();
        if u.nrows() > 0 && u.ncols() != k {
            return Err(Error::Dimension(format!(
                "X has {k} arms, U has {}",
                u.ncols()
            )));
        }
        let d = x.nrows();
        let d_u = u.nrows();
        if theta_star.len() != d + d_u {
            return Err(Error::Dimension(format!(
                "theta has {} entries, d_z = {}",
                theta_star.len(),
                d + d_u
            )));
        }
        if !(noise_sigma >= 0.0) {
            return Err(Error::InvalidParameter("noise sigma must be non-negative".into()));
        }
        let mut z = DMatrix::zeros(d + d_u, k);
        z.view_mut((0, 0), (d, k)).copy_from(x);
        if d_u > 0 {
            z.view_mut((d, 0), (d_u, k)).copy_from(u);
        }
        Self::from_stacked(z, d, theta_star, noise_sigma)
    }

    fn from_stacked(
        z: DMatrix<f64>,
        observed_dim: usize,
        theta_star: DVector<f64>,
        noise_sigma: f64,
    ) -> Result<Self> {
        if z.ncols() < 2 {
            return Err(Error::Dimension("need at least 2 arms".into()));
        }
        if observed_dim == 0 || observed_dim > z.nrows() {
            return Err(Error::Dimension(format!(
                "observed dimension {observed_dim} out of range for d_z = {}",
                z.nrows()
            )));
        }
        let expected_rewards = z.tr_mul(&theta_star);
        Ok(Self {
            z,
            observed_dim,
            theta_star,
            noise_sigma,
            expected_rewards,
            theta_rescaled: false,
        })
    }

    /// Divides `theta_star` by the largest absolute expected reward when that
    /// exceeds one.
    pub fn bounded(mut self) -> Self {
        let m = self.expected_rewards.amax();
        if m > 1.0 {
            self.theta_star /= m;
            self.expected_rewards = self.z.tr_mul(&self.theta_star);
            self.theta_rescaled = true;
        }
        self
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn arms(&self) -> usize {
        self.z.ncols()
    }

    pub fn observed_dim(&self) -> usize {
        self.observed_dim
    }

    pub fn latent_dim(&self) -> usize {
        self.z.nrows() - self.observed_dim
    }

    pub fn true_dim(&self) -> usize {
        self.z.nrows()
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    /// Observed block `X` (`d x K`).
    pub fn x(&self) -> DMatrix<f64> {
        self.z.rows(0, self.observed_dim).into_owned()
    }

    /// Latent block `U` (`d_u x K`, possibly empty).
    pub fn u(&self) -> DMatrix<f64> {
        self.z
            .rows(self.observed_dim, self.latent_dim())
            .into_owned()
    }

    pub fn theta_star(&self) -> &DVector<f64> {
        &self.theta_star
    }

    pub fn theta_observed(&self) -> DVector<f64> {
        self.theta_star.rows(0, self.observed_dim).into_owned()
    }

    pub fn theta_latent(&self) -> DVector<f64> {
        self.theta_star
            .rows(self.observed_dim, self.latent_dim())
            .into_owned()
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn expected_rewards(&self) -> &DVector<f64> {
        &self.expected_rewards
    }

    /// True when `theta_star` was shrunk to keep rewards in `[-1, 1]`.
    pub fn theta_rescaled(&self) -> bool {
        self.theta_rescaled
    }

    /// Best arm under the full features; lowest index on ties.
    pub fn optimal_arm(&self) -> usize {
        argmax(self.expected_rewards.as_slice())
    }

    pub fn optimal_reward(&self) -> f64 {
        self.expected_rewards[self.optimal_arm()]
    }

    /// Difference between the best and second-best expected reward.
    pub fn min_gap(&self) -> f64 {
        let best = self.optimal_arm();
        let runner_up = self
            .expected_rewards
            .iter()
            .enumerate()
            .filter(|(a, _)| *a != best)
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        self.expected_rewards[best] - runner_up
    }

    /// Per-arm expected rewards when the observed block is replaced by `x_t`.
    pub fn expected_rewards_with_observed(&self, x_t: &DMatrix<f64>) -> DVector<f64> {
        let mut r = x_t.tr_mul(&self.theta_observed());
        if self.latent_dim() > 0 {
            r += self.u().tr_mul(&self.theta_latent());
        }
        r
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn normal_matrix(rows: usize, cols: usize, rng: &mut SimRng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn uniform_matrix(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut SimRng) -> DMatrix<f64> {
    let dist = Uniform::new(lo, hi).expect("valid range");
    DMatrix::from_fn(rows, cols, |_, _| dist.sample(rng))
}

/// Draws a synthetic instance. A pure function of `cfg`.
pub fn generate_instance(cfg: &ScenarioConfig) -> Result<ProblemInstance> {
    cfg.validate()?;
    let mut rng = rng::stream(0, cfg.seed, StreamKind::Instance, 0);
    let (k, d, d_u) = (cfg.arms, cfg.observed_dim, cfg.latent_dim);
    let (x, u) = match cfg.case {
        FeatureCase::General => {
            let z = normal_matrix(cfg.true_dim, k, &mut rng);
            (z.rows(0, d).into_owned(), z.rows(d, d_u).into_owned())
        }
        FeatureCase::LatentInObserved => {
            let x = normal_matrix(d, k, &mut rng);
            let c_u = uniform_matrix(d_u, d, -1.0, 1.0, &mut rng);
            let u = &c_u * &x;
            (x, u)
        }
        FeatureCase::ObservedInLatent => {
            let u = normal_matrix(d_u, k, &mut rng);
            let c_x = uniform_matrix(d, d_u, -1.0, 1.0, &mut rng);
            let x = &c_x * &u;
            (x, u)
        }
    };
    let theta = uniform_matrix(cfg.true_dim, 1, -0.5, 0.5, &mut rng).column(0).into_owned();
    Ok(ProblemInstance::from_parts(&x, &u, theta, cfg.noise_sigma)?.bounded())
}

/// Expected reward of `arm` plus Gaussian noise with the instance's sigma.
pub fn sample_reward<R: Rng + ?Sized>(inst: &ProblemInstance, arm: usize, rng: &mut R) -> f64 {
    noisy(inst.expected_rewards[arm], inst.noise_sigma, rng)
}

pub(crate) fn noisy<R: Rng + ?Sized>(mean: f64, sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        return mean;
    }
    let eps: f64 = StandardNormal.sample(rng);
    mean + sigma * eps
}

/// Two arms, one observed and one latent coordinate: `Z = {[1, 3], [2, 19/4]}`,
/// `theta = [2, -1]`. Expected rewards `[-1, -3/4]`; arm index 1 is optimal.
/// Noise sigma defaults to 1.
pub fn lower_bound_instance_thm1() -> ProblemInstance {
    let x = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
    let u = DMatrix::from_row_slice(1, 2, &[3.0, 19.0 / 4.0]);
    ProblemInstance::from_parts(&x, &u, DVector::from_vec(vec![2.0, -1.0]), 1.0)
        .expect("static instance")
}

/// Three arms `[a_star, a_prime, a_o]` where `a_star` and `a_prime` share
/// observed features but differ in their latent part. Expected rewards are
/// `[1/2, -5/6, 1/6]`.
pub fn lower_bound_instance_three_arm(d: usize, d_u: usize) -> Result<ProblemInstance> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be positive".into()));
    }
    if d_u == 0 || !d_u.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "d_u must be a positive even number, got {d_u}"
        )));
    }
    let mut x = DMatrix::from_element(d, 3, -0.5);
    x.column_mut(2).fill(0.5);
    let mut u = DMatrix::zeros(d_u, 3);
    u.column_mut(0).fill(1.0);
    u.column_mut(1).fill(-1.0);
    for i in 0..d_u {
        u[(i, 2)] = if i < d_u / 2 { -1.0 } else { 1.0 };
    }
    let theta = DVector::from_fn(d + d_u, |i, _| {
        if i < d {
            1.0 / (3.0 * d as f64)
        } else {
            2.0 / (3.0 * d_u as f64)
        }
    });
    ProblemInstance::from_parts(&x, &u, theta, DEFAULT_NOISE_SIGMA)
}

/// Coordinates of the expected rewards in the augmented basis:
/// `[mu_o; mu_u]` with `mu_o = theta_o + (X X^T)^{-1} X U^T theta_u` and
/// `mu_u = B U^T theta_u`.
pub fn true_mu_star(inst: &ProblemInstance, basis: &OrthonormalBasis) -> Result<DVector<f64>> {
    let x = inst.x();
    if basis.arms() != inst.arms() || x.nrows() + basis.len() != inst.arms() {
        return Err(Error::Dimension(format!(
            "basis with {} rows over {} arms does not complement d = {}",
            basis.len(),
            basis.arms(),
            x.nrows()
        )));
    }
    let chol = (&x * x.transpose()).cholesky().ok_or_else(|| {
        Error::Singular("X X^T is singular; reduce rank before computing mu_star".into())
    })?;
    let mut mu_o = inst.theta_observed();
    let mut mu_u = DVector::zeros(basis.len());
    if inst.latent_dim() > 0 {
        let latent_reward = inst.u().tr_mul(&inst.theta_latent());
        mu_o += chol.solve(&(&x * &latent_reward));
        mu_u = basis.matrix() * latent_reward;
    }
    let mut mu = DVector::zeros(inst.arms());
    mu.rows_mut(0, x.nrows()).copy_from(&mu_o);
    mu.rows_mut(x.nrows(), basis.len()).copy_from(&mu_u);
    Ok(mu)
}

/// Coordinates of an arbitrary reward vector `r` in the augmented basis built
/// from a (possibly rank-reduced) observed set: `[(X X^T)^{-1} X r; B r]`.
pub fn reward_coordinates(
    observed: &ObservedFeatureSet,
    basis: &OrthonormalBasis,
    rewards: &DVector<f64>,
) -> Result<DVector<f64>> {
    let x = observed.matrix();
    let chol = (x * x.transpose())
        .cholesky()
        .ok_or_else(|| Error::Singular("X X^T is singular".into()))?;
    let mu_o = chol.solve(&(x * rewards));
    let mu_u = basis.matrix() * rewards;
    let mut mu = DVector::zeros(x.nrows() + basis.len());
    mu.rows_mut(0, x.nrows()).copy_from(&mu_o);
    mu.rows_mut(x.nrows(), basis.len()).copy_from(&mu_u);
    Ok(mu)
}

/// Number of latent coordinates of `mu_star` larger than `tol` in magnitude.
pub fn true_dh(inst: &ProblemInstance, basis: &OrthonormalBasis, tol: f64) -> Result<usize> {
    let mu = true_mu_star(inst, basis)?;
    let d = inst.observed_dim();
    Ok(mu.rows(d, basis.len()).iter().filter(|v| v.abs() > tol).count())
}

/// Observed features for one round of a time-varying run: `X + jitter * N(0, 1)`.
pub fn drifted_observed<R: Rng + ?Sized>(
    inst: &ProblemInstance,
    jitter: f64,
    rng: &mut R,
) -> DMatrix<f64> {
    let x = inst.x();
    if jitter == 0.0 {
        return x;
    }
    x.map(|v| {
        let e: f64 = StandardNormal.sample(rng);
        v + jitter * e
    })
}

/// Plain-text fixture format:
///
/// ```text
/// K d d_z sigma
/// <d_z lines of K values: Z row by row>
/// <one line of d_z values: theta_star>
/// ```
pub fn instance_to_text(inst: &ProblemInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {} {}",
        inst.arms(),
        inst.observed_dim(),
        inst.true_dim(),
        inst.noise_sigma()
    );
    for row in inst.z().row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    let theta: Vec<String> = inst.theta_star().iter().map(|v| v.to_string()).collect();
    let _ = writeln!(out, "{}", theta.join(" "));
    out
}

pub fn write_instance<W: Write>(inst: &ProblemInstance, mut w: W) -> std::io::Result<()> {
    w.write_all(instance_to_text(inst).as_bytes())
}

pub fn read_instance<R: BufRead>(reader: R) -> Result<ProblemInstance> {
    let mut lines = reader
        .lines()
        .map(|l| l.map_err(|e| Error::Parse(e.to_string())))
        .filter(|l| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("missing header line".into()))??;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(Error::Parse(format!(
            "header must be 'K d d_z sigma', got '{header}'"
        )));
    }
    let parse_usize = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| Error::Parse(format!("'{s}': {e}")))
    };
    let k = parse_usize(fields[0])?;
    let d = parse_usize(fields[1])?;
    let d_z = parse_usize(fields[2])?;
    let sigma: f64 = fields[3]
        .parse()
        .map_err(|e| Error::Parse(format!("'{}': {e}", fields[3])))?;
    let mut parse_row = |expected: usize, what: &str| -> Result<Vec<f64>> {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("missing {what}")))??;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("'{s}': {e}"))))
            .collect::<Result<_>>()?;
        if row.len() != expected {
            return Err(Error::Parse(format!(
                "{what}: expected {expected} values, got {}",
                row.len()
            )));
        }
        Ok(row)
    };
    let mut z = DMatrix::zeros(d_z, k);
    for i in 0..d_z {
        let row = parse_row(k, &format!("row {i} of Z"))?;
        z.row_mut(i).copy_from_slice(&row);
    }
    let theta = DVector::from_vec(parse_row(d_z, "theta_star")?);
    ProblemInstance::from_stacked(z, d, theta, sigma)
}
