//! Dense linear algebra used by the estimators.
//!
//! The central construction is the augmented feature set: observed features
//! `x_a` (columns of a `d x K` matrix) are extended with the `a`-th coordinate
//! of every row of an orthonormal basis of the orthogonal complement of the
//! row space of `X`. Rewards are then exactly linear in the augmented vectors,
//! whatever the latent part of the reward looks like.
//!
//! Also here: a cyclic coordinate-descent Lasso solver working on sufficient
//! statistics, and an incremental ridge accumulator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Default relative cutoff on singular values when estimating rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Observed feature matrix, `d x K`, column `a` is the observed feature of arm `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedFeatureSet {
    x: DMatrix<f64>,
}

impl ObservedFeatureSet {
    /// Wraps a matrix without rank reduction.
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.ncols() < 2 {
            return Err(Error::Dimension(format!(
                "need at least 2 arms, got {}",
                x.ncols()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "observed features must be finite".into(),
            ));
        }
        Ok(Self { x })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    pub fn arms(&self) -> usize {
        self.x.ncols()
    }

    /// Projector onto the row space of `X`, `X^T (X X^T)^{-1} X`.
    pub fn row_space_projector(&self) -> Result<DMatrix<f64>> {
        let xxt = &self.x * self.x.transpose();
        let chol = xxt
            .cholesky()
            .ok_or_else(|| Error::Singular("X X^T is not positive definite".into()))?;
        let solved = chol.solve(&self.x);
        Ok(self.x.transpose() * solved)
    }
}

fn sorted_svd(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let rows: Vec<_> = order.iter().map(|&i| v_t.row(i).into_owned()).collect();
    (values, DMatrix::from_rows(&rows))
}

fn fix_sign(row: &mut [f64]) {
    let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(first) = row.iter().find(|v| v.abs() > 1e-12 * scale.max(1e-300)) {
        if *first < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

/// Drops linearly dependent directions from `X`.
///
/// Singular values at or below `tol * sigma_max` are treated as zero. A
/// matrix that already has full row rank is returned unchanged; otherwise the
/// result is `diag(s_r) V_r^T`, which spans the same row space with `r` rows.
pub fn reduce_rank(x: &DMatrix<f64>, tol: f64) -> Result<ObservedFeatureSet> {
    if x.ncols() < 2 {
        return Err(Error::Dimension(format!(
            "need at least 2 arms, got {}",
            x.ncols()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "rank tolerance must be positive, got {tol}"
        )));
    }
    if x.nrows() == 0 || x.iter().all(|v| *v == 0.0) {
        return Err(Error::RankZero);
    }
    let (values, v_t) = sorted_svd(x);
    let cutoff = tol * values[0];
    let rank = values.iter().filter(|&&s| s > cutoff).count();
    if rank == 0 {
        return Err(Error::RankZero);
    }
    if rank == x.nrows() {
        return ObservedFeatureSet::new(x.clone());
    }
    let mut reduced = DMatrix::zeros(rank, x.ncols());
    for (i, s) in values.iter().take(rank).enumerate() {
        let mut row: Vec<f64> = v_t.row(i).iter().map(|v| v * s).collect();
        fix_sign(&mut row);
        reduced.row_mut(i).copy_from_slice(&row);
    }
    ObservedFeatureSet::new(reduced)
}

/// Orthonormal basis of the orthogonal complement of the row space of `X`,
/// stored as the rows of a `(K - d) x K` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    b: DMatrix<f64>,
}

impl OrthonormalBasis {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.b.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.b.nrows() == 0
    }

    pub fn arms(&self) -> usize {
        self.b.ncols()
    }
}

/// Complement basis from the right-singular vectors of `X` with zero singular
/// value. Rows are ordered as the SVD orders them (descending singular value)
/// and each row is signed so that its first nonzero entry is positive.
pub fn complement_basis(observed: &ObservedFeatureSet) -> Result<OrthonormalBasis> {
    let x = observed.matrix();
    let (d, k) = (x.nrows(), x.ncols());
    if d > k {
        return Err(Error::Dimension(format!(
            "observed dimension {d} exceeds arm count {k}; reduce rank first"
        )));
    }
    if d == k {
        return Ok(OrthonormalBasis {
            b: DMatrix::zeros(0, k),
        });
    }
    // Pad to a square matrix so the SVD returns a full set of right vectors.
    let mut padded = DMatrix::zeros(k, k);
    padded.view_mut((0, 0), (d, k)).copy_from(x);
    let (values, v_t) = sorted_svd(&padded);
    if values[d - 1] <= DEFAULT_RANK_TOL * values[0] {
        return Err(Error::Singular(
            "observed features are rank deficient; reduce rank first".into(),
        ));
    }
    let mut b = DMatrix::zeros(k - d, k);
    for i in 0..(k - d) {
        let mut row: Vec<f64> = v_t.row(d + i).iter().copied().collect();
        fix_sign(&mut row);
        b.row_mut(i).copy_from_slice(&row);
    }
    Ok(OrthonormalBasis { b })
}

/// Per-arm feature vectors (rows) together with their all-arms Gram summary.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedFeatureSet {
    features: DMatrix<f64>,
    gram: DMatrix<f64>,
    observed_dim: usize,
    sigma_min_sq: f64,
    sigma_max_sq: f64,
}

impl AugmentedFeatureSet {
    /// Builds the set from explicit rows (`K x D`).
    pub fn from_rows(features: DMatrix<f64>, observed_dim: usize) -> Self {
        let gram = features.transpose() * &features;
        let sigma_min_sq = SymmetricEigen::new(gram.clone())
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v))
            .max(0.0);
        let sigma_max_sq = gram.diagonal().max();
        Self {
            features,
            gram,
            observed_dim,
            sigma_min_sq,
            sigma_max_sq,
        }
    }

    /// Time-varying augmentation: row `a` is `[x_a^T, e_a^T]`, dimension `d + K`.
    pub fn with_indicators(x: &DMatrix<f64>) -> Self {
        let (d, k) = (x.nrows(), x.ncols());
        let mut rows = DMatrix::zeros(k, d + k);
        rows.view_mut((0, 0), (k, d)).copy_from(&x.transpose());
        for a in 0..k {
            rows[(a, d + a)] = 1.0;
        }
        Self::from_rows(rows, d)
    }

    /// `K x D` matrix whose row `a` is the feature of arm `a`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn arm(&self, a: usize) -> DVector<f64> {
        self.features.row(a).transpose()
    }

    pub fn arms(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn observed_dim(&self) -> usize {
        self.observed_dim
    }

    /// `sum_a x_a x_a^T`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Smallest eigenvalue of the all-arms Gram.
    pub fn sigma_min_sq(&self) -> f64 {
        self.sigma_min_sq
    }

    /// Largest diagonal entry of the all-arms Gram.
    pub fn sigma_max_sq(&self) -> f64 {
        self.sigma_max_sq
    }

    /// Predicted value of every arm under `mu`.
    pub fn values(&self, mu: &DVector<f64>) -> DVector<f64> {
        &self.features * mu
    }
}

/// Concatenates observed features with the complement-basis coordinates.
pub fn augment(
    observed: &ObservedFeatureSet,
    basis: &OrthonormalBasis,
) -> Result<AugmentedFeatureSet> {
    let x = observed.matrix();
    let b = basis.matrix();
    if x.ncols() != b.ncols() {
        return Err(Error::Dimension(format!(
            "observed features have {} arms, basis has {}",
            x.ncols(),
            b.ncols()
        )));
    }
    let k = x.ncols();
    if x.nrows() + b.nrows() != k {
        return Err(Error::Dimension(format!(
            "d + basis rows = {} + {} != K = {k}",
            x.nrows(),
            b.nrows()
        )));
    }
    let mut rows = DMatrix::zeros(k, k);
    rows.view_mut((0, 0), (k, x.nrows()))
        .copy_from(&x.transpose());
    rows.view_mut((0, x.nrows()), (k, b.nrows()))
        .copy_from(&b.transpose());
    Ok(AugmentedFeatureSet::from_rows(rows, x.nrows()))
}

/// Convenience: rank reduction, complement basis and augmentation in one go.
pub fn augment_observed(
    x: &DMatrix<f64>,
) -> Result<(ObservedFeatureSet, OrthonormalBasis, AugmentedFeatureSet)> {
    let observed = reduce_rank(x, DEFAULT_RANK_TOL)?;
    let basis = complement_basis(&observed)?;
    let features = augment(&observed, &basis)?;
    Ok((observed, basis, features))
}

/// Stopping rule for the coordinate-descent Lasso.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    /// Converged once no coordinate moves by more than this in a sweep.
    pub tol: f64,
    /// Maximum number of full sweeps.
    pub max_iter: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub coef: DVector<f64>,
    pub sweeps: usize,
    /// False when `max_iter` sweeps ran without meeting the tolerance.
    pub converged: bool,
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Minimizes `sum (y - x^T mu)^2 + lambda * ||mu||_1` over explicit samples.
pub fn solve_lasso(
    features: &[DVector<f64>],
    targets: &[f64],
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LassoFit> {
    if features.is_empty() {
        return Err(Error::InvalidParameter("lasso needs at least one sample".into()));
    }
    if features.len() != targets.len() {
        return Err(Error::Dimension(format!(
            "{} features but {} targets",
            features.len(),
            targets.len()
        )));
    }
    let dim = features[0].len();
    let mut gram = DMatrix::zeros(dim, dim);
    let mut xty = DVector::zeros(dim);
    for (x, &y) in features.iter().zip(targets) {
        if x.len() != dim {
            return Err(Error::Dimension("ragged feature list".into()));
        }
        gram.ger(1.0, x, x, 1.0);
        xty.axpy(y, x, 1.0);
    }
    solve_lasso_gram(&gram, &xty, lambda, LassoOptions { tol, max_iter }, None)
}

/// Same objective expressed through `G = sum x x^T` and `c = sum x y`:
/// `mu^T G mu - 2 c^T mu + lambda ||mu||_1`.
pub fn solve_lasso_gram(
    gram: &DMatrix<f64>,
    xty: &DVector<f64>,
    lambda: f64,
    opts: LassoOptions,
    warm_start: Option<&DVector<f64>>,
) -> Result<LassoFit> {
    let dim = xty.len();
    if gram.nrows() != dim || gram.ncols() != dim {
        return Err(Error::Dimension(format!(
            "gram is {}x{}, xty has {dim} entries",
            gram.nrows(),
            gram.ncols()
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lasso penalty must be non-negative, got {lambda}"
        )));
    }
    let mut coef = match warm_start {
        Some(w) if w.len() == dim => w.clone(),
        _ => DVector::zeros(dim),
    };
    let mut g_coef = gram * &coef;
    let half_lambda = 0.5 * lambda;
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < opts.max_iter {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..dim {
            let gjj = gram[(j, j)];
            let old = coef[j];
            let new = if gjj > 0.0 {
                let partial = xty[j] - g_coef[j] + gjj * old;
                soft_threshold(partial, half_lambda) / gjj
            } else {
                0.0
            };
            let delta = new - old;
            if delta != 0.0 {
                coef[j] = new;
                g_coef.axpy(delta, &gram.column(j), 1.0);
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(LassoFit {
        coef,
        sweeps,
        converged,
    })
}

/// Largest violation of the Lasso optimality conditions at `coef`, measured on
/// the half gradient `G mu - c` against `lambda / 2`.
pub fn lasso_kkt_violation(
    gram: &DMatrix<f64>,
    xty: &DVector<f64>,
    coef: &DVector<f64>,
    lambda: f64,
) -> f64 {
    let grad = gram * coef - xty;
    let half = 0.5 * lambda;
    grad.iter()
        .zip(coef.iter())
        .map(|(&g, &m)| {
            if m == 0.0 {
                (g.abs() - half).max(0.0)
            } else {
                (g + half * m.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Lasso objective `sum (y - x^T mu)^2 + lambda ||mu||_1` up to the constant
/// `sum y^2`, evaluated from sufficient statistics.
pub fn lasso_objective_gram(
    gram: &DMatrix<f64>,
    xty: &DVector<f64>,
    coef: &DVector<f64>,
    lambda: f64,
) -> f64 {
    (coef.transpose() * gram * coef)[(0, 0)] - 2.0 * xty.dot(coef) + lambda * coef.lp_norm(1)
}

/// Running `(lambda I + sum w x x^T, sum w x y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeAccumulator {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl RidgeAccumulator {
    pub fn new(dim: usize, lambda: f64) -> Self {
        Self {
            a: DMatrix::identity(dim, dim) * lambda,
            b: DVector::zeros(dim),
        }
    }

    pub fn update(&mut self, feature: &DVector<f64>, target: f64, weight: f64) {
        self.a.ger(weight, feature, feature, 1.0);
        self.b.axpy(weight * target, feature, 1.0);
    }

    /// Adds every row of `features` with its target, unit weight.
    pub fn update_rows(&mut self, features: &DMatrix<f64>, targets: &DVector<f64>) {
        self.a.gemm_tr(1.0, features, features, 1.0);
        self.b.gemv_tr(1.0, features, targets, 1.0);
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn solve(&self) -> Result<DVector<f64>> {
        let chol = self
            .a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Singular("ridge matrix is not positive definite".into()))?;
        Ok(chol.solve(&self.b))
    }
}
