//! Combination weights for pooling point forecasts.
//!
//! Three estimators are provided, all producing weights that sum to one:
//!
//! * [`equal_weights`]: the plain mean forecast;
//! * [`bg_weights`]: inverse-moment optimal weights
//!
//!   ```text
//!   w = Sigma^{-1} 1 / (1' Sigma^{-1} 1)
//!   ```
//!
//!   where `Sigma` is a forecast-error moment matrix;
//! * [`restricted_ols_weights`]: least squares on the forecasts under the
//!   sum-to-one restriction, via substitution of the last weight.
//!
//! With the uncentered moment matrix `Sigma = E'E / T` the two estimated
//! variants coincide: the restricted regression minimizes `w'E'Ew` over the
//! constraint set, which is the same program as the inverse-moment formula.

use ndarray::{Array1, Array2};

use crate::linalg;
use crate::{Error, Result};

/// Condition-estimate cap above which moment matrices are treated as singular.
pub const DEFAULT_CONDITION_CAP: f64 = 1e12;

/// Absolute tolerance on the sum-to-one invariant of weights.
pub const WEIGHT_SUM_TOL: f64 = 1e-10;

/// Symmetry tolerance (relative to scale) for moment matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A sum-to-one weight vector over named forecasters.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinationWeights {
    ids: Vec<String>,
    weights: Array1<f64>,
}

impl CombinationWeights {
    /// Builds weights, enforcing one id per weight and sum equal to one
    /// within [`WEIGHT_SUM_TOL`].
    pub fn new(ids: Vec<String>, weights: Array1<f64>) -> Result<Self> {
        if ids.len() != weights.len() {
            return Err(Error::LengthMismatch { left: ids.len(), right: weights.len() });
        }
        if weights.is_empty() {
            return Err(Error::InvalidArity);
        }
        let sum: f64 = weights.sum();
        if !(sum - 1.0).abs().is_finite() || (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::WeightSum(sum));
        }
        Ok(Self { ids, weights })
    }

    fn from_weights(weights: Array1<f64>) -> Result<Self> {
        let ids = (1..=weights.len()).map(|i| i.to_string()).collect();
        Self::new(ids, weights)
    }

    /// Replaces the forecaster labels (lengths must match).
    pub fn with_ids<S: Into<String>>(mut self, ids: Vec<S>) -> Result<Self> {
        if ids.len() != self.weights.len() {
            return Err(Error::LengthMismatch { left: ids.len(), right: self.weights.len() });
        }
        self.ids = ids.into_iter().map(Into::into).collect();
        Ok(self)
    }

    /// Forecaster labels.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// The weight vector.
    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    /// Number of forecasters.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    /// Whether the vector is empty (never true for a constructed value).
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// L1 norm of the weights.
    pub fn l1_norm(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }
}

/// An `n x n` forecast-error moment matrix.
///
/// Symmetric within [`SYMMETRY_TOL`] (relative to scale) with nonnegative
/// diagonal; the stored matrix is exactly symmetrized at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMomentMatrix {
    matrix: Array2<f64>,
}

impl ErrorMomentMatrix {
    /// Validates and stores a moment matrix.
    pub fn new(matrix: Array2<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 {
            return Err(Error::InvalidArity);
        }
        if matrix.ncols() != n {
            return Err(Error::LengthMismatch { left: n, right: matrix.ncols() });
        }
        let scale = matrix.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::NotSymmetric);
                }
            }
            if matrix[(i, i)] < -SYMMETRY_TOL * scale {
                return Err(Error::NotSymmetric);
            }
        }
        let matrix = 0.5 * (&matrix + &matrix.t());
        Ok(Self { matrix })
    }

    /// Number of forecasters.
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// The symmetrized matrix.
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }
}

/// Equal weights `1/n` over `n` forecasters.
pub fn equal_weights(n: usize) -> Result<CombinationWeights> {
    if n == 0 {
        return Err(Error::InvalidArity);
    }
    CombinationWeights::from_weights(Array1::from_elem(n, 1.0 / n as f64))
}

/// Uncentered error moment matrix `E'E / T` from a `T x n` error matrix.
pub fn error_moments(errors: &Array2<f64>) -> Result<ErrorMomentMatrix> {
    let t = errors.nrows();
    if errors.ncols() == 0 {
        return Err(Error::InvalidArity);
    }
    if t == 0 {
        return Err(Error::Empty);
    }
    let sigma = errors.t().dot(errors) / t as f64;
    ErrorMomentMatrix::new(sigma)
}

/// Centered (covariance) variant of [`error_moments`], offered for
/// exploration; the uncentered form is the default throughout the crate.
pub fn error_moments_centered(errors: &Array2<f64>) -> Result<ErrorMomentMatrix> {
    let t = errors.nrows();
    if errors.ncols() == 0 {
        return Err(Error::InvalidArity);
    }
    if t == 0 {
        return Err(Error::Empty);
    }
    let means = errors.mean_axis(ndarray::Axis(0)).expect("t >= 1");
    let centered = errors - &means;
    let sigma = centered.t().dot(&centered) / t as f64;
    ErrorMomentMatrix::new(sigma)
}

/// Inverse-moment optimal weights `Sigma^{-1} 1 / (1' Sigma^{-1} 1)`.
///
/// Fails with [`Error::SingularMoment`] when the condition estimate of
/// `Sigma` exceeds [`DEFAULT_CONDITION_CAP`].
pub fn bg_weights(sigma: &ErrorMomentMatrix) -> Result<CombinationWeights> {
    bg_weights_capped(sigma, DEFAULT_CONDITION_CAP)
}

/// [`bg_weights`] with an explicit condition cap.
pub fn bg_weights_capped(sigma: &ErrorMomentMatrix, cap: f64) -> Result<CombinationWeights> {
    let m = sigma.matrix();
    let cond = linalg::condition_1(&m.view());
    if cond > cap {
        return Err(Error::SingularMoment { cond, cap });
    }
    let ones = Array1::from_elem(sigma.n(), 1.0);
    let x = linalg::solve_sym(&m.view(), &ones.view())
        .ok_or(Error::SingularMoment { cond, cap })?;
    let total = x.sum();
    if total == 0.0 || !total.is_finite() {
        return Err(Error::SingularMoment { cond, cap });
    }
    CombinationWeights::from_weights(x / total)
}

/// Sum-constrained least-squares weights.
///
/// Substitutes `w_n = 1 - sum_{i<n} w_i` and regresses `y - f_n` on the
/// differenced columns `f_i - f_n` without intercept, so the constraint holds
/// by construction. Requires at least as many rows as forecasters.
pub fn restricted_ols_weights(forecasts: &Array2<f64>, y: &Array1<f64>) -> Result<CombinationWeights> {
    restricted_ols_weights_capped(forecasts, y, DEFAULT_CONDITION_CAP)
}

/// [`restricted_ols_weights`] with an explicit condition cap for the
/// rank-deficiency check.
pub fn restricted_ols_weights_capped(
    forecasts: &Array2<f64>,
    y: &Array1<f64>,
    cap: f64,
) -> Result<CombinationWeights> {
    let (t, n) = forecasts.dim();
    if n == 0 {
        return Err(Error::InvalidArity);
    }
    if t != y.len() {
        return Err(Error::LengthMismatch { left: t, right: y.len() });
    }
    if t < n {
        return Err(Error::InsufficientData { have: t, need: n });
    }
    if n == 1 {
        return CombinationWeights::from_weights(Array1::from_elem(1, 1.0));
    }
    let last = forecasts.column(n - 1);
    let mut x = Array2::zeros((t, n - 1));
    for j in 0..n - 1 {
        let col = &forecasts.column(j) - &last;
        x.column_mut(j).assign(&col);
    }
    let z = y - &last;
    let gram = x.t().dot(&x);
    if linalg::condition_1(&gram.view()) > cap {
        return Err(Error::RankDeficient);
    }
    let rhs = x.t().dot(&z);
    let head = linalg::solve_sym(&gram.view(), &rhs.view()).ok_or(Error::RankDeficient)?;
    let mut w = Array1::zeros(n);
    let mut sum_head = 0.0;
    for j in 0..n - 1 {
        w[j] = head[j];
        sum_head += head[j];
    }
    w[n - 1] = 1.0 - sum_head;
    CombinationWeights::from_weights(w)
}

/// Applies weights to one cross-section of forecasts.
pub fn combine(weights: &CombinationWeights, forecasts: &[f64]) -> Result<f64> {
    if weights.len() != forecasts.len() {
        return Err(Error::LengthMismatch { left: weights.len(), right: forecasts.len() });
    }
    Ok(weights
        .weights()
        .iter()
        .zip(forecasts)
        .map(|(w, f)| w * f)
        .sum())
}
