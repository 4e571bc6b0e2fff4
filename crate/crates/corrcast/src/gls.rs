//! GLS estimation of combination weights under autocorrelated errors.
//!
//! Three routes to the same target:
//!
//! * [`hildreth_lu`]: profile out an AR(1)-at-lag-`h` coefficient by grid
//!   search. For each `gamma` the sample is quasi-differenced,
//!
//!   ```text
//!   y(t) - gamma y(t-h)  on  f_i(t) - gamma f_i(t-h),
//!   ```
//!
//!   the sum-constrained least-squares weights are fit on the transformed
//!   rows, and the `gamma` with the smallest SSR wins (golden-section
//!   refinement between grid points, ties toward the smaller value).
//! * [`general_gls_weights`]: a known error covariance `Omega` is whitened
//!   with its inverse Cholesky factor and the inverse-moment formula is
//!   applied to the whitened error moments.
//! * [`two_step_gls`]: plug-in route; estimate the lag-`h` coefficient from
//!   restricted-OLS residuals, re-solve under the implied covariance, and
//!   iterate once.
//!
//! [`risk_bound_report`] quantifies how much an estimated covariance can
//! move the achieved risk: with `a_T` the largest absolute entry of
//! `E'(Omega^{-1}(gamma_hat) - Omega^{-1}(gamma))E` and weights of L1 norm
//! at most `c`, each optimality gap is bounded by `a_T c^2` (twice that for
//! the gap between achieved and attainable risk).

use ndarray::{Array1, Array2};

use crate::combine::{
    bg_weights_capped, restricted_ols_weights, CombinationWeights, ErrorMomentMatrix,
    DEFAULT_CONDITION_CAP,
};
use crate::correct::{historical_gamma_slice, DEFAULT_CLAMP};
use crate::linalg;
use crate::{Error, Result};

/// Default grid bounds for the AR coefficient search.
pub const GAMMA_GRID_BOUND: f64 = 0.99;

/// Default grid step for [`hildreth_lu`].
pub const DEFAULT_GRID_STEP: f64 = 0.01;

/// Width tolerance at which golden-section refinement stops.
pub const REFINE_TOL: f64 = 1e-4;

/// Result of a grid-search AR(1) GLS fit.
#[derive(Debug, Clone)]
pub struct Ar1GlsFit {
    /// Combination weights at the selected coefficient.
    pub weights: CombinationWeights,
    /// Selected AR coefficient.
    pub gamma: f64,
    /// SSR of the transformed regression at `gamma`.
    pub ssr: f64,
    /// `(gamma, ssr)` at every grid point scanned.
    pub trace: Vec<(f64, f64)>,
    /// Lag used by the quasi-difference, in rows.
    pub horizon: usize,
}

/// Quasi-differences the sample at `gamma` and fits restricted OLS.
fn fit_at_gamma(
    f: &Array2<f64>,
    y: &Array1<f64>,
    h: usize,
    gamma: f64,
) -> Result<(CombinationWeights, f64)> {
    let (t, n) = f.dim();
    let rows = t - h;
    let mut ft = Array2::zeros((rows, n));
    let mut yt = Array1::zeros(rows);
    for r in h..t {
        yt[r - h] = y[r] - gamma * y[r - h];
        for c in 0..n {
            ft[(r - h, c)] = f[(r, c)] - gamma * f[(r - h, c)];
        }
    }
    let w = restricted_ols_weights(&ft, &yt)?;
    let fitted = ft.dot(w.weights());
    let ssr = yt
        .iter()
        .zip(fitted.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((w, ssr))
}

/// Grid-search GLS fit over the default symmetric grid.
///
/// The grid spans `[-0.99, 0.99]` at `grid_step`; the winner is refined by
/// golden-section search to [`REFINE_TOL`]. Requires `T >= n + h + 2` rows so
/// the transformed regression keeps spare degrees of freedom.
pub fn hildreth_lu(
    f: &Array2<f64>,
    y: &Array1<f64>,
    h: usize,
    grid_step: f64,
) -> Result<Ar1GlsFit> {
    if !(grid_step > 0.0) || grid_step > 2.0 * GAMMA_GRID_BOUND {
        return Err(Error::Config(format!("invalid grid step {grid_step}")));
    }
    let steps = (2.0 * GAMMA_GRID_BOUND / grid_step).round() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|k| -GAMMA_GRID_BOUND + k as f64 * grid_step)
        .filter(|g| *g <= GAMMA_GRID_BOUND + 1e-12)
        .collect();
    hildreth_lu_on_grid(f, y, h, &grid, true)
}

/// Grid-search GLS fit over an explicit grid, optionally refined.
///
/// Grid points where the transformed regression fails are skipped; at least
/// one must succeed. With a single-point grid and no refinement this reduces
/// to restricted OLS on the transformed (or raw, for `gamma = 0`) sample.
pub fn hildreth_lu_on_grid(
    f: &Array2<f64>,
    y: &Array1<f64>,
    h: usize,
    grid: &[f64],
    refine: bool,
) -> Result<Ar1GlsFit> {
    let (t, n) = f.dim();
    if h == 0 {
        return Err(Error::InvalidHorizon);
    }
    if t != y.len() {
        return Err(Error::LengthMismatch { left: t, right: y.len() });
    }
    let need = n + h + 2;
    if t < need {
        return Err(Error::InsufficientData { have: t, need });
    }
    if grid.is_empty() {
        return Err(Error::Config("empty gamma grid".into()));
    }

    let mut trace = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64, CombinationWeights)> = None;
    let mut last_err = None;
    for &g in grid {
        match fit_at_gamma(f, y, h, g) {
            Ok((w, ssr)) => {
                trace.push((g, ssr));
                // Strict comparison keeps the smallest gamma on ties.
                if best.as_ref().map_or(true, |(_, s, _)| ssr < *s) {
                    best = Some((g, ssr, w));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let (mut gamma, mut ssr, mut weights) = match best {
        Some(b) => b,
        None => return Err(last_err.unwrap_or(Error::RankDeficient)),
    };

    if refine && grid.len() > 1 {
        let step = grid
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let lo = (gamma - step).max(grid[0]);
        let hi = (gamma + step).min(grid[grid.len() - 1]);
        if let Some((g, s, w)) = golden_section(f, y, h, lo, hi) {
            if s < ssr || (s == ssr && g < gamma) {
                gamma = g;
                ssr = s;
                weights = w;
            }
        }
    }

    Ok(Ar1GlsFit { weights, gamma, ssr, trace, horizon: h })
}

/// Golden-section minimization of the profile SSR on `[lo, hi]`.
fn golden_section(
    f: &Array2<f64>,
    y: &Array1<f64>,
    h: usize,
    mut lo: f64,
    mut hi: f64,
) -> Option<(f64, f64, CombinationWeights)> {
    const PHI: f64 = 0.618_033_988_749_894_9;
    let eval = |g: f64| fit_at_gamma(f, y, h, g).ok().map(|(w, s)| (g, s, w));
    let mut x1 = hi - PHI * (hi - lo);
    let mut x2 = lo + PHI * (hi - lo);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while hi - lo > REFINE_TOL {
        // `<=` walks toward the smaller gamma on exact ties.
        if f1.1 <= f2.1 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - PHI * (hi - lo);
            f1 = eval(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + PHI * (hi - lo);
            f2 = eval(x2)?;
        }
    }
    Some(if f1.1 <= f2.1 { f1 } else { f2 })
}

/// One corrected forecast from a grid-search fit.
///
/// ```text
/// forecast = w'f_next + gamma (y_t - w'f_prev)
/// ```
///
/// where `f_next` are the forecasts made now for the next target, `f_prev`
/// the forecasts that targeted the current period, and `y_t` its realized
/// value.
pub fn gls_forecast(
    fit: &Ar1GlsFit,
    f_next: &[f64],
    f_prev: &[f64],
    y_t: f64,
) -> Result<f64> {
    let head = crate::combine::combine(&fit.weights, f_next)?;
    let prev = crate::combine::combine(&fit.weights, f_prev)?;
    Ok(head + fit.gamma * (y_t - prev))
}

/// A stationary ARMA error-covariance specification.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmaCovariance {
    ar: Vec<f64>,
    ma: Vec<f64>,
    sigma2: f64,
    t: usize,
}

impl ArmaCovariance {
    /// Validates AR stationarity (all roots strictly outside the unit
    /// circle) and a positive innovation variance.
    pub fn new(ar: Vec<f64>, ma: Vec<f64>, sigma2: f64, t: usize) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::Config(format!(
                "innovation variance must be positive (got {sigma2})"
            )));
        }
        if t == 0 {
            return Err(Error::Empty);
        }
        if !ar_is_stationary(&ar) {
            return Err(Error::NonStationary);
        }
        Ok(Self { ar, ma, sigma2, t })
    }

    /// AR(1) covariance with coefficient `phi`.
    pub fn ar1(phi: f64, sigma2: f64, t: usize) -> Result<Self> {
        Self::new(vec![phi], Vec::new(), sigma2, t)
    }

    /// AR(1) at lag `h`: `u(t) = gamma u(t-h) + eps(t)`.
    pub fn seasonal_ar1(gamma: f64, h: usize, sigma2: f64, t: usize) -> Result<Self> {
        if h == 0 {
            return Err(Error::InvalidHorizon);
        }
        let mut ar = vec![0.0; h];
        ar[h - 1] = gamma;
        Self::new(ar, Vec::new(), sigma2, t)
    }

    /// Matrix dimension.
    pub fn t(&self) -> usize {
        self.t
    }

    /// Autocovariances at lags `0..t`.
    pub fn autocovariances(&self) -> Vec<f64> {
        let p = self.ar.len();
        let q = self.ma.len();
        let t = self.t;
        // theta[0] = 1; psi are the moving-average representation weights.
        let theta: Vec<f64> = std::iter::once(1.0).chain(self.ma.iter().copied()).collect();
        let mut psi = vec![0.0; q + 1];
        psi[0] = 1.0;
        for j in 1..=q {
            let mut v = theta[j];
            for i in 1..=j.min(p) {
                v += self.ar[i - 1] * psi[j - i];
            }
            psi[j] = v;
        }
        let rhs = |k: usize| -> f64 {
            if k > q {
                return 0.0;
            }
            self.sigma2 * (k..=q).map(|j| theta[j] * psi[j - k]).sum::<f64>()
        };

        let mut g = vec![0.0; t.max(p + 1)];
        if p == 0 {
            for (k, slot) in g.iter_mut().enumerate() {
                *slot = rhs(k);
            }
        } else {
            // Solve the coupled equations for lags 0..=p, then recurse.
            let m = p + 1;
            let mut a = Array2::<f64>::zeros((m, m));
            let mut b = Array1::<f64>::zeros(m);
            for k in 0..m {
                a[(k, k)] += 1.0;
                for i in 1..=p {
                    let lag = k.abs_diff(i);
                    a[(k, lag)] -= self.ar[i - 1];
                }
                b[k] = rhs(k);
            }
            let lu = linalg::Lu::new(&a.view())
                .expect("stationary ARMA autocovariance system is nonsingular");
            let head = lu.solve(&b.view());
            for k in 0..m.min(g.len()) {
                g[k] = head[k];
            }
            for k in m..g.len() {
                let mut v = rhs(k);
                for i in 1..=p {
                    v += self.ar[i - 1] * g[k - i];
                }
                g[k] = v;
            }
        }
        g.truncate(t);
        g
    }

    /// The `t x t` Toeplitz covariance matrix.
    pub fn matrix(&self) -> Array2<f64> {
        let g = self.autocovariances();
        let t = self.t;
        let mut omega = Array2::zeros((t, t));
        for i in 0..t {
            for j in 0..t {
                omega[(i, j)] = g[i.abs_diff(j)];
            }
        }
        omega
    }
}

/// Stationarity via the step-down (reflection-coefficient) recursion.
fn ar_is_stationary(ar: &[f64]) -> bool {
    let mut a = ar.to_vec();
    while let Some(&kappa) = a.last() {
        if !kappa.is_finite() || kappa.abs() >= 1.0 {
            return false;
        }
        let m = a.len() - 1;
        if m == 0 {
            return true;
        }
        let denom = 1.0 - kappa * kappa;
        let prev: Vec<f64> = (0..m).map(|i| (a[i] + kappa * a[m - 1 - i]) / denom).collect();
        a = prev;
    }
    true
}

/// Builds the `t x t` covariance matrix of an ARMA specification.
pub fn arma_autocovariance(spec: &ArmaCovariance) -> Array2<f64> {
    spec.matrix()
}

/// Combination weights under a known error covariance.
///
/// Forms errors `E = y 1' - F`, whitens them with the inverse Cholesky
/// factor of `omega`, and applies the inverse-moment formula to the
/// whitened moment matrix. This solves the sum-constrained weighted
/// least-squares program exactly.
pub fn general_gls_weights(
    f: &Array2<f64>,
    y: &Array1<f64>,
    omega: &Array2<f64>,
) -> Result<CombinationWeights> {
    let (t, n) = f.dim();
    if n == 0 {
        return Err(Error::InvalidArity);
    }
    if t != y.len() {
        return Err(Error::LengthMismatch { left: t, right: y.len() });
    }
    if omega.nrows() != t || omega.ncols() != t {
        return Err(Error::LengthMismatch { left: omega.nrows(), right: t });
    }
    let e = errors_matrix(f, y);
    let l = linalg::cholesky_lower(&omega.view()).ok_or(Error::NotSpd)?;
    let white = linalg::whiten_columns(&l.view(), &e.view());
    let sigma = white.t().dot(&white) / t as f64;
    bg_weights_capped(&ErrorMomentMatrix::new(sigma)?, DEFAULT_CONDITION_CAP)
}

/// `T x n` error matrix `y 1' - F`.
pub(crate) fn errors_matrix(f: &Array2<f64>, y: &Array1<f64>) -> Array2<f64> {
    let mut e = -f.clone();
    for (mut row, &yy) in e.rows_mut().into_iter().zip(y.iter()) {
        row += yy;
    }
    e
}

/// Two-step plug-in GLS with one extra refinement pass.
pub fn two_step_gls(
    f: &Array2<f64>,
    y: &Array1<f64>,
    h: usize,
) -> Result<(CombinationWeights, f64)> {
    two_step_gls_with(f, y, h, 1)
}

/// Two-step plug-in GLS.
///
/// Starts from restricted OLS, estimates the lag-`h` AR coefficient from the
/// residuals by the no-intercept lag regression (clamped into `(-1, 1)`),
/// and re-solves the weights under the implied lag-`h` AR(1) covariance.
/// `extra_passes` repeats the estimate/solve round from the updated
/// residuals.
pub fn two_step_gls_with(
    f: &Array2<f64>,
    y: &Array1<f64>,
    h: usize,
    extra_passes: usize,
) -> Result<(CombinationWeights, f64)> {
    if h == 0 {
        return Err(Error::InvalidHorizon);
    }
    let t = f.nrows();
    let mut weights = restricted_ols_weights(f, y)?;
    let mut gamma = 0.0;
    for _ in 0..=extra_passes {
        let resid = y - &f.dot(weights.weights());
        gamma = historical_gamma_slice(resid.as_slice().expect("contiguous"), h, DEFAULT_CLAMP)?;
        let omega = ArmaCovariance::seasonal_ar1(gamma, h, 1.0, t)?.matrix();
        weights = general_gls_weights(f, y, &omega)?;
    }
    Ok((weights, gamma))
}

/// Sensitivity report for using an estimated AR(1) coefficient in GLS.
#[derive(Debug, Clone)]
pub struct RiskBoundReport {
    /// Largest absolute entry of `E'(Omega^{-1}(gamma_hat) - Omega^{-1}(gamma))E`.
    pub a_t: f64,
    /// L1 budget used in the bounds.
    pub c: f64,
    /// Risk of the weights optimal under the reference coefficient.
    pub risk_opt: f64,
    /// Reference-coefficient risk of the weights fit under the estimate.
    pub risk_hat: f64,
    /// Estimated-coefficient risk of the weights fit under the estimate.
    pub empirical_risk: f64,
    /// `|risk_opt - empirical_risk|`, `|risk_hat - empirical_risk|`,
    /// `|risk_hat - risk_opt|`.
    pub gaps: [f64; 3],
    /// `a_T c^2`, `a_T c^2`, `2 a_T c^2`.
    pub bounds: [f64; 3],
    /// Whether both weight vectors respect the L1 budget `c`.
    pub premise_holds: bool,
    /// Whether every gap is within its bound (with a small numerical slack).
    pub within_bounds: bool,
    /// Weights optimal under the reference coefficient.
    pub weights_opt: CombinationWeights,
    /// Weights fit under the estimated coefficient.
    pub weights_hat: CombinationWeights,
}

/// Compares GLS under a reference AR(1) coefficient against GLS under an
/// estimated one and checks the risk-gap bounds.
///
/// Risks are the empirical quadratic forms `w'E' Omega^{-1} E w` on the
/// supplied sample. `c` defaults to the L1 norm of the estimated-coefficient
/// weights; when the reference weights exceed that budget, the bound premise
/// fails and `premise_holds` reports it.
pub fn risk_bound_report(
    f: &Array2<f64>,
    y: &Array1<f64>,
    gamma_true: f64,
    gamma_hat: f64,
    c: Option<f64>,
) -> Result<RiskBoundReport> {
    let (t, _n) = f.dim();
    if t != y.len() {
        return Err(Error::LengthMismatch { left: t, right: y.len() });
    }
    let e = errors_matrix(f, y);
    let omega_true = ArmaCovariance::ar1(gamma_true, 1.0, t)?.matrix();
    let omega_hat = ArmaCovariance::ar1(gamma_hat, 1.0, t)?.matrix();
    let p_true = linalg::spd_inverse(&omega_true.view()).ok_or(Error::NotSpd)?;
    let p_hat = linalg::spd_inverse(&omega_hat.view()).ok_or(Error::NotSpd)?;
    let a_mat = e.t().dot(&p_true).dot(&e);
    let b_mat = e.t().dot(&p_hat).dot(&e);
    let a_t = (&b_mat - &a_mat)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));

    let w_opt = minimize_quadratic(&a_mat)?;
    let w_hat = minimize_quadratic(&b_mat)?;
    let quad = |m: &Array2<f64>, w: &CombinationWeights| -> f64 {
        let v = m.dot(w.weights());
        w.weights().dot(&v)
    };
    let risk_opt = quad(&a_mat, &w_opt);
    let risk_hat = quad(&a_mat, &w_hat);
    let empirical_risk = quad(&b_mat, &w_hat);

    let c = c.unwrap_or_else(|| w_hat.l1_norm());
    let gaps = [
        (risk_opt - empirical_risk).abs(),
        (risk_hat - empirical_risk).abs(),
        (risk_hat - risk_opt).abs(),
    ];
    let base = a_t * c * c;
    let bounds = [base, base, 2.0 * base];
    let tol = 1e-9 * (1.0 + risk_opt.abs().max(empirical_risk.abs()));
    let premise_holds = w_opt.l1_norm() <= c + 1e-12 && w_hat.l1_norm() <= c + 1e-12;
    let within_bounds = gaps.iter().zip(&bounds).all(|(g, b)| *g <= b + tol);

    Ok(RiskBoundReport {
        a_t,
        c,
        risk_opt,
        risk_hat,
        empirical_risk,
        gaps,
        bounds,
        premise_holds,
        within_bounds,
        weights_opt: w_opt,
        weights_hat: w_hat,
    })
}

/// Sum-to-one minimizer of `w' M w` via the inverse-moment formula.
fn minimize_quadratic(m: &Array2<f64>) -> Result<CombinationWeights> {
    let scaled = m / m.nrows() as f64;
    bg_weights_capped(&ErrorMomentMatrix::new(scaled)?, DEFAULT_CONDITION_CAP)
}
