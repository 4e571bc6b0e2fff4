//! Forecast evaluation: MSFE, autocorrelation, factor grids, and
//! rolling-origin method comparisons.
//!
//! The workhorse identity: with `e` the raw combined errors and `c(g) =
//! e(t) - g e(t-h)` the corrected ones, the corrected MSFE over a fixed
//! evaluation set is an exact quadratic in the factor,
//!
//! ```text
//! MSFE(g) = A - 2 B g + C g^2,
//!   A = mean e(t)^2,  B = mean e(t) e(t-h),  C = mean e(t-h)^2,
//! ```
//!
//! so a whole factor grid can be scored from three sufficient statistics
//! ([`CorrStats`]), and the minimizing factor is the vertex `B / C`. At the
//! vertex the corrected errors are exactly orthogonal to the lagged raw
//! errors (`mean c(t) e(t-h) = 0`), the sample analogue of the corrected
//! series carrying no usable lag-`h` correlation.
//!
//! Evaluation sets are pairs: a target enters a row only when both its own
//! error and the lag-`h` error are realized, so every column of a report is
//! scored on the same sample and the factor-zero column is exactly `1.0`.
//! Lagged errors are taken from realized history even when the lag period
//! itself is outside the evaluation window; the window governs which targets
//! are scored, not which past values may be looked up.
//!
//! Factor-grid cells are RMSFE ratios (square roots of MSFE ratios);
//! method-comparison relatives are plain MSFE ratios.

use ndarray::s;

use crate::combine::{combine, restricted_ols_weights};
use crate::correct::{clamp_open, historical_gamma, DEFAULT_CLAMP};
use crate::gls::{gls_forecast, hildreth_lu};
use crate::series::{
    in_mask, ActualSeries, AlignedSample, ForecastPanel, PeriodIndex, PeriodMask, SeriesMap,
};
use crate::{Error, Result};

/// Fewest evaluation pairs before a grid cell is reported at all.
pub const MIN_EVAL_PAIRS: usize = 4;

/// Mean squared forecast error.
pub fn msfe(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::Empty);
    }
    Ok(errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64)
}

/// Root mean squared forecast error.
pub fn rmsfe(errors: &[f64]) -> Result<f64> {
    msfe(errors).map(f64::sqrt)
}

/// Sample autocorrelation function with confidence bands.
#[derive(Debug, Clone)]
pub struct AcfResult {
    /// `rho[k]` is the lag-`k` autocorrelation; `rho[0] == 1`.
    pub rho: Vec<f64>,
    /// Two-sided 95% band for white noise, `1.96 / sqrt(T)`.
    pub band: f64,
    /// Series length.
    pub n: usize,
}

/// Centered sample autocorrelations up to `max_lag`.
///
/// Uses the full-sample mean and variance at every lag, which keeps the
/// sequence positive semi-definite and every value in `[-1, 1]`.
pub fn acf(series: &[f64], max_lag: usize) -> Result<AcfResult> {
    let n = series.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    if max_lag >= n {
        return Err(Error::InsufficientData { have: n, need: max_lag + 1 });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let denom: f64 = series.iter().map(|x| (x - mean) * (x - mean)).sum();
    if denom == 0.0 {
        return Err(Error::ConstantSeries);
    }
    let rho = (0..=max_lag)
        .map(|k| {
            let num: f64 = (k..n)
                .map(|t| (series[t] - mean) * (series[t - k] - mean))
                .sum();
            num / denom
        })
        .collect();
    Ok(AcfResult { rho, band: 1.96 / (n as f64).sqrt(), n })
}

/// Sufficient statistics of the corrected-MSFE quadratic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrStats {
    /// Mean squared current error.
    pub a: f64,
    /// Mean cross product of current and lagged error.
    pub b: f64,
    /// Mean squared lagged error.
    pub c: f64,
    /// Number of evaluation pairs.
    pub n: usize,
}

impl CorrStats {
    /// Accumulates statistics from `(error, lagged error)` pairs.
    ///
    /// Returns `None` when the iterator is empty.
    pub fn from_pairs<I: IntoIterator<Item = (f64, f64)>>(pairs: I) -> Option<Self> {
        let (mut a, mut b, mut c, mut n) = (0.0, 0.0, 0.0, 0usize);
        for (e, lag) in pairs {
            a += e * e;
            b += e * lag;
            c += lag * lag;
            n += 1;
        }
        if n == 0 {
            return None;
        }
        let m = n as f64;
        Some(Self { a: a / m, b: b / m, c: c / m, n })
    }

    /// Builds the evaluation set from an error series keyed by target.
    ///
    /// A target `tau` contributes iff it lies in `window` (always, when no
    /// window is given) and both `e(tau)` and `e(tau - h)` are present. The
    /// lagged value is looked up regardless of the window.
    pub fn from_series(
        errors: &SeriesMap,
        h: usize,
        window: Option<&PeriodMask>,
    ) -> Option<Self> {
        Self::from_pairs(errors.iter().filter_map(|(tau, &e)| {
            if window.is_some_and(|m| !in_mask(tau, m)) {
                return None;
            }
            let lag = errors.get(&tau.offset(-(h as i64)))?;
            Some((e, *lag))
        }))
    }

    /// Corrected MSFE at factor `g`.
    pub fn msfe_at(&self, g: f64) -> f64 {
        self.a - 2.0 * self.b * g + self.c * g * g
    }

    /// Mean cross product of corrected and lagged raw errors at factor `g`.
    ///
    /// Zero exactly at the [vertex](Self::vertex).
    pub fn cross_at(&self, g: f64) -> f64 {
        self.b - self.c * g
    }

    /// The unconstrained minimizing factor `B / C`, if defined.
    pub fn vertex(&self) -> Option<f64> {
        if self.c > 0.0 {
            Some(self.b / self.c)
        } else {
            None
        }
    }
}

/// Builds corrected-MSFE statistics over an evaluation window.
pub fn corrected_msfe_stats(
    errors: &SeriesMap,
    h: usize,
    window: Option<&PeriodMask>,
) -> Result<CorrStats> {
    if h == 0 {
        return Err(Error::InvalidHorizon);
    }
    CorrStats::from_series(errors, h, window).ok_or(Error::Empty)
}

/// Errors of the cross-sectional mean forecast, keyed by target period.
///
/// At each origin the mean is taken over the forecasters present there
/// (imputed entries count as present), so ragged panels average over
/// whoever responded. Targets without an actual are skipped.
pub fn mean_error_series(panel: &ForecastPanel, actuals: &ActualSeries) -> SeriesMap {
    let h = panel.horizon() as i64;
    let mut out = SeriesMap::new();
    for origin in panel.origins() {
        let mut sum = 0.0;
        let mut count = 0usize;
        for idx in 0..panel.ids().len() {
            if let Some(entry) = panel.entry(idx, &origin) {
                sum += entry.value;
                count += 1;
            }
        }
        if count == 0 {
            continue;
        }
        let target = origin.offset(h);
        if let Some(y) = actuals.get(&target) {
            out.insert(target, y - sum / count as f64);
        }
    }
    out
}

/// Options for the recursive-factor column of a grid report.
#[derive(Debug, Clone, Default)]
pub struct HistOptions {
    /// Earliest target admitted into factor estimation.
    pub t0: Option<PeriodIndex>,
    /// Estimation window excluded from the factor regression; pairs touching
    /// it are dropped from estimation (scoring is governed by the row mask).
    pub exclusion: Option<PeriodMask>,
}

/// One period row of a factor-grid report.
#[derive(Debug, Clone)]
pub struct EvaluationRow {
    /// Window label.
    pub period: String,
    /// Evaluation pairs in the window.
    pub n_pairs: usize,
    /// Whether the window held fewer than [`MIN_EVAL_PAIRS`] pairs.
    pub insufficient: bool,
    /// Uncorrected MSFE over the pairs, when sufficient.
    pub baseline_msfe: Option<f64>,
    /// The quadratic's sufficient statistics, when sufficient.
    pub stats: Option<CorrStats>,
    /// Corrected-over-uncorrected RMSFE ratio per grid factor.
    pub relative: Vec<Option<f64>>,
    /// RMSFE ratio for the recursive historically-estimated factor.
    pub hist_relative: Option<f64>,
    /// Targets scored with the zero-factor fallback before enough history.
    pub hist_fallbacks: usize,
    /// Index into `factors` of the smallest ratio, at full precision.
    pub best_factor: Option<usize>,
}

/// RMSFE ratios over a factor grid, one row per evaluation window.
#[derive(Debug, Clone)]
pub struct EvaluationReport {
    /// Correction horizon in periods.
    pub horizon: usize,
    /// The factor grid shared by all rows.
    pub factors: Vec<f64>,
    /// One row per requested window.
    pub rows: Vec<EvaluationRow>,
}

/// Scores a factor grid over several evaluation windows.
///
/// Each row shares one evaluation set (targets in the window with a realized
/// lag-`h` error), so the `0.0` column is exactly `1.0`. Cells are RMSFE
/// ratios against the uncorrected column. When `hist` is given, an extra
/// column re-estimates the factor at each origin from the errors observable
/// then — the no-intercept lag regression, clamped into `(-1, 1)` — falling
/// back to `0.0` until at least three pairs exist.
pub fn factor_grid_report(
    errors: &SeriesMap,
    h: usize,
    factors: &[f64],
    windows: &[PeriodMask],
    hist: Option<&HistOptions>,
) -> Result<EvaluationReport> {
    if h == 0 {
        return Err(Error::InvalidHorizon);
    }
    if factors.is_empty() {
        return Err(Error::Config("empty factor grid".into()));
    }
    if windows.is_empty() {
        return Err(Error::Config("no evaluation windows".into()));
    }

    let mut rows = Vec::with_capacity(windows.len());
    for window in windows {
        let pairs: Vec<(PeriodIndex, f64, f64)> = errors
            .iter()
            .filter_map(|(tau, &e)| {
                if !window.contains(tau) {
                    return None;
                }
                let lag = errors.get(&tau.offset(-(h as i64)))?;
                Some((*tau, e, *lag))
            })
            .collect();
        let n_pairs = pairs.len();
        if n_pairs < MIN_EVAL_PAIRS {
            rows.push(EvaluationRow {
                period: window.name().to_string(),
                n_pairs,
                insufficient: true,
                baseline_msfe: None,
                stats: None,
                relative: vec![None; factors.len()],
                hist_relative: None,
                hist_fallbacks: 0,
                best_factor: None,
            });
            continue;
        }

        let stats = CorrStats::from_pairs(pairs.iter().map(|&(_, e, l)| (e, l)))
            .expect("non-empty pairs");
        let baseline = stats.msfe_at(0.0);
        let ratio = |m: f64| -> Option<f64> {
            if baseline > 0.0 {
                Some((m / baseline).sqrt())
            } else {
                None
            }
        };
        let relative: Vec<Option<f64>> =
            factors.iter().map(|&g| ratio(stats.msfe_at(g))).collect();
        let best_factor = relative
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.map(|v| (i, v)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite ratios"))
            .map(|(i, _)| i);

        let (hist_relative, hist_fallbacks) = match hist {
            None => (None, 0),
            Some(opts) => {
                let mut sq = 0.0;
                let mut fallbacks = 0usize;
                for &(tau, e, lag) in &pairs {
                    let origin = tau.offset(-(h as i64));
                    let visible: SeriesMap = errors
                        .range(..=origin)
                        .filter(|(t, _)| opts.t0.map_or(true, |t0| **t >= t0))
                        .map(|(t, v)| (*t, *v))
                        .collect();
                    let g = match historical_gamma(
                        &visible,
                        h,
                        DEFAULT_CLAMP,
                        opts.exclusion.as_ref(),
                    ) {
                        Ok(g) => g,
                        Err(_) => {
                            fallbacks += 1;
                            0.0
                        }
                    };
                    let c = e - g * lag;
                    sq += c * c;
                }
                (ratio(sq / n_pairs as f64), fallbacks)
            }
        };

        rows.push(EvaluationRow {
            period: window.name().to_string(),
            n_pairs,
            insufficient: false,
            baseline_msfe: Some(baseline),
            stats: Some(stats),
            relative,
            hist_relative,
            hist_fallbacks,
            best_factor,
        });
    }

    Ok(EvaluationReport { horizon: h, factors: factors.to_vec(), rows })
}

/// [`factor_grid_report`] on the cross-sectional mean forecast of a panel.
pub fn factor_grid_from_panel(
    panel: &ForecastPanel,
    actuals: &ActualSeries,
    factors: &[f64],
    windows: &[PeriodMask],
    hist: Option<&HistOptions>,
) -> Result<EvaluationReport> {
    let errors = mean_error_series(panel, actuals);
    factor_grid_report(&errors, panel.horizon(), factors, windows, hist)
}

/// Options for [`method_comparison`].
#[derive(Debug, Clone)]
pub struct MethodOptions {
    /// Factor for the fixed-correction rows.
    pub fixed_gamma: f64,
    /// Grid pitch the trained factor is snapped to (0 disables snapping).
    pub opt_grid_step: f64,
    /// Fewest training rows before the first scored origin.
    pub min_train: usize,
    /// Earliest target admitted into any training window.
    pub t0: Option<PeriodIndex>,
    /// Whether to fit the rolling grid-search GLS row (the slowest method).
    pub include_gls: bool,
    /// Whether to score each forecaster alone.
    pub include_individuals: bool,
    /// Estimation exclusion window for the historical-factor rows.
    pub exclusion: Option<PeriodMask>,
    /// Clamp interval for estimated factors.
    pub clamp: (f64, f64),
    /// Grid pitch of the rolling grid-search GLS fits.
    pub hl_grid_step: f64,
}

impl Default for MethodOptions {
    fn default() -> Self {
        Self {
            fixed_gamma: 0.5,
            opt_grid_step: 0.05,
            min_train: 8,
            t0: None,
            include_gls: true,
            include_individuals: true,
            exclusion: None,
            clamp: DEFAULT_CLAMP,
            hl_grid_step: 0.05,
        }
    }
}

/// One method's score in a comparison.
#[derive(Debug, Clone)]
pub struct MethodRow {
    /// Method label.
    pub label: String,
    /// MSFE over the shared evaluation rows.
    pub msfe: f64,
    /// MSFE relative to the uncorrected equal-weight mean.
    pub relative: f64,
}

/// Rolling-origin comparison of combination and correction methods.
#[derive(Debug, Clone)]
pub struct MethodComparison {
    /// First scored target.
    pub eval_start: PeriodIndex,
    /// Number of scored targets, shared by every row.
    pub n_eval: usize,
    /// One row per method.
    pub rows: Vec<MethodRow>,
}

/// Per-origin correction factors for one error stream.
struct FactorEngine<'a> {
    errs: &'a [f64],
    start: usize,
    h: usize,
    clamp: (f64, f64),
    snap: f64,
    err_map: SeriesMap,
    exclusion: Option<&'a PeriodMask>,
}

impl<'a> FactorEngine<'a> {
    fn new(
        errs: &'a [f64],
        start: usize,
        targets: &[PeriodIndex],
        opts: &'a MethodOptions,
    ) -> Self {
        let err_map = targets
            .iter()
            .enumerate()
            .skip(start)
            .map(|(r, p)| (*p, errs[r]))
            .collect();
        Self {
            errs,
            start,
            h: 0, // set by the caller
            clamp: opts.clamp,
            snap: opts.opt_grid_step,
            err_map,
            exclusion: opts.exclusion.as_ref(),
        }
    }

    /// Vertex of the training quadratic, clamped and snapped to the grid.
    fn trained(&self, r: usize) -> f64 {
        let lo = self.start + self.h;
        let hi = r.saturating_sub(self.h);
        if hi < lo {
            return 0.0;
        }
        CorrStats::from_pairs((lo..=hi).map(|j| (self.errs[j], self.errs[j - self.h])))
            .and_then(|s| s.vertex())
            .map(|v| {
                let c = clamp_open(v, self.clamp);
                if self.snap > 0.0 {
                    clamp_open((c / self.snap).round() * self.snap, self.clamp)
                } else {
                    c
                }
            })
            .unwrap_or(0.0)
    }

    /// No-intercept lag regression on errors observable at the origin.
    fn historical(&self, origin: PeriodIndex) -> f64 {
        let visible: SeriesMap = self
            .err_map
            .range(..=origin)
            .map(|(p, v)| (*p, *v))
            .collect();
        historical_gamma(&visible, self.h, self.clamp, self.exclusion).unwrap_or(0.0)
    }
}

/// Scores combination and correction methods on one shared evaluation set.
///
/// The sample must be contiguous in its target periods, since corrections
/// and quasi-differences lag by rows. All adaptive methods are fit on
/// expanding windows of targets in `[t0, origin]` (no lookahead):
///
/// * each forecaster alone and their equal-weight mean;
/// * the mean corrected by a fixed factor, by the factor minimizing the
///   training-window corrected MSFE (the quadratic's clamped vertex, snapped
///   to a grid), and by the recursively re-estimated historical factor;
/// * restricted least-squares weights re-fit at every origin, plus the same
///   three corrections applied to that rolling forecast's errors;
/// * grid-search GLS weights-plus-factor re-fit at every origin.
///
/// Scoring starts at the later of `eval_start` and the first target every
/// method can reach with `min_train` training rows.
pub fn method_comparison(
    sample: &AlignedSample,
    eval_start: PeriodIndex,
    opts: &MethodOptions,
) -> Result<MethodComparison> {
    let t = sample.len();
    let n = sample.ids.len();
    let h = sample.horizon;
    if t == 0 {
        return Err(Error::Empty);
    }
    if !sample.is_contiguous() {
        return Err(Error::NonContiguousSample);
    }

    let t0_row = match opts.t0 {
        None => 0,
        Some(t0) => match sample.targets.iter().position(|p| *p >= t0) {
            Some(r) => r,
            None => return Err(Error::InsufficientData { have: t, need: t + 1 }),
        },
    };

    let errors = sample.errors();
    let mean_err: Vec<f64> = (0..t).map(|r| errors.row(r).sum() / n as f64).collect();

    // Rolling least-squares streams start once the training window from
    // t0_row holds enough rows; their corrected variants lag them by h.
    let train_need_ols = opts.min_train.max(n + 2);
    let ols_start = t0_row + h + train_need_ols - 1;
    let train_need_gls = opts.min_train.max(n + h + 2);
    let gls_start = t0_row + h + train_need_gls - 1;

    let mut first = ols_start + h;
    if opts.include_gls {
        first = first.max(gls_start);
    }
    first = first.max(t0_row + h);
    while first < t && sample.targets[first] < eval_start {
        first += 1;
    }
    if first >= t {
        return Err(Error::InsufficientData { have: t, need: first + 1 });
    }
    let eval_rows: Vec<usize> = (first..t).collect();
    let n_eval = eval_rows.len();

    // Rolling restricted OLS errors for every row from ols_start on.
    let mut ols_err = vec![f64::NAN; t];
    for r in ols_start..t {
        let train_f = sample.forecasts.slice(s![t0_row..=r - h, ..]).to_owned();
        let train_y = sample.actuals.slice(s![t0_row..=r - h]).to_owned();
        let w = restricted_ols_weights(&train_f, &train_y)?;
        let fc = combine(&w, &sample.forecasts.row(r).to_vec())?;
        ols_err[r] = sample.actuals[r] - fc;
    }

    let mut gls_err = vec![f64::NAN; t];
    if opts.include_gls {
        for &r in &eval_rows {
            let train_f = sample.forecasts.slice(s![t0_row..=r - h, ..]).to_owned();
            let train_y = sample.actuals.slice(s![t0_row..=r - h]).to_owned();
            let fit = hildreth_lu(&train_f, &train_y, h, opts.hl_grid_step)?;
            let fc = gls_forecast(
                &fit,
                &sample.forecasts.row(r).to_vec(),
                &sample.forecasts.row(r - h).to_vec(),
                sample.actuals[r - h],
            )?;
            gls_err[r] = sample.actuals[r] - fc;
        }
    }

    let mut mean_engine = FactorEngine::new(&mean_err, t0_row, &sample.targets, opts);
    mean_engine.h = h;
    let mut ols_engine = FactorEngine::new(&ols_err, ols_start, &sample.targets, opts);
    ols_engine.h = h;

    let collect =
        |f: &dyn Fn(usize) -> f64| -> Vec<f64> { eval_rows.iter().map(|&r| f(r)).collect() };

    let mut rows: Vec<(String, f64)> = Vec::new();
    if opts.include_individuals {
        for (j, id) in sample.ids.iter().enumerate() {
            rows.push((id.clone(), msfe(&collect(&|r| errors[(r, j)]))?));
        }
    }
    rows.push(("mean".into(), msfe(&collect(&|r| mean_err[r]))?));
    rows.push((
        format!("mean+fixed({:.2})", opts.fixed_gamma),
        msfe(&collect(&|r| mean_err[r] - opts.fixed_gamma * mean_err[r - h]))?,
    ));
    rows.push((
        "mean+trained".into(),
        msfe(&collect(&|r| mean_err[r] - mean_engine.trained(r) * mean_err[r - h]))?,
    ));
    rows.push((
        "mean+hist".into(),
        msfe(&collect(&|r| {
            mean_err[r] - mean_engine.historical(sample.origin(r)) * mean_err[r - h]
        }))?,
    ));
    rows.push(("ols".into(), msfe(&collect(&|r| ols_err[r]))?));
    rows.push((
        format!("ols+fixed({:.2})", opts.fixed_gamma),
        msfe(&collect(&|r| ols_err[r] - opts.fixed_gamma * ols_err[r - h]))?,
    ));
    rows.push((
        "ols+trained".into(),
        msfe(&collect(&|r| ols_err[r] - ols_engine.trained(r) * ols_err[r - h]))?,
    ));
    rows.push((
        "ols+hist".into(),
        msfe(&collect(&|r| {
            ols_err[r] - ols_engine.historical(sample.origin(r)) * ols_err[r - h]
        }))?,
    ));
    if opts.include_gls {
        rows.push(("gls".into(), msfe(&collect(&|r| gls_err[r]))?));
    }

    let base = rows
        .iter()
        .find(|(l, _)| l == "mean")
        .map(|(_, m)| *m)
        .expect("mean row present");
    let rows = rows
        .into_iter()
        .map(|(label, m)| MethodRow {
            label,
            msfe: m,
            relative: if base > 0.0 { m / base } else { f64::NAN },
        })
        .collect();

    Ok(MethodComparison { eval_start: sample.targets[first], n_eval, rows })
}
