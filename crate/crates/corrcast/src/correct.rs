//! Serial-dependence corrections of combined forecast errors.
//!
//! When one-step forecast errors are serially correlated, the previous
//! realized error still carries information at the next origin. The
//! correction adds a multiple of that lagged error to the raw forecast:
//!
//! ```text
//! corrected forecast at origin t  =  f(t+h|t) + gamma * e(t|t-h)
//! corrected error                 =  e(t+h|t) - gamma * e(t|t-h)
//! ```
//!
//! `gamma` is either fixed ahead of time or estimated from realized history
//! as the no-intercept regression of each error on its `h`-lagged
//! predecessor ([`historical_gamma`]). [`corrected_stream`] applies either
//! mode origin by origin, using only information available at each origin.

use crate::series::{ActualSeries, PeriodIndex, PeriodMask, SeriesMap};
use crate::{Error, Result};

/// Minimum number of error pairs for a historical estimate.
pub const MIN_PAIRS: usize = 3;

/// Offset used when clamping a historical estimate into its open interval.
pub const CLAMP_NUDGE: f64 = 1e-6;

/// Default clamp bounds for historical estimates.
pub const DEFAULT_CLAMP: (f64, f64) = (-1.0, 1.0);

/// How the correction factor is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum CorrectionKind {
    /// No correction; the stream passes through unchanged.
    None,
    /// A fixed correction factor.
    Fixed {
        /// The correction factor applied at every origin.
        gamma: f64,
    },
    /// Factor re-estimated at every origin from realized errors.
    Historical {
        /// First target period whose errors enter the estimation
        /// (`None`: use all available history).
        t0: Option<PeriodIndex>,
        /// Open-interval clamp bounds for the estimate.
        clamp: (f64, f64),
        /// Periods excluded from estimation: an error pair is dropped when
        /// either member's target falls in this mask.
        exclusion: Option<PeriodMask>,
    },
}

/// A correction mode bound to a forecast horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionSpec {
    /// Correction mode.
    pub kind: CorrectionKind,
    /// Forecast horizon in periods.
    pub horizon: usize,
}

impl CorrectionSpec {
    /// Pass-through spec.
    pub fn none(horizon: usize) -> Result<Self> {
        Self::build(CorrectionKind::None, horizon)
    }

    /// Fixed-factor spec.
    pub fn fixed(horizon: usize, gamma: f64) -> Result<Self> {
        Self::build(CorrectionKind::Fixed { gamma }, horizon)
    }

    /// Historical spec with default clamp and no exclusions.
    pub fn historical(horizon: usize, t0: Option<PeriodIndex>) -> Result<Self> {
        Self::build(
            CorrectionKind::Historical { t0, clamp: DEFAULT_CLAMP, exclusion: None },
            horizon,
        )
    }

    /// Replaces the clamp bounds of a historical spec (no-op otherwise).
    #[must_use]
    pub fn with_clamp(mut self, bounds: (f64, f64)) -> Self {
        if let CorrectionKind::Historical { clamp, .. } = &mut self.kind {
            *clamp = bounds;
        }
        self
    }

    /// Sets the estimation exclusion mask of a historical spec
    /// (no-op otherwise).
    #[must_use]
    pub fn with_exclusion(mut self, mask: PeriodMask) -> Self {
        if let CorrectionKind::Historical { exclusion, .. } = &mut self.kind {
            *exclusion = Some(mask);
        }
        self
    }

    fn build(kind: CorrectionKind, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidHorizon);
        }
        Ok(Self { kind, horizon })
    }
}

/// Output of [`fixed_correction`].
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedErrors {
    /// Corrected errors, same length as the input.
    pub corrected: Vec<f64>,
    /// Number of leading entries that could not be corrected because no
    /// lagged error (observed or seeded) was available.
    pub uncorrected_head: usize,
}

/// Applies a fixed-factor correction to a contiguous error sequence.
///
/// `seed` holds pre-sample errors immediately preceding `errors[0]`
/// (its last element is the error one period before the sample). Leading
/// entries whose lag would reach before the seed are passed through and
/// counted in `uncorrected_head`.
pub fn fixed_correction(
    errors: &[f64],
    gamma: f64,
    h: usize,
    seed: &[f64],
) -> Result<CorrectedErrors> {
    if h == 0 {
        return Err(Error::InvalidHorizon);
    }
    let mut corrected = Vec::with_capacity(errors.len());
    let mut uncorrected_head = 0usize;
    for (t, &e) in errors.iter().enumerate() {
        let lagged = if t >= h {
            Some(errors[t - h])
        } else {
            // t - h is negative; look it up from the tail of the seed.
            seed.len().checked_sub(h - t).map(|i| seed[i])
        };
        match lagged {
            Some(prev) => corrected.push(e - gamma * prev),
            None => {
                corrected.push(e);
                uncorrected_head += 1;
            }
        }
    }
    Ok(CorrectedErrors { corrected, uncorrected_head })
}

pub(crate) fn clamp_open(g: f64, (lo, hi): (f64, f64)) -> f64 {
    if g >= hi {
        hi - CLAMP_NUDGE
    } else if g <= lo {
        lo + CLAMP_NUDGE
    } else {
        g
    }
}

/// Historically optimal correction factor from a calendar-keyed error stream.
///
/// Forms all pairs `(e(q), e(q-h))` present in `errors`, drops a pair when
/// either member's target falls in `exclusion`, and returns the no-intercept
/// regression slope
///
/// ```text
/// gamma = sum e(q) e(q-h) / sum e(q-h)^2
/// ```
///
/// clamped into the open interval `clamp` by [`CLAMP_NUDGE`]. At least
/// [`MIN_PAIRS`] usable pairs are required. Callers enforce observability by
/// passing only errors realized at the estimation origin.
pub fn historical_gamma(
    errors: &SeriesMap,
    h: usize,
    clamp: (f64, f64),
    exclusion: Option<&PeriodMask>,
) -> Result<f64> {
    if h == 0 {
        return Err(Error::InvalidHorizon);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let mut pairs = 0usize;
    for (&q, &e) in errors {
        let lag_q = q.offset(-(h as i64));
        let Some(&e_lag) = errors.get(&lag_q) else { continue };
        if let Some(mask) = exclusion {
            if mask.contains(&q) || mask.contains(&lag_q) {
                continue;
            }
        }
        num += e * e_lag;
        den += e_lag * e_lag;
        pairs += 1;
    }
    if pairs < MIN_PAIRS {
        return Err(Error::InsufficientHistory { have: pairs, need: MIN_PAIRS });
    }
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(clamp_open(num / den, clamp))
}

/// [`historical_gamma`] over a contiguous slice (index is the clock).
pub fn historical_gamma_slice(errors: &[f64], h: usize, clamp: (f64, f64)) -> Result<f64> {
    if h == 0 {
        return Err(Error::InvalidHorizon);
    }
    if errors.len() < h + MIN_PAIRS {
        return Err(Error::InsufficientHistory {
            have: errors.len().saturating_sub(h),
            need: MIN_PAIRS,
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for t in h..errors.len() {
        num += errors[t] * errors[t - h];
        den += errors[t - h] * errors[t - h];
    }
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(clamp_open(num / den, clamp))
}

/// A corrected forecast stream, origin by origin.
#[derive(Debug, Clone)]
pub struct CorrectedForecastStream {
    /// Forecast origins, ascending.
    pub origins: Vec<PeriodIndex>,
    /// Forecast horizon in periods.
    pub horizon: usize,
    /// Raw combined forecasts as supplied.
    pub raw: Vec<f64>,
    /// Additive corrections (zero where no correction could be applied).
    pub correction: Vec<f64>,
    /// `raw + correction`.
    pub corrected: Vec<f64>,
    /// Correction factor used at each origin; `None` where the mode applies
    /// no factor (pass-through, or insufficient history).
    pub gamma_path: Vec<Option<f64>>,
    /// Index of the first origin whose correction was actually applied.
    pub first_corrected: Option<usize>,
}

impl CorrectedForecastStream {
    /// Corrected forecasts keyed by target period.
    pub fn corrected_by_target(&self) -> SeriesMap {
        self.origins
            .iter()
            .zip(&self.corrected)
            .map(|(o, &f)| (o.offset(self.horizon as i64), f))
            .collect()
    }
}

/// Applies a correction spec to a raw combined-forecast stream.
///
/// `raw` maps each forecast origin to the combined forecast made there for
/// `origin + h`. Realized errors are derived from `actuals` wherever the
/// forecast made `h` periods earlier exists; `seed_errors` supplies
/// pre-sample errors keyed by their target period. At every origin only
/// errors with target at or before that origin are used, so the stream never
/// looks ahead. Origins where no lagged error (and, in historical mode, no
/// estimate) is available pass through uncorrected.
pub fn corrected_stream(
    raw: &SeriesMap,
    actuals: &ActualSeries,
    spec: &CorrectionSpec,
    seed_errors: &SeriesMap,
) -> Result<CorrectedForecastStream> {
    if raw.is_empty() {
        return Err(Error::Empty);
    }
    let h = spec.horizon as i64;

    // Realized errors keyed by target; seeds fill targets the raw stream
    // cannot produce (computed values win on overlap).
    let mut errors: SeriesMap = seed_errors.clone();
    for (&origin, &f) in raw {
        let target = origin.offset(h);
        if let Some(y) = actuals.get(&target) {
            errors.insert(target, y - f);
        }
    }

    let n = raw.len();
    let mut origins = Vec::with_capacity(n);
    let mut raw_v = Vec::with_capacity(n);
    let mut correction = Vec::with_capacity(n);
    let mut corrected = Vec::with_capacity(n);
    let mut gamma_path = Vec::with_capacity(n);
    let mut first_corrected = None;

    for (&origin, &f) in raw {
        // The lagged error usable at this origin targets the origin itself.
        let e_prev = errors.get(&origin).copied();
        let gamma = match &spec.kind {
            CorrectionKind::None => None,
            CorrectionKind::Fixed { gamma } => Some(*gamma),
            CorrectionKind::Historical { t0, clamp, exclusion } => {
                let observable: SeriesMap = errors
                    .range(..=origin)
                    .filter(|(q, _)| t0.map_or(true, |start| **q >= start))
                    .map(|(q, e)| (*q, *e))
                    .collect();
                historical_gamma(&observable, spec.horizon, *clamp, exclusion.as_ref()).ok()
            }
        };
        let applied = !matches!(spec.kind, CorrectionKind::None)
            && gamma.is_some()
            && e_prev.is_some();
        let b = if applied { gamma.unwrap() * e_prev.unwrap() } else { 0.0 };
        if applied {
            first_corrected.get_or_insert(origins.len());
        }
        origins.push(origin);
        raw_v.push(f);
        correction.push(b);
        corrected.push(f + b);
        gamma_path.push(gamma);
    }

    Ok(CorrectedForecastStream {
        origins,
        horizon: spec.horizon,
        raw: raw_v,
        correction,
        corrected,
        gamma_path,
        first_corrected,
    })
}
