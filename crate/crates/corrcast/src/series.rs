//! Calendar-indexed series, forecast panels, and horizon-aware alignment.
//!
//! Everything downstream works on two shapes of data: a target-indexed series
//! of actual values ([`ActualSeries`]) and an origin-indexed panel of point
//! forecasts ([`ForecastPanel`]). A forecast stored at origin `t` with panel
//! horizon `h` refers to the target period `t + h`; [`align`] joins the two
//! into a dense matrix sample for the estimators.
//!
//! Periods are calendar positions within a year ([`PeriodIndex`]). Quarterly
//! data is the common case, but the index carries its own periods-per-year so
//! monthly series use the same arithmetic.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};

use crate::{Error, Result};

/// Ordered map from period to value, used for error and forecast streams.
pub type SeriesMap = BTreeMap<PeriodIndex, f64>;

/// A calendar position: a year plus a 1-based period within the year.
///
/// The number of periods per year is part of the index (4 for quarters,
/// 12 for months), so arithmetic wraps correctly at year boundaries.
/// Indices are totally ordered by `(year, period)`; mixing frequencies in
/// one collection is a caller error and is not supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PeriodIndex {
    year: i32,
    period: u8,
    per_year: u8,
}

impl PeriodIndex {
    /// Generic constructor; `period` must lie in `1..=per_year`.
    pub fn new(year: i32, period: u8, per_year: u8) -> Result<Self> {
        if per_year == 0 || period == 0 || period > per_year {
            return Err(Error::InvalidPeriod(format!("{year}-{period} of {per_year}")));
        }
        Ok(Self { year, period, per_year })
    }

    /// A quarter, `q` in `1..=4`.
    pub fn quarter(year: i32, q: u8) -> Result<Self> {
        Self::new(year, q, 4)
    }

    /// A month, `m` in `1..=12`.
    pub fn month(year: i32, m: u8) -> Result<Self> {
        Self::new(year, m, 12)
    }

    /// Calendar year.
    pub fn year(&self) -> i32 {
        self.year
    }

    /// 1-based period within the year.
    pub fn period(&self) -> u8 {
        self.period
    }

    /// Number of periods per year (4 for quarters, 12 for months).
    pub fn per_year(&self) -> u8 {
        self.per_year
    }

    fn ordinal(&self) -> i64 {
        i64::from(self.year) * i64::from(self.per_year) + i64::from(self.period - 1)
    }

    /// The period `k` steps later (earlier for negative `k`).
    #[must_use]
    pub fn offset(&self, k: i64) -> Self {
        let per = i64::from(self.per_year);
        let ord = self.ordinal() + k;
        Self {
            year: ord.div_euclid(per) as i32,
            period: (ord.rem_euclid(per) + 1) as u8,
            per_year: self.per_year,
        }
    }

    /// The next period.
    #[must_use]
    pub fn succ(&self) -> Self {
        self.offset(1)
    }

    /// The previous period.
    #[must_use]
    pub fn pred(&self) -> Self {
        self.offset(-1)
    }

    /// Signed number of periods from `self` to `other`.
    ///
    /// Both indices must share the same frequency.
    pub fn periods_until(&self, other: &Self) -> i64 {
        debug_assert_eq!(self.per_year, other.per_year, "mixed period frequencies");
        other.ordinal() - self.ordinal()
    }
}

impl PartialOrd for PeriodIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PeriodIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.year, self.period, self.per_year).cmp(&(other.year, other.period, other.per_year))
    }
}

impl fmt::Display for PeriodIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.per_year {
            4 => write!(f, "{}Q{}", self.year, self.period),
            12 => write!(f, "{}M{:02}", self.year, self.period),
            p => write!(f, "{}P{}x{}", self.year, self.period, p),
        }
    }
}

impl FromStr for PeriodIndex {
    type Err = Error;

    /// Parses `2000Q1`, `1953M07`, or the generic `2000P3x6` form.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidPeriod(s.to_string());
        let (sep_pos, sep) = s
            .char_indices()
            .find(|(i, c)| *i > 0 && matches!(c, 'Q' | 'q' | 'M' | 'm' | 'P' | 'p'))
            .ok_or_else(bad)?;
        let year: i32 = s[..sep_pos].parse().map_err(|_| bad())?;
        let rest = &s[sep_pos + 1..];
        let (period_str, per_year) = match sep.to_ascii_uppercase() {
            'Q' => (rest, 4u8),
            'M' => (rest, 12u8),
            _ => {
                let (p, per) = rest.split_once(['x', 'X']).ok_or_else(bad)?;
                (p, per.parse().map_err(|_| bad())?)
            }
        };
        let period: u8 = period_str.parse().map_err(|_| bad())?;
        Self::new(year, period, per_year).map_err(|_| bad())
    }
}

/// Actual (realized) values keyed by target period, at most one per period.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActualSeries {
    values: SeriesMap,
}

impl ActualSeries {
    /// An empty series.
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a series from `(period, value)` pairs, rejecting duplicates.
    pub fn from_pairs<I: IntoIterator<Item = (PeriodIndex, f64)>>(pairs: I) -> Result<Self> {
        let mut s = Self::new();
        for (p, v) in pairs {
            s.insert(p, v)?;
        }
        Ok(s)
    }

    /// Inserts one value; a second value for the same period is an error.
    pub fn insert(&mut self, period: PeriodIndex, value: f64) -> Result<()> {
        if self.values.insert(period, value).is_some() {
            return Err(Error::DuplicateActual(period.to_string()));
        }
        Ok(())
    }

    /// Value at `period`, if recorded.
    pub fn get(&self, period: &PeriodIndex) -> Option<f64> {
        self.values.get(period).copied()
    }

    /// Number of recorded periods.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Whether the series holds no values.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Iterates in calendar order.
    pub fn iter(&self) -> impl Iterator<Item = (&PeriodIndex, &f64)> {
        self.values.iter()
    }

    /// Earliest recorded period.
    pub fn first_period(&self) -> Option<PeriodIndex> {
        self.values.keys().next().copied()
    }

    /// Latest recorded period.
    pub fn last_period(&self) -> Option<PeriodIndex> {
        self.values.keys().next_back().copied()
    }

    /// Read-only view of the underlying map.
    pub fn as_map(&self) -> &SeriesMap {
        &self.values
    }
}

/// One cell of a forecast panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelEntry {
    /// The point forecast.
    pub value: f64,
    /// True when the cell was filled by imputation rather than submitted.
    pub imputed: bool,
}

/// A panel of point forecasts from several forecasters at a common horizon.
///
/// Cells are keyed by forecast *origin*: the period the forecast was made in.
/// The implied target period of every cell is `origin + horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastPanel {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    horizon: usize,
    columns: Vec<BTreeMap<PeriodIndex, PanelEntry>>,
}

impl ForecastPanel {
    /// An empty panel with no forecasters yet.
    pub fn empty(horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidHorizon);
        }
        Ok(Self { ids: Vec::new(), index: HashMap::new(), horizon, columns: Vec::new() })
    }

    /// A panel with a fixed forecaster list; ids must be unique.
    pub fn new<S: Into<String>>(ids: Vec<S>, horizon: usize) -> Result<Self> {
        let mut panel = Self::empty(horizon)?;
        for id in ids {
            panel.add_forecaster(id.into())?;
        }
        Ok(panel)
    }

    /// Registers a forecaster and returns its column index.
    pub fn add_forecaster(&mut self, id: impl Into<String>) -> Result<usize> {
        let id = id.into();
        if self.index.contains_key(&id) {
            return Err(Error::DuplicateForecaster(id));
        }
        let idx = self.ids.len();
        self.index.insert(id.clone(), idx);
        self.ids.push(id);
        self.columns.push(BTreeMap::new());
        Ok(idx)
    }

    /// Column index of a forecaster id, if registered.
    pub fn forecaster_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Records a submitted forecast; duplicates per `(id, origin)` are errors.
    pub fn insert(&mut self, id: &str, origin: PeriodIndex, value: f64) -> Result<()> {
        let idx = self
            .forecaster_index(id)
            .ok_or_else(|| Error::UnknownForecaster(id.to_string()))?;
        self.insert_entry(idx, origin, PanelEntry { value, imputed: false })
    }

    pub(crate) fn insert_entry(
        &mut self,
        idx: usize,
        origin: PeriodIndex,
        entry: PanelEntry,
    ) -> Result<()> {
        if self.columns[idx].insert(origin, entry).is_some() {
            return Err(Error::DuplicateKey {
                id: self.ids[idx].clone(),
                origin: origin.to_string(),
            });
        }
        Ok(())
    }

    pub(crate) fn insert_entry_by_id(
        &mut self,
        id: &str,
        origin: PeriodIndex,
        entry: PanelEntry,
    ) -> Result<()> {
        let idx = self
            .forecaster_index(id)
            .ok_or_else(|| Error::UnknownForecaster(id.to_string()))?;
        self.insert_entry(idx, origin, entry)
    }

    /// Forecaster identifiers in column order.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Shared forecast horizon in periods.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of forecasters.
    pub fn n_forecasters(&self) -> usize {
        self.ids.len()
    }

    /// Entry of forecaster `idx` at `origin`, if present.
    pub fn entry(&self, idx: usize, origin: &PeriodIndex) -> Option<PanelEntry> {
        self.columns[idx].get(origin).copied()
    }

    /// All cells of one forecaster, keyed by origin.
    pub fn column(&self, idx: usize) -> &BTreeMap<PeriodIndex, PanelEntry> {
        &self.columns[idx]
    }

    /// Union of origins across all forecasters, in calendar order.
    pub fn origins(&self) -> BTreeSet<PeriodIndex> {
        self.columns.iter().flat_map(|c| c.keys().copied()).collect()
    }

    /// Total number of cells (submitted plus imputed).
    pub fn n_entries(&self) -> usize {
        self.columns.iter().map(|c| c.len()).sum()
    }

    /// Number of imputed cells.
    pub fn n_imputed(&self) -> usize {
        self.columns
            .iter()
            .map(|c| c.values().filter(|e| e.imputed).count())
            .sum()
    }
}

/// An inclusive window of periods with optional excluded sub-ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodMask {
    name: String,
    start: PeriodIndex,
    end: PeriodIndex,
    excluded: Vec<(PeriodIndex, PeriodIndex)>,
}

impl PeriodMask {
    /// A window `[start, end]`, both ends included.
    pub fn new(name: impl Into<String>, start: PeriodIndex, end: PeriodIndex) -> Result<Self> {
        if start > end {
            return Err(Error::Config(format!("mask start {start} is after end {end}")));
        }
        Ok(Self { name: name.into(), start, end, excluded: Vec::new() })
    }

    /// Adds an excluded inclusive sub-range.
    pub fn with_exclusion(mut self, from: PeriodIndex, to: PeriodIndex) -> Result<Self> {
        if from > to {
            return Err(Error::Config(format!("exclusion start {from} is after end {to}")));
        }
        self.excluded.push((from, to));
        Ok(self)
    }

    /// Display name of the mask (used as a report row label).
    pub fn name(&self) -> &str {
        &self.name
    }

    /// First period of the window.
    pub fn start(&self) -> PeriodIndex {
        self.start
    }

    /// Last period of the window.
    pub fn end(&self) -> PeriodIndex {
        self.end
    }

    /// Excluded sub-ranges.
    pub fn excluded(&self) -> &[(PeriodIndex, PeriodIndex)] {
        &self.excluded
    }

    /// True when `p` lies in the window and in no excluded sub-range.
    pub fn contains(&self, p: &PeriodIndex) -> bool {
        *p >= self.start
            && *p <= self.end
            && !self.excluded.iter().any(|(a, b)| p >= a && p <= b)
    }
}

/// True when `period` falls inside `mask` (window minus exclusions).
pub fn in_mask(period: &PeriodIndex, mask: &PeriodMask) -> bool {
    mask.contains(period)
}

/// A dense, target-ordered join of a forecast panel with actuals.
///
/// Row `t` holds the actual value of target period `targets[t]` and one
/// forecast per forecaster, each made `horizon` periods before the target.
#[derive(Debug, Clone)]
pub struct AlignedSample {
    /// Forecaster identifiers, one per matrix column.
    pub ids: Vec<String>,
    /// Forecast horizon in periods.
    pub horizon: usize,
    /// Target period of each row, strictly increasing.
    pub targets: Vec<PeriodIndex>,
    /// `T x n` forecast matrix.
    pub forecasts: Array2<f64>,
    /// Length-`T` actual values.
    pub actuals: Array1<f64>,
    /// Candidate target periods dropped for a missing forecast or actual.
    pub dropped: Vec<PeriodIndex>,
}

impl AlignedSample {
    /// Number of rows.
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    /// Whether the sample has no rows.
    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Origin period of row `row`.
    pub fn origin(&self, row: usize) -> PeriodIndex {
        self.targets[row].offset(-(self.horizon as i64))
    }

    /// `T x n` forecast-error matrix `y - f`, column per forecaster.
    pub fn errors(&self) -> Array2<f64> {
        let mut e = -self.forecasts.clone();
        for (mut row, &y) in e.rows_mut().into_iter().zip(self.actuals.iter()) {
            row += y;
        }
        e
    }

    /// True when consecutive rows are consecutive calendar periods.
    pub fn is_contiguous(&self) -> bool {
        self.targets.windows(2).all(|w| w[0].succ() == w[1])
    }

    /// Row position of a target period, if present.
    pub fn row_of(&self, target: &PeriodIndex) -> Option<usize> {
        self.targets.binary_search(target).ok()
    }
}

/// Joins a panel with actuals into an [`AlignedSample`].
///
/// Candidate rows are the target periods implied by any forecaster's origins.
/// A candidate is kept only when every forecaster submitted (or was imputed)
/// at its origin and the actual value of the target exists; all other
/// candidates are reported in `dropped`.
pub fn align(panel: &ForecastPanel, actuals: &ActualSeries) -> Result<AlignedSample> {
    if panel.n_forecasters() == 0 {
        return Err(Error::InvalidArity);
    }
    let h = panel.horizon() as i64;
    let mut kept: Vec<(PeriodIndex, Vec<f64>, f64)> = Vec::new();
    let mut dropped = Vec::new();
    for origin in panel.origins() {
        let target = origin.offset(h);
        let row: Option<Vec<f64>> = (0..panel.n_forecasters())
            .map(|i| panel.entry(i, &origin).map(|e| e.value))
            .collect();
        match (row, actuals.get(&target)) {
            (Some(row), Some(y)) => kept.push((target, row, y)),
            _ => dropped.push(target),
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let t = kept.len();
    let n = panel.n_forecasters();
    let mut forecasts = Array2::zeros((t, n));
    let mut y = Array1::zeros(t);
    let mut targets = Vec::with_capacity(t);
    for (r, (target, row, actual)) in kept.into_iter().enumerate() {
        targets.push(target);
        y[r] = actual;
        for (c, v) in row.into_iter().enumerate() {
            forecasts[(r, c)] = v;
        }
    }
    Ok(AlignedSample {
        ids: panel.ids().to_vec(),
        horizon: panel.horizon(),
        targets,
        forecasts,
        actuals: y,
        dropped,
    })
}

/// Elementwise forecast errors `y - f`.
pub fn errors_of(forecasts: &[f64], actuals: &[f64]) -> Result<Vec<f64>> {
    if forecasts.len() != actuals.len() {
        return Err(Error::LengthMismatch { left: forecasts.len(), right: actuals.len() });
    }
    Ok(actuals.iter().zip(forecasts).map(|(y, f)| y - f).collect())
}
