//! Combination of point forecasts with corrections for serially dependent errors.
//!
//! The crate covers the full pipeline from raw survey-style forecast files to
//! evaluation tables:
//!
//! * calendar-indexed series and forecast panels with horizon-aware alignment
//!   ([`series`]),
//! * combination weights: equal, inverse-moment optimal, and sum-constrained
//!   least squares ([`combine`]),
//! * serial-dependence corrections of combined forecast errors with fixed or
//!   historically estimated correction factors ([`correct`]),
//! * GLS weight estimation under autoregressive error covariance, including a
//!   grid-search fit, a plug-in two-step fit, and a risk-bound diagnostic
//!   ([`gls`]),
//! * rolling-origin evaluation: MSFE grids over correction factors, method
//!   comparison tables, and autocorrelation diagnostics ([`eval`]),
//! * ingestion of survey CSV panels, forecaster selection, forward imputation,
//!   and an embedded demonstration dataset ([`ingest`], [`demo`]).
//!
//! All estimators consume plain `ndarray` matrices or the calendar-keyed
//! types from [`series`]; nothing here performs network access.

#![warn(missing_docs)]

pub mod combine;
pub mod config;
pub mod correct;
pub mod demo;
pub mod eval;
pub mod gls;
pub mod ingest;
pub mod linalg;
pub mod report;
pub mod series;

pub use combine::{
    bg_weights, combine, equal_weights, error_moments, error_moments_centered,
    restricted_ols_weights, CombinationWeights, ErrorMomentMatrix,
};
pub use correct::{
    corrected_stream, fixed_correction, historical_gamma, CorrectedErrors,
    CorrectedForecastStream, CorrectionKind, CorrectionSpec,
};
pub use eval::{
    acf, factor_grid_report, method_comparison, msfe, rmsfe, AcfResult, CorrStats,
    EvaluationReport, MethodComparison,
};
pub use gls::{
    arma_autocovariance, general_gls_weights, gls_forecast, hildreth_lu, risk_bound_report,
    two_step_gls, Ar1GlsFit, ArmaCovariance, RiskBoundReport,
};
pub use series::{
    align, errors_of, in_mask, ActualSeries, AlignedSample, ForecastPanel, PanelEntry,
    PeriodIndex, PeriodMask,
};

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    /// The forecast panel and the actuals never overlap with every
    /// forecaster present, so no usable row can be formed.
    #[error("forecast panel and actuals share no usable quarter")]
    EmptyIntersection,

    /// Two sequences that must be equally long are not.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch {
        /// Length of the first sequence.
        left: usize,
        /// Length of the second sequence.
        right: usize,
    },

    /// An operation over `n` forecasters was asked for with `n == 0`.
    #[error("at least one forecaster is required")]
    InvalidArity,

    /// Forecast horizons must be at least one period.
    #[error("horizon must be at least 1")]
    InvalidHorizon,

    /// A moment matrix is numerically singular.
    #[error("moment matrix is numerically singular (condition estimate {cond:.3e} exceeds {cap:.3e})")]
    SingularMoment {
        /// Estimated 1-norm condition number.
        cond: f64,
        /// Configured condition cap.
        cap: f64,
    },

    /// The regression design matrix has (numerically) deficient rank.
    #[error("design matrix is rank deficient over this sample")]
    RankDeficient,

    /// Too few usable error pairs to estimate a correction factor.
    #[error("insufficient history: {have} usable pairs, need at least {need}")]
    InsufficientHistory {
        /// Usable pairs found.
        have: usize,
        /// Minimum required.
        need: usize,
    },

    /// Every lagged error in the estimation window is zero.
    #[error("all lagged errors are zero; the correction factor is undefined")]
    ZeroDenominator,

    /// Not enough observations for the requested fit.
    #[error("insufficient data: {have} rows, need at least {need}")]
    InsufficientData {
        /// Rows available.
        have: usize,
        /// Minimum required.
        need: usize,
    },

    /// The autoregressive polynomial has a root on or inside the unit circle.
    #[error("autoregressive parameters are not stationary")]
    NonStationary,

    /// A covariance matrix is not symmetric positive definite.
    #[error("covariance matrix is not symmetric positive definite")]
    NotSpd,

    /// A matrix that must be symmetric is not.
    #[error("matrix is not symmetric")]
    NotSymmetric,

    /// Combination weights must sum to one.
    #[error("weights must sum to 1 (got {0})")]
    WeightSum(f64),

    /// An operation on an empty series.
    #[error("series is empty")]
    Empty,

    /// Autocorrelation of a constant series is undefined.
    #[error("series is constant; autocorrelation is undefined")]
    ConstantSeries,

    /// Rolling fits need rows at consecutive periods.
    #[error("sample rows are not consecutive periods; impute or restrict the panel first")]
    NonContiguousSample,

    /// A required column is missing from an input file header.
    #[error("malformed header: {0}")]
    MalformedHeader(String),

    /// A cell that should hold a number (or a missing-value sentinel) does not.
    #[error("row {row}, column {column}: cannot parse {value:?} as a number")]
    UnparseableNumber {
        /// 1-based data row.
        row: usize,
        /// Column name.
        column: String,
        /// Offending cell content.
        value: String,
    },

    /// The same forecaster submitted twice for one origin.
    #[error("duplicate record: forecaster {id} at origin {origin}")]
    DuplicateKey {
        /// Forecaster identifier.
        id: String,
        /// Origin period.
        origin: String,
    },

    /// Two values for the same period in an actuals series.
    #[error("duplicate actual for {0}")]
    DuplicateActual(String),

    /// A forecaster identifier was registered twice.
    #[error("duplicate forecaster id {0}")]
    DuplicateForecaster(String),

    /// A forecaster identifier is not part of the panel.
    #[error("unknown forecaster id {0}")]
    UnknownForecaster(String),

    /// A period string such as `2000Q1` or `1953M07` could not be parsed.
    #[error("invalid period {0:?}: expected e.g. 2000Q1 or 1953M07")]
    InvalidPeriod(String),

    /// Invalid configuration (bad key, bad value, inconsistent settings).
    #[error("config: {0}")]
    Config(String),

    /// Invalid input data (unreadable file, inconsistent records).
    #[error("data: {0}")]
    Data(String),

    /// Wrapped I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Wrapped CSV failure.
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
