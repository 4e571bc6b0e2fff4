//! A self-contained worked example on a classic published dataset.
//!
//! Two forecasting methods — exponential smoothing (`ES`) and a Box–Jenkins
//! model (`BJ`) — produced one-step-ahead monthly forecasts of airline
//! passenger numbers through 1953. Their twelve forecast errors are combined
//! with equal weights and then corrected with a fixed factor of one half
//! applied to the previous month's combined error, seeded with the realized
//! December 1952 error. Every number in the resulting table, including the
//! four mean-squared-error summaries, is reproduced exactly by the library
//! pipeline, which makes this dataset the standard smoke test for the whole
//! combine-then-correct path:
//!
//! ```text
//! combined error   e(t)  = (e_ES(t) + e_BJ(t)) / 2
//! corrected error  c(t)  = e(t) - 0.5 * e(t-1),   e(Dec 1952) = 2.75
//! ```

use crate::combine::{combine, equal_weights};
use crate::correct::{corrected_stream, CorrectionSpec};
use crate::eval::msfe;
use crate::series::{ActualSeries, ForecastPanel, PeriodIndex, SeriesMap};
use crate::Result;

/// Correction factor used by the worked example.
pub const DEMO_GAMMA: f64 = 0.5;

/// Realized combined error of December 1952, the seed for January's
/// correction.
pub const DEMO_SEED_ERROR: f64 = 2.75;

/// Forecaster identifiers, in panel order.
pub const DEMO_IDS: [&str; 2] = ["ES", "BJ"];

/// Monthly 1953 forecast errors of the exponential-smoothing method.
const ERRORS_ES: [f64; 12] =
    [1.0, 6.0, 18.0, 18.0, 3.0, -17.0, -24.0, -16.0, -12.0, -9.0, -12.0, -13.0];

/// Monthly 1953 forecast errors of the Box–Jenkins method.
const ERRORS_BJ: [f64; 12] =
    [-3.0, -10.0, 24.0, 22.0, -9.0, -22.0, 10.0, 2.0, -11.0, -10.0, -12.0, -7.0];

/// One month of the worked example.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoRow {
    /// Target month.
    pub target: PeriodIndex,
    /// Exponential-smoothing error.
    pub es: f64,
    /// Box–Jenkins error.
    pub bj: f64,
    /// Equal-weight combined error.
    pub combined: f64,
    /// Serially corrected combined error.
    pub corrected: f64,
}

/// The worked example's error table with its four mean-squared errors.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoTable {
    /// The twelve monthly rows, January through December 1953.
    pub rows: Vec<DemoRow>,
    /// Mean squared errors of the ES, BJ, combined, and corrected columns.
    pub msfe: [f64; 4],
    /// Correction factor that produced the corrected column.
    pub gamma: f64,
}

/// Builds the demo inputs: the two-forecaster panel, the actuals, and the
/// seed errors keyed by target.
///
/// Forecasts are encoded against zero actuals so that realized errors equal
/// the published error columns; nothing downstream depends on the level.
pub fn bg1969_inputs() -> Result<(ForecastPanel, ActualSeries, SeriesMap)> {
    let mut panel = ForecastPanel::new(DEMO_IDS.to_vec(), 1)?;
    let mut actuals = ActualSeries::new();
    let first_target = PeriodIndex::month(1953, 1)?;
    for k in 0..12 {
        let target = first_target.offset(k as i64);
        let origin = target.pred();
        // error = actual - forecast, so forecast = -error under zero actuals.
        panel.insert(DEMO_IDS[0], origin, -ERRORS_ES[k])?;
        panel.insert(DEMO_IDS[1], origin, -ERRORS_BJ[k])?;
        actuals.insert(target, 0.0)?;
    }
    let mut seeds = SeriesMap::new();
    seeds.insert(PeriodIndex::month(1952, 12)?, DEMO_SEED_ERROR);
    Ok((panel, actuals, seeds))
}

/// Runs the full combine-then-correct pipeline on the demo inputs.
pub fn bg1969_table() -> Result<DemoTable> {
    let (panel, actuals, seeds) = bg1969_inputs()?;
    let weights = equal_weights(panel.n_forecasters())?;

    // Equal-weight combined forecast at every origin.
    let mut raw = SeriesMap::new();
    for origin in panel.origins() {
        let fs: Vec<f64> = (0..panel.n_forecasters())
            .map(|i| panel.entry(i, &origin).expect("demo panel is complete").value)
            .collect();
        raw.insert(origin, combine(&weights, &fs)?);
    }

    let spec = CorrectionSpec::fixed(panel.horizon(), DEMO_GAMMA)?;
    let stream = corrected_stream(&raw, &actuals, &spec, &seeds)?;

    let mut rows = Vec::with_capacity(stream.origins.len());
    for (k, &origin) in stream.origins.iter().enumerate() {
        let target = origin.offset(panel.horizon() as i64);
        let y = actuals.get(&target).expect("demo actuals are complete");
        rows.push(DemoRow {
            target,
            es: y - panel.entry(0, &origin).expect("complete").value,
            bj: y - panel.entry(1, &origin).expect("complete").value,
            combined: y - stream.raw[k],
            corrected: y - stream.corrected[k],
        });
    }

    let col = |f: fn(&DemoRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let msfe = [
        msfe(&col(|r| r.es))?,
        msfe(&col(|r| r.bj))?,
        msfe(&col(|r| r.combined))?,
        msfe(&col(|r| r.corrected))?,
    ];
    Ok(DemoTable { rows, msfe, gamma: DEMO_GAMMA })
}
