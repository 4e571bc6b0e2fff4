//! Run configuration: a flat `key = value` text format with strict keys.
//!
//! Everything the command-line surface needs for a reproducible run lives in
//! one small file: data paths, the variable column and its horizon,
//! evaluation windows, the correction-factor grid, selection and imputation
//! settings, and output location. Unknown keys are rejected outright so a
//! typo cannot silently fall back to a default. [`RunConfig::canonical`]
//! serializes every effective setting (defaults included) in a fixed order,
//! which is what run manifests hash.
//!
//! Evaluation windows use the form `2000Q1-2025Q2`; a trailing `*` marks the
//! window as subject to the configured exclusion range, which is carved out
//! of scoring for that row (estimation handles the exclusion separately).

use std::path::PathBuf;

use crate::ingest::ActualTransform;
use crate::series::{PeriodIndex, PeriodMask};
use crate::{Error, Result};

/// Default excluded range for starred windows (a crisis episode whose
/// outliers would otherwise dominate squared-error comparisons).
pub const DEFAULT_EXCLUSION: (&str, &str) = ("2020Q1", "2022Q4");

/// One evaluation-window specification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodSpec {
    /// The literal spec text, used as the report row label.
    pub label: String,
    /// First period, inclusive.
    pub start: PeriodIndex,
    /// Last period, inclusive.
    pub end: PeriodIndex,
    /// Whether the configured exclusion applies to this window.
    pub starred: bool,
}

impl PeriodSpec {
    /// Parses `2000Q1-2025Q2` or `2000Q1-2025Q2*`.
    pub fn parse(text: &str) -> Result<Self> {
        let label = text.trim().to_string();
        let (body, starred) = match label.strip_suffix('*') {
            Some(b) => (b, true),
            None => (label.as_str(), false),
        };
        let (lo, hi) = body.split_once('-').ok_or_else(|| {
            Error::Config(format!("period {label:?} is not of the form 2000Q1-2025Q2"))
        })?;
        let start: PeriodIndex = lo.trim().parse()?;
        let end: PeriodIndex = hi.trim().parse()?;
        if start > end {
            return Err(Error::Config(format!("period {label:?} starts after it ends")));
        }
        Ok(Self { label, start, end, starred })
    }

    /// Builds the scoring mask, carving out `exclusion` when starred.
    pub fn to_mask(&self, exclusion: Option<(PeriodIndex, PeriodIndex)>) -> Result<PeriodMask> {
        let mask = PeriodMask::new(self.label.clone(), self.start, self.end)?;
        match (self.starred, exclusion) {
            (true, Some((a, b))) => mask.with_exclusion(a, b),
            _ => Ok(mask),
        }
    }
}

/// Settings for one reproducible run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Raw survey CSV path.
    pub spf_file: Option<PathBuf>,
    /// Normalized panel CSV path (alternative input to `spf_file`).
    pub panel_file: Option<PathBuf>,
    /// Actuals CSV path.
    pub actuals_file: Option<PathBuf>,
    /// Indicator name, e.g. `UNEMP`.
    pub indicator: String,
    /// Suffix appended to the indicator to form the variable column.
    pub column_suffix: String,
    /// Explicit variable column, overriding indicator + suffix.
    pub column: Option<String>,
    /// Forecast horizon in periods.
    pub horizon: usize,
    /// Transform applied to the actuals file on load.
    pub actuals_transform: ActualTransform,
    /// Evaluation windows; empty means one window spanning the data.
    pub periods: Vec<PeriodSpec>,
    /// Exclusion range applied to starred windows and factor estimation.
    pub exclusion: Option<(PeriodIndex, PeriodIndex)>,
    /// Correction-factor grid.
    pub factors: Vec<f64>,
    /// Whether reports append the historically-estimated-factor column.
    pub hist: bool,
    /// Earliest target admitted into training windows.
    pub t0: Option<PeriodIndex>,
    /// First scored target of rolling comparisons.
    pub eval_start: Option<PeriodIndex>,
    /// Selection threshold: fewest genuine observations per forecaster.
    pub min_obs: usize,
    /// Whether gaps are forward-filled after selection.
    pub impute: bool,
    /// Factor for fixed-correction rows.
    pub fixed_gamma: f64,
    /// Fewest training rows before the first scored origin.
    pub min_train: usize,
    /// Seed prior errors for corrections, oldest first.
    pub seed_prior: Vec<f64>,
    /// Output directory for report CSVs and manifests.
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ex = |s: &str| s.parse::<PeriodIndex>().expect("valid default period");
        Self {
            spf_file: None,
            panel_file: None,
            actuals_file: None,
            indicator: String::new(),
            column_suffix: "2".into(),
            column: None,
            horizon: 1,
            actuals_transform: ActualTransform::Levels,
            periods: Vec::new(),
            exclusion: Some((ex(DEFAULT_EXCLUSION.0), ex(DEFAULT_EXCLUSION.1))),
            factors: (0..=10).map(|k| k as f64 / 10.0).collect(),
            hist: true,
            t0: None,
            eval_start: None,
            min_obs: 0,
            impute: true,
            fixed_gamma: 0.5,
            min_train: 8,
            seed_prior: Vec::new(),
            out_dir: PathBuf::from("out"),
        }
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true/false, got {value:?}"))),
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected a number, got {value:?}")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("{key}: {value:?} is not finite")));
    }
    Ok(v)
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected a non-negative integer, got {value:?}")))
}

impl RunConfig {
    /// Parses a config text; later assignments override earlier ones.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.apply(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads and parses a config file.
    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies one `key = value` assignment.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "spf_file" => self.spf_file = Some(PathBuf::from(value)),
            "panel_file" => self.panel_file = Some(PathBuf::from(value)),
            "actuals_file" => self.actuals_file = Some(PathBuf::from(value)),
            "indicator" => self.indicator = value.to_string(),
            "column_suffix" => self.column_suffix = value.to_string(),
            "column" => self.column = Some(value.to_string()),
            "horizon" => {
                self.horizon = parse_usize(key, value)?;
                if self.horizon == 0 {
                    return Err(Error::Config("horizon must be at least 1".into()));
                }
            }
            "actuals_transform" => self.actuals_transform = ActualTransform::parse(value)?,
            "periods" => {
                self.periods = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(PeriodSpec::parse)
                    .collect::<Result<_>>()?;
            }
            "exclusion" => {
                self.exclusion = if value == "none" {
                    None
                } else {
                    let spec = PeriodSpec::parse(value)?;
                    Some((spec.start, spec.end))
                };
            }
            "factors" => {
                let parsed: Vec<f64> = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_f64("factors", s.trim()))
                    .collect::<Result<_>>()?;
                if parsed.is_empty() {
                    return Err(Error::Config("factors: at least one value required".into()));
                }
                self.factors = parsed;
            }
            "hist" => self.hist = parse_bool(key, value)?,
            "t0" => self.t0 = Some(value.parse()?),
            "eval_start" => self.eval_start = Some(value.parse()?),
            "min_obs" => self.min_obs = parse_usize(key, value)?,
            "impute" => self.impute = parse_bool(key, value)?,
            "fixed_gamma" => self.fixed_gamma = parse_f64(key, value)?,
            "min_train" => {
                self.min_train = parse_usize(key, value)?;
                if self.min_train == 0 {
                    return Err(Error::Config("min_train must be at least 1".into()));
                }
            }
            "seed_prior" => {
                self.seed_prior = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_f64("seed_prior", s.trim()))
                    .collect::<Result<_>>()?;
            }
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => {
                return Err(Error::Config(format!("unknown key {other:?}")));
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if let (Some(t0), Some(es)) = (self.t0, self.eval_start) {
            if t0 > es {
                return Err(Error::Config(format!(
                    "t0 {t0} is after eval_start {es}"
                )));
            }
        }
        Ok(())
    }

    /// The variable column this run reads.
    pub fn resolved_column(&self) -> String {
        self.column
            .clone()
            .unwrap_or_else(|| format!("{}{}", self.indicator, self.column_suffix))
    }

    /// Scoring masks for all configured windows.
    pub fn masks(&self) -> Result<Vec<PeriodMask>> {
        self.periods.iter().map(|p| p.to_mask(self.exclusion)).collect()
    }

    /// The exclusion as a standalone mask (for estimation filters).
    pub fn exclusion_mask(&self) -> Option<PeriodMask> {
        let (a, b) = self.exclusion?;
        PeriodMask::new("exclusion", a, b).ok()
    }

    /// Every effective setting as `key = value` lines in a fixed order.
    ///
    /// Two configs with equal canonical text behave identically, so run
    /// manifests hash this string.
    pub fn canonical(&self) -> String {
        let path = |p: &Option<PathBuf>| {
            p.as_ref().map_or(String::new(), |p| p.display().to_string())
        };
        let period = |p: &Option<PeriodIndex>| p.map_or(String::new(), |p| p.to_string());
        let floats = |v: &[f64]| {
            v.iter().map(|f| format!("{f}")).collect::<Vec<_>>().join(",")
        };
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("spf_file", path(&self.spf_file));
        push("panel_file", path(&self.panel_file));
        push("actuals_file", path(&self.actuals_file));
        push("indicator", self.indicator.clone());
        push("column", self.resolved_column());
        push("horizon", self.horizon.to_string());
        push(
            "actuals_transform",
            format!("{:?}", self.actuals_transform).to_lowercase(),
        );
        push(
            "periods",
            self.periods
                .iter()
                .map(|p| p.label.clone())
                .collect::<Vec<_>>()
                .join(","),
        );
        push(
            "exclusion",
            self.exclusion
                .map_or("none".into(), |(a, b)| format!("{a}-{b}")),
        );
        push("factors", floats(&self.factors));
        push("hist", self.hist.to_string());
        push("t0", period(&self.t0));
        push("eval_start", period(&self.eval_start));
        push("min_obs", self.min_obs.to_string());
        push("impute", self.impute.to_string());
        push("fixed_gamma", format!("{}", self.fixed_gamma));
        push("min_train", self.min_train.to_string());
        push("seed_prior", floats(&self.seed_prior));
        push("out_dir", self.out_dir.display().to_string());
        out
    }
}
