//! Survey-panel ingestion: raw CSV parsing, forecaster selection, forward
//! imputation, and the normalized panel format.
//!
//! The raw format is the survey layout: one row per `(YEAR, QUARTER, ID)`
//! with forecast variables in named columns and missing values as empty
//! cells or the usual sentinels (`#N/A`, `NA`, `.`). One ingestion run reads
//! exactly one variable column at one horizon; which column means which
//! horizon is configuration, never guessed from the data.
//!
//! The normalized format is long: `id,origin,target,horizon,value,imputed`,
//! one row per entry, values printed with full round-trip precision so that
//! re-reading a written panel reproduces it bit for bit.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io;
use std::path::Path;

use crate::series::{ActualSeries, ForecastPanel, PanelEntry, PeriodIndex, PeriodMask};
use crate::{Error, Result};

/// Cell contents treated as missing in raw survey files.
pub const DEFAULT_SENTINELS: &[&str] = &["", "#N/A", "NA", "."];

/// Counters from one raw-file ingestion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestStats {
    /// Data rows read (header excluded).
    pub rows_read: usize,
    /// Non-missing entries stored in the panel.
    pub entries: usize,
    /// Cells of the mapped column holding a missing-value sentinel.
    pub missing: usize,
    /// Distinct forecaster ids seen.
    pub forecasters: usize,
}

/// Orders ids numerically when they parse as integers, lexically otherwise.
fn id_sort_key(id: &str) -> (u8, u64, String) {
    match id.parse::<u64>() {
        Ok(n) => (0, n, String::new()),
        Err(_) => (1, 0, id.to_string()),
    }
}

fn is_sentinel(cell: &str) -> bool {
    DEFAULT_SENTINELS.contains(&cell)
}

/// Parses one variable column of a raw survey CSV into a forecast panel.
///
/// The header must contain `YEAR`, `QUARTER`, `ID` and the mapped `column`
/// (case-insensitive). Each row becomes at most one entry at origin
/// `(YEAR, QUARTER)`; rows whose mapped cell is a sentinel are counted as
/// gaps. Forecaster ids end up sorted numerically where possible.
pub fn parse_spf<R: io::Read>(
    reader: R,
    column: &str,
    horizon: usize,
) -> Result<(ForecastPanel, IngestStats)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    let find = |name: &str| -> Option<usize> {
        headers.iter().position(|hh| hh.eq_ignore_ascii_case(name))
    };
    let col_year = find("YEAR")
        .ok_or_else(|| Error::MalformedHeader("missing YEAR column".into()))?;
    let col_quarter = find("QUARTER")
        .ok_or_else(|| Error::MalformedHeader("missing QUARTER column".into()))?;
    let col_id =
        find("ID").ok_or_else(|| Error::MalformedHeader("missing ID column".into()))?;
    let col_value = find(column).ok_or_else(|| {
        Error::MalformedHeader(format!("missing mapped variable column {column}"))
    })?;

    let mut stats = IngestStats::default();
    let mut cells: BTreeMap<String, Vec<(PeriodIndex, f64)>> = BTreeMap::new();
    let mut seen: HashSet<(String, PeriodIndex)> = HashSet::new();

    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        stats.rows_read += 1;
        let get = |idx: usize| record.get(idx).unwrap_or("");
        let parse_int = |idx: usize, name: &str| -> Result<i64> {
            let cell = get(idx);
            cell.parse().map_err(|_| Error::UnparseableNumber {
                row,
                column: name.to_string(),
                value: cell.to_string(),
            })
        };
        let year = parse_int(col_year, "YEAR")?;
        let quarter = parse_int(col_quarter, "QUARTER")?;
        let origin = PeriodIndex::quarter(
            i32::try_from(year)
                .map_err(|_| Error::InvalidPeriod(format!("{year}Q{quarter}")))?,
            u8::try_from(quarter)
                .map_err(|_| Error::InvalidPeriod(format!("{year}Q{quarter}")))?,
        )?;
        let id = get(col_id).to_string();
        if id.is_empty() {
            return Err(Error::UnparseableNumber {
                row,
                column: "ID".into(),
                value: String::new(),
            });
        }
        if !seen.insert((id.clone(), origin)) {
            return Err(Error::DuplicateKey { id, origin: origin.to_string() });
        }

        let cell = get(col_value);
        if is_sentinel(cell) {
            stats.missing += 1;
            continue;
        }
        let value: f64 = cell.parse().map_err(|_| Error::UnparseableNumber {
            row,
            column: column.to_string(),
            value: cell.to_string(),
        })?;
        cells.entry(id).or_default().push((origin, value));
        stats.entries += 1;
    }

    let mut ids: Vec<String> = cells.keys().cloned().collect();
    ids.sort_by_key(|id| id_sort_key(id));
    stats.forecasters = ids.len();

    let mut panel = ForecastPanel::new(ids.clone(), horizon)?;
    for id in &ids {
        for (origin, value) in &cells[id] {
            panel.insert(id, *origin, *value)?;
        }
    }
    Ok((panel, stats))
}

/// [`parse_spf`] on a file path.
pub fn parse_spf_path(
    path: impl AsRef<Path>,
    column: &str,
    horizon: usize,
) -> Result<(ForecastPanel, IngestStats)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    parse_spf(io::BufReader::new(file), column, horizon)
}

/// Keeps forecasters with enough genuine observations in a window.
///
/// Counts non-imputed entries whose *origins* fall inside `mask` (all
/// origins when no mask is given); forecasters below `min_obs` are dropped.
/// The surviving panel keeps the original id order. An empty survivor set is
/// allowed.
pub fn select_forecasters(
    panel: &ForecastPanel,
    min_obs: usize,
    mask: Option<&PeriodMask>,
) -> Result<ForecastPanel> {
    let mut kept: Vec<&str> = Vec::new();
    for (idx, id) in panel.ids().iter().enumerate() {
        let obs = panel
            .column(idx)
            .iter()
            .filter(|(origin, entry)| {
                !entry.imputed && mask.map_or(true, |m| m.contains(origin))
            })
            .count();
        if obs >= min_obs {
            kept.push(id);
        }
    }
    let mut out = ForecastPanel::new(kept.clone(), panel.horizon())?;
    for id in kept {
        let idx = panel.ids().iter().position(|x| x == id).expect("kept id");
        for (origin, entry) in panel.column(idx) {
            out.insert_entry_by_id(id, *origin, *entry)?;
        }
    }
    Ok(out)
}

/// Counters from one imputation pass.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImputeStats {
    /// Cells filled from a prior submission.
    pub filled: usize,
    /// Cells left missing because the forecaster had not yet submitted.
    pub leading_missing: usize,
}

/// Fills gaps with each forecaster's most recent prior submission.
///
/// The gap domain is the union of every forecaster's origins: a cell is a
/// gap when some other forecaster submitted at that origin but this one did
/// not. Filled cells are flagged as imputed; cells before a forecaster's
/// first submission stay missing. Existing entries are never modified, and
/// a fill only ever looks backward.
pub fn impute_forward(panel: &ForecastPanel) -> Result<(ForecastPanel, ImputeStats)> {
    let origins: BTreeSet<PeriodIndex> = panel.origins();
    let mut out = ForecastPanel::new(panel.ids().to_vec(), panel.horizon())?;
    let mut stats = ImputeStats::default();
    for (idx, id) in panel.ids().iter().enumerate() {
        let col = panel.column(idx);
        let mut last: Option<f64> = None;
        for origin in &origins {
            match col.get(origin) {
                Some(entry) => {
                    out.insert_entry_by_id(id, *origin, *entry)?;
                    last = Some(entry.value);
                }
                None => match last {
                    Some(value) => {
                        out.insert_entry_by_id(
                            id,
                            *origin,
                            PanelEntry { value, imputed: true },
                        )?;
                        stats.filled += 1;
                    }
                    None => stats.leading_missing += 1,
                },
            }
        }
    }
    Ok((out, stats))
}

const PANEL_HEADER: [&str; 6] = ["id", "origin", "target", "horizon", "value", "imputed"];

/// Writes a panel in the normalized long format.
///
/// Values print with shortest round-trip precision; the imputed flag is
/// `0`/`1`. Rows are ordered by forecaster (panel order), then origin.
pub fn write_panel_csv<W: io::Write>(panel: &ForecastPanel, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(PANEL_HEADER)?;
    for (idx, id) in panel.ids().iter().enumerate() {
        for (origin, entry) in panel.column(idx) {
            let target = origin.offset(panel.horizon() as i64);
            wtr.write_record([
                id.as_str(),
                &origin.to_string(),
                &target.to_string(),
                &panel.horizon().to_string(),
                &format!("{}", entry.value),
                if entry.imputed { "1" } else { "0" },
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a panel from the normalized long format.
///
/// Forecasters appear in first-appearance order, so a write/read round trip
/// reproduces the original panel exactly.
pub fn read_panel_csv<R: io::Read>(reader: R) -> Result<ForecastPanel> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(PANEL_HEADER) {
        return Err(Error::MalformedHeader(format!(
            "expected {:?}, found {:?}",
            PANEL_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut horizon: Option<usize> = None;
    let mut order: Vec<String> = Vec::new();
    let mut rows: Vec<(String, PeriodIndex, PanelEntry)> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let get = |idx: usize| record.get(idx).unwrap_or("");
        let id = get(0).to_string();
        let origin: PeriodIndex = get(1).parse()?;
        let target: PeriodIndex = get(2).parse()?;
        let h: usize = get(3).parse().map_err(|_| Error::UnparseableNumber {
            row,
            column: "horizon".into(),
            value: get(3).to_string(),
        })?;
        let value: f64 = get(4).parse().map_err(|_| Error::UnparseableNumber {
            row,
            column: "value".into(),
            value: get(4).to_string(),
        })?;
        let imputed = match get(5) {
            "0" | "false" => false,
            "1" | "true" => true,
            other => {
                return Err(Error::UnparseableNumber {
                    row,
                    column: "imputed".into(),
                    value: other.to_string(),
                })
            }
        };
        match horizon {
            None => horizon = Some(h),
            Some(h0) if h0 != h => {
                return Err(Error::Data(format!(
                    "mixed horizons in panel file: {h0} then {h} at row {row}"
                )))
            }
            _ => {}
        }
        if origin.offset(h as i64) != target {
            return Err(Error::Data(format!(
                "row {row}: target {target} is not origin {origin} plus {h}"
            )));
        }
        if !order.contains(&id) {
            order.push(id.clone());
        }
        rows.push((id, origin, PanelEntry { value, imputed }));
    }

    let horizon = horizon.ok_or(Error::Empty)?;
    let mut panel = ForecastPanel::new(order, horizon)?;
    for (id, origin, entry) in rows {
        panel.insert_entry_by_id(&id, origin, entry)?;
    }
    Ok(panel)
}

/// Optional transform applied to an actuals file on load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActualTransform {
    /// Use the values as they are.
    #[default]
    Levels,
    /// Annualized percent change: `100 ((x_t / x_{t-1})^per_year - 1)`.
    PctChange,
    /// Annualized log difference: `100 per_year ln(x_t / x_{t-1})`.
    LogDiff,
}

impl ActualTransform {
    /// Parses a config token.
    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "levels" | "none" => Ok(Self::Levels),
            "pct_change" => Ok(Self::PctChange),
            "log_diff" => Ok(Self::LogDiff),
            other => Err(Error::Config(format!(
                "unknown actuals transform {other:?}; expected levels, pct_change, or log_diff"
            ))),
        }
    }
}

/// Reads a two-column actuals CSV (`period,value`) with an optional
/// growth-rate transform.
///
/// Growth transforms pair each period with its immediate predecessor; a
/// period whose predecessor is absent yields no observation, and both
/// transforms require positive levels.
pub fn read_actuals_csv<R: io::Read>(
    reader: R,
    transform: ActualTransform,
) -> Result<ActualSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?;
    if headers.len() < 2 {
        return Err(Error::MalformedHeader(
            "actuals file needs period and value columns".into(),
        ));
    }

    let mut levels: BTreeMap<PeriodIndex, f64> = BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let period: PeriodIndex = record.get(0).unwrap_or("").parse()?;
        let cell = record.get(1).unwrap_or("");
        if is_sentinel(cell) {
            continue;
        }
        let value: f64 = cell.parse().map_err(|_| Error::UnparseableNumber {
            row,
            column: "value".into(),
            value: cell.to_string(),
        })?;
        if levels.insert(period, value).is_some() {
            return Err(Error::DuplicateActual(period.to_string()));
        }
    }

    let mut out = ActualSeries::new();
    match transform {
        ActualTransform::Levels => {
            for (p, v) in levels {
                out.insert(p, v)?;
            }
        }
        ActualTransform::PctChange | ActualTransform::LogDiff => {
            for (p, v) in &levels {
                let prev = match levels.get(&p.pred()) {
                    Some(prev) => *prev,
                    None => continue,
                };
                if *v <= 0.0 || prev <= 0.0 {
                    return Err(Error::Data(format!(
                        "growth transform needs positive levels; {p} or its predecessor is not"
                    )));
                }
                let per_year = f64::from(p.per_year());
                let g = match transform {
                    ActualTransform::PctChange => {
                        100.0 * ((v / prev).powf(per_year) - 1.0)
                    }
                    _ => 100.0 * per_year * (v / prev).ln(),
                };
                out.insert(*p, g)?;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(year: i32, qq: u8) -> PeriodIndex {
        PeriodIndex::quarter(year, qq).unwrap()
    }

    const FIXTURE: &str = "\
YEAR,QUARTER,ID,INDUSTRY,UNEMP1,UNEMP2
1968,4,1,,5.0,4.8
1968,4,2,,5.1,
1969,1,1,,4.9,4.7
";

    #[test]
    fn parses_the_mapped_column_and_counts_gaps() {
        let (panel, stats) = parse_spf(FIXTURE.as_bytes(), "UNEMP2", 1).unwrap();
        assert_eq!(stats.rows_read, 3);
        assert_eq!(stats.entries, 2);
        assert_eq!(stats.missing, 1);
        assert_eq!(stats.forecasters, 1);
        assert_eq!(panel.ids(), ["1"]);
        let e = panel.entry(0, &q(1968, 4)).unwrap();
        assert_eq!(e.value, 4.8);
        assert!(!e.imputed);
        assert_eq!(panel.entry(0, &q(1969, 1)).unwrap().value, 4.7);
    }

    #[test]
    fn header_is_case_insensitive() {
        let data = "year,quarter,id,unemp2\n2000,1,7,3.5\n";
        let (panel, _) = parse_spf(data.as_bytes(), "UNEMP2", 1).unwrap();
        assert_eq!(panel.ids(), ["7"]);
    }

    #[test]
    fn missing_required_columns_are_reported() {
        let no_id = "YEAR,QUARTER,UNEMP2\n2000,1,3.5\n";
        assert!(matches!(
            parse_spf(no_id.as_bytes(), "UNEMP2", 1),
            Err(Error::MalformedHeader(m)) if m.contains("ID")
        ));
        assert!(matches!(
            parse_spf(FIXTURE.as_bytes(), "CPI2", 1),
            Err(Error::MalformedHeader(m)) if m.contains("CPI2")
        ));
    }

    #[test]
    fn bad_cells_name_row_and_column() {
        let data = "YEAR,QUARTER,ID,UNEMP2\n2000,1,7,3.5\n2000,2,7,oops\n";
        match parse_spf(data.as_bytes(), "UNEMP2", 1) {
            Err(Error::UnparseableNumber { row, column, value }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "UNEMP2");
                assert_eq!(value, "oops");
            }
            other => panic!("unexpected {other:?}"),
        }
        let bad_year = "YEAR,QUARTER,ID,UNEMP2\nMMXX,1,7,3.5\n";
        assert!(matches!(
            parse_spf(bad_year.as_bytes(), "UNEMP2", 1),
            Err(Error::UnparseableNumber { column, .. }) if column == "YEAR"
        ));
    }

    #[test]
    fn duplicate_records_are_rejected() {
        let data = "YEAR,QUARTER,ID,UNEMP2\n2000,1,7,3.5\n2000,1,7,3.6\n";
        assert!(matches!(
            parse_spf(data.as_bytes(), "UNEMP2", 1),
            Err(Error::DuplicateKey { .. })
        ));
        // Even when one of the duplicates is missing.
        let data = "YEAR,QUARTER,ID,UNEMP2\n2000,1,7,\n2000,1,7,3.6\n";
        assert!(matches!(
            parse_spf(data.as_bytes(), "UNEMP2", 1),
            Err(Error::DuplicateKey { .. })
        ));
    }

    #[test]
    fn all_sentinels_count_as_missing() {
        let data = "YEAR,QUARTER,ID,V2\n2000,1,1,#N/A\n2000,2,1,NA\n2000,3,1,.\n2000,4,1,\n2001,1,1,2.5\n";
        let (panel, stats) = parse_spf(data.as_bytes(), "V2", 1).unwrap();
        assert_eq!(stats.missing, 4);
        assert_eq!(stats.entries, 1);
        assert_eq!(panel.n_entries(), 1);
    }

    #[test]
    fn ids_sort_numerically_then_lexically() {
        let data = "YEAR,QUARTER,ID,V2\n2000,1,10,1\n2000,1,2,1\n2000,1,1,1\n2000,1,x,1\n";
        let (panel, _) = parse_spf(data.as_bytes(), "V2", 1).unwrap();
        assert_eq!(panel.ids(), ["1", "2", "10", "x"]);
    }

    fn counted_panel() -> ForecastPanel {
        // Forecasters with 80, 69, and 71 observations out of 80 origins.
        let mut panel = ForecastPanel::new(vec!["1", "2", "3"], 1).unwrap();
        let start = q(2000, 1);
        for k in 0..80 {
            let origin = start.offset(k);
            panel.insert("1", origin, k as f64).unwrap();
            if k >= 11 {
                panel.insert("2", origin, k as f64).unwrap();
            }
            if k >= 9 {
                panel.insert("3", origin, k as f64).unwrap();
            }
        }
        panel
    }

    #[test]
    fn selection_keeps_forecasters_above_the_threshold() {
        let panel = counted_panel();
        let kept = select_forecasters(&panel, 70, None).unwrap();
        assert_eq!(kept.ids(), ["1", "3"]);
        let all = select_forecasters(&panel, 0, None).unwrap();
        assert_eq!(all.ids(), panel.ids());
        assert_eq!(all.n_entries(), panel.n_entries());
        let none = select_forecasters(&panel, 81, None).unwrap();
        assert!(none.ids().is_empty());
    }

    #[test]
    fn selection_counts_origins_inside_the_mask_only() {
        let panel = counted_panel();
        // First 20 origins: forecaster 1 has 20, 2 has 9, 3 has 11.
        let mask = PeriodMask::new("w", q(2000, 1), q(2004, 4)).unwrap();
        let kept = select_forecasters(&panel, 11, Some(&mask)).unwrap();
        assert_eq!(kept.ids(), ["1", "3"]);
        // Entries outside the mask survive selection untouched.
        assert_eq!(kept.n_entries(), 80 + 71);
    }

    #[test]
    fn selection_ignores_imputed_entries() {
        let mut panel = ForecastPanel::new(vec!["1"], 1).unwrap();
        panel.insert("1", q(2000, 1), 1.0).unwrap();
        panel
            .insert_entry_by_id("1", q(2000, 2), PanelEntry { value: 1.0, imputed: true })
            .unwrap();
        assert!(select_forecasters(&panel, 2, None).unwrap().ids().is_empty());
        assert_eq!(select_forecasters(&panel, 1, None).unwrap().ids(), ["1"]);
    }

    #[test]
    fn imputation_fills_interior_gaps_only() {
        let mut panel = ForecastPanel::new(vec!["a", "b"], 1).unwrap();
        // "b" defines the origin domain; "a" submits at Q1 and Q3 only.
        for k in 0..4 {
            panel.insert("b", q(2000, 1).offset(k), 0.0).unwrap();
        }
        panel.insert("a", q(2000, 1), 7.0).unwrap();
        panel.insert("a", q(2000, 3), 9.0).unwrap();
        let (filled, stats) = impute_forward(&panel).unwrap();
        assert_eq!(stats.filled, 2); // a@Q2 and a@Q4
        assert_eq!(stats.leading_missing, 0);
        let a2 = filled.entry(0, &q(2000, 2)).unwrap();
        assert_eq!(a2.value, 7.0);
        assert!(a2.imputed);
        let a4 = filled.entry(0, &q(2000, 4)).unwrap();
        assert_eq!(a4.value, 9.0);
        assert!(a4.imputed);
        // Existing cells are untouched.
        assert_eq!(filled.entry(0, &q(2000, 3)).unwrap(), PanelEntry { value: 9.0, imputed: false });
    }

    #[test]
    fn imputation_leaves_leading_gaps() {
        let mut panel = ForecastPanel::new(vec!["a", "b"], 1).unwrap();
        for k in 0..4 {
            panel.insert("b", q(2000, 1).offset(k), 0.0).unwrap();
        }
        panel.insert("a", q(2000, 3), 5.0).unwrap();
        let (filled, stats) = impute_forward(&panel).unwrap();
        assert_eq!(stats.leading_missing, 2);
        assert_eq!(stats.filled, 1);
        assert!(filled.entry(0, &q(2000, 1)).is_none());
        assert!(filled.entry(0, &q(2000, 2)).is_none());
    }

    #[test]
    fn post_imputation_missingness_equals_leading_gaps() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let ids = ["1", "2", "3"];
        let mut panel = ForecastPanel::new(ids.to_vec(), 1).unwrap();
        let start = q(1990, 1);
        for k in 0..40 {
            for id in ids {
                if rng.random::<f64>() < 0.1 {
                    continue;
                }
                panel.insert(id, start.offset(k), rng.random::<f64>()).unwrap();
            }
        }
        let origins = panel.origins();
        let mut leading = 0usize;
        for idx in 0..ids.len() {
            let first = panel.column(idx).keys().next().copied();
            if let Some(first) = first {
                leading += origins.iter().filter(|o| **o < first).count();
            } else {
                leading += origins.len();
            }
        }
        let (filled, stats) = impute_forward(&panel).unwrap();
        let total = origins.len() * ids.len();
        assert_eq!(total - filled.n_entries(), leading);
        assert_eq!(stats.leading_missing, leading);
        assert_eq!(stats.filled, total - leading - panel.n_entries());
    }

    #[test]
    fn panel_csv_round_trips_exactly() {
        let mut panel = ForecastPanel::new(vec!["10", "2"], 2).unwrap();
        panel.insert("10", q(2000, 1), 1.0 / 3.0).unwrap();
        panel.insert("10", q(2000, 3), -0.1234567890123456).unwrap();
        panel.insert("2", q(2000, 1), 5e-300).unwrap();
        panel
            .insert_entry_by_id("2", q(2000, 2), PanelEntry { value: 2.5, imputed: true })
            .unwrap();

        let mut buf = Vec::new();
        write_panel_csv(&panel, &mut buf).unwrap();
        let back = read_panel_csv(buf.as_slice()).unwrap();

        assert_eq!(back.ids(), panel.ids());
        assert_eq!(back.horizon(), panel.horizon());
        assert_eq!(back.n_entries(), panel.n_entries());
        for idx in 0..panel.ids().len() {
            assert_eq!(back.column(idx), panel.column(idx));
        }
        // And the bytes themselves are stable under a second round trip.
        let mut buf2 = Vec::new();
        write_panel_csv(&back, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn panel_csv_validates_structure() {
        let wrong_header = "id,origin,value\n1,2000Q1,3\n";
        assert!(matches!(
            read_panel_csv(wrong_header.as_bytes()),
            Err(Error::MalformedHeader(_))
        ));
        let bad_target = "id,origin,target,horizon,value,imputed\n1,2000Q1,2000Q3,1,3,0\n";
        assert!(matches!(
            read_panel_csv(bad_target.as_bytes()),
            Err(Error::Data(_))
        ));
        let mixed_h = "id,origin,target,horizon,value,imputed\n\
                       1,2000Q1,2000Q2,1,3,0\n1,2000Q2,2000Q4,2,3,0\n";
        assert!(matches!(read_panel_csv(mixed_h.as_bytes()), Err(Error::Data(_))));
        assert!(matches!(
            read_panel_csv("id,origin,target,horizon,value,imputed\n".as_bytes()),
            Err(Error::Empty)
        ));
    }

    #[test]
    fn actuals_load_as_levels() {
        let data = "period,value\n2000Q1,100\n2000Q2,102\n2000Q4,103\n";
        let s = read_actuals_csv(data.as_bytes(), ActualTransform::Levels).unwrap();
        assert_eq!(s.get(&q(2000, 1)), Some(100.0));
        assert_eq!(s.get(&q(2000, 2)), Some(102.0));
        assert_eq!(s.get(&q(2000, 3)), None);
    }

    #[test]
    fn growth_transforms_follow_their_formulas() {
        let data = "period,value\n2000Q1,100\n2000Q2,102\n2000Q4,103\n2001Q1,104\n";
        let pct = read_actuals_csv(data.as_bytes(), ActualTransform::PctChange).unwrap();
        // Q1 has no predecessor; Q4's predecessor (Q3) is absent.
        assert_eq!(pct.get(&q(2000, 1)), None);
        assert_eq!(pct.get(&q(2000, 4)), None);
        let want = 100.0 * ((102.0f64 / 100.0).powf(4.0) - 1.0);
        assert!((pct.get(&q(2000, 2)).unwrap() - want).abs() < 1e-12);
        let q1 = 100.0 * ((104.0f64 / 103.0).powf(4.0) - 1.0);
        assert!((pct.get(&q(2001, 1)).unwrap() - q1).abs() < 1e-12);

        let log = read_actuals_csv(data.as_bytes(), ActualTransform::LogDiff).unwrap();
        let want = 400.0 * (102.0f64 / 100.0).ln();
        assert!((log.get(&q(2000, 2)).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn growth_transforms_reject_nonpositive_levels() {
        let data = "period,value\n2000Q1,100\n2000Q2,-3\n";
        assert!(matches!(
            read_actuals_csv(data.as_bytes(), ActualTransform::LogDiff),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn duplicate_actual_periods_are_rejected() {
        let data = "period,value\n2000Q1,100\n2000Q1,101\n";
        assert!(matches!(
            read_actuals_csv(data.as_bytes(), ActualTransform::Levels),
            Err(Error::DuplicateActual(_))
        ));
    }

    #[test]
    fn transform_tokens_parse() {
        assert_eq!(ActualTransform::parse("levels").unwrap(), ActualTransform::Levels);
        assert_eq!(ActualTransform::parse("none").unwrap(), ActualTransform::Levels);
        assert_eq!(
            ActualTransform::parse("pct_change").unwrap(),
            ActualTransform::PctChange
        );
        assert_eq!(ActualTransform::parse("log_diff").unwrap(), ActualTransform::LogDiff);
        assert!(ActualTransform::parse("cubic").is_err());
    }
}
