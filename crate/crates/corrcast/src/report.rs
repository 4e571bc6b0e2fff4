//! Report rendering: CSV files, aligned text tables, and run manifests.
//!
//! CSV cells carry full-precision values (shortest decimal that parses back
//! to the same float), so written files are byte-stable across runs and
//! machines. Text tables are a display layer only and round to two decimals.
//! A [`Manifest`] records everything that determined a run — input files and
//! their digests, the canonical configuration, output files — as sorted-once
//! `key = value` lines with no timestamps, so rerunning an identical command
//! on identical inputs reproduces the manifest byte for byte.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::demo::DemoTable;
use crate::eval::{AcfResult, EvaluationReport, MethodComparison};
use crate::{Error, Result};

/// Full-precision decimal form of `v`: the shortest string that parses back
/// to exactly `v`.
pub fn fmt_full(v: f64) -> String {
    format!("{v}")
}

/// Two-decimal display form of `v`.
pub fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

/// Hex SHA-256 of a file's contents.
pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let mut file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 8192];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

/// Writes a text file, naming the path on failure.
pub fn write_text_file(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))
}

/// Renders rows as CSV with minimal quoting.
fn csv_string(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(format!("csv encoding: {e}")))
}

/// A fixed-width text table: first column left-aligned, the rest right-aligned.
#[derive(Debug, Clone)]
pub struct TextTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl TextTable {
    /// Starts a table with the given column headers.
    pub fn new<S: Into<String>>(header: Vec<S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    /// Appends one row; short rows are padded with empty cells.
    pub fn push<S: Into<String>>(&mut self, row: Vec<S>) {
        let mut cells: Vec<String> = row.into_iter().map(Into::into).collect();
        cells.resize(self.header.len(), String::new());
        self.rows.push(cells);
    }

    /// Renders the aligned table, one trailing newline per row.
    pub fn render(&self) -> String {
        let cols = self.header.len();
        let mut width = vec![0usize; cols];
        for row in std::iter::once(&self.header).chain(&self.rows) {
            for (c, cell) in row.iter().enumerate() {
                width[c] = width[c].max(cell.len());
            }
        }
        let mut out = String::new();
        for row in std::iter::once(&self.header).chain(&self.rows) {
            for (c, cell) in row.iter().enumerate() {
                if c > 0 {
                    out.push_str("  ");
                }
                if c == 0 {
                    let _ = write!(out, "{cell:<w$}", w = width[c]);
                } else {
                    let _ = write!(out, "{cell:>w$}", w = width[c]);
                }
            }
            // Trim the padding of trailing empty cells.
            while out.ends_with(' ') {
                out.pop();
            }
            out.push('\n');
        }
        out
    }
}

/// CSV form of the worked example: one row per month, full precision.
pub fn demo_csv(table: &DemoTable) -> Result<String> {
    let header =
        ["target", "es", "bj", "combined", "corrected"].map(String::from).to_vec();
    let mut rows = Vec::with_capacity(table.rows.len() + 1);
    for row in &table.rows {
        rows.push(vec![
            row.target.to_string(),
            fmt_full(row.es),
            fmt_full(row.bj),
            fmt_full(row.combined),
            fmt_full(row.corrected),
        ]);
    }
    rows.push(vec![
        "msfe".into(),
        fmt_full(table.msfe[0]),
        fmt_full(table.msfe[1]),
        fmt_full(table.msfe[2]),
        fmt_full(table.msfe[3]),
    ]);
    csv_string(&header, &rows)
}

/// Aligned text form of the worked example; the last line is the MSFE row.
pub fn demo_text(table: &DemoTable) -> String {
    let mut t = TextTable::new(vec!["month", "ES", "BJ", "combined", "corrected"]);
    for row in &table.rows {
        t.push(vec![
            row.target.to_string(),
            fmt2(row.es),
            fmt2(row.bj),
            fmt2(row.combined),
            fmt2(row.corrected),
        ]);
    }
    t.push(vec![
        "MSFE".to_string(),
        fmt2(table.msfe[0]),
        fmt2(table.msfe[1]),
        fmt2(table.msfe[2]),
        fmt2(table.msfe[3]),
    ]);
    t.render()
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_full).unwrap_or_default()
}

/// CSV form of a factor-grid report: one row per window, one ratio column
/// per factor, plus the historically-estimated-factor column.
pub fn evaluation_csv(report: &EvaluationReport) -> Result<String> {
    let mut header = vec!["window".to_string(), "n_pairs".into(), "status".into(), "baseline_msfe".into()];
    for f in &report.factors {
        header.push(format!("f{}", fmt_full(*f)));
    }
    header.push("hist".into());
    header.push("hist_fallbacks".into());
    header.push("best_factor".into());

    let mut rows = Vec::with_capacity(report.rows.len());
    for row in &report.rows {
        let mut cells = vec![
            row.period.clone(),
            row.n_pairs.to_string(),
            if row.insufficient { "insufficient" } else { "ok" }.to_string(),
            opt(row.baseline_msfe),
        ];
        for cell in &row.relative {
            cells.push(opt(*cell));
        }
        cells.push(opt(row.hist_relative));
        cells.push(row.hist_fallbacks.to_string());
        cells.push(
            row.best_factor
                .map(|i| fmt_full(report.factors[i]))
                .unwrap_or_default(),
        );
        rows.push(cells);
    }
    csv_string(&header, &rows)
}

/// Aligned text form of a factor-grid report (two-decimal ratios).
pub fn evaluation_text(report: &EvaluationReport) -> String {
    let mut header = vec!["window".to_string(), "n".into()];
    for f in &report.factors {
        header.push(fmt_full(*f));
    }
    header.push("hist".into());
    header.push("best".into());
    let mut t = TextTable::new(header);
    for row in &report.rows {
        let mut cells = vec![row.period.clone(), row.n_pairs.to_string()];
        if row.insufficient {
            cells.push("insufficient".into());
        } else {
            for cell in &row.relative {
                cells.push(cell.map(fmt2).unwrap_or_default());
            }
            cells.push(row.hist_relative.map(fmt2).unwrap_or_default());
            cells.push(
                row.best_factor
                    .map(|i| fmt_full(report.factors[i]))
                    .unwrap_or_default(),
            );
        }
        t.push(cells);
    }
    t.render()
}

/// CSV form of a rolling method comparison.
pub fn comparison_csv(cmp: &MethodComparison) -> Result<String> {
    let header = ["method", "msfe", "relative"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = cmp
        .rows
        .iter()
        .map(|r| vec![r.label.clone(), fmt_full(r.msfe), fmt_full(r.relative)])
        .collect();
    csv_string(&header, &rows)
}

/// Aligned text form of a rolling method comparison.
pub fn comparison_text(cmp: &MethodComparison) -> String {
    let mut t = TextTable::new(vec!["method", "msfe", "relative"]);
    for r in &cmp.rows {
        t.push(vec![r.label.clone(), format!("{:.4}", r.msfe), format!("{:.4}", r.relative)]);
    }
    t.render()
}

/// CSV form of an autocorrelation function: `lag,rho,band`.
pub fn acf_csv(result: &AcfResult) -> Result<String> {
    let header = ["lag", "rho", "band"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = result
        .rho
        .iter()
        .enumerate()
        .map(|(k, rho)| vec![k.to_string(), fmt_full(*rho), fmt_full(result.band)])
        .collect();
    csv_string(&header, &rows)
}

/// CSV form of a weight vector with its correction factor: `name,value`.
pub fn weights_csv(ids: &[String], weights: &[f64], gamma: Option<f64>) -> Result<String> {
    let header = ["name", "value"].map(String::from).to_vec();
    let mut rows = Vec::new();
    if let Some(g) = gamma {
        rows.push(vec!["gamma".to_string(), fmt_full(g)]);
    }
    for (id, w) in ids.iter().zip(weights) {
        rows.push(vec![format!("w[{id}]"), fmt_full(*w)]);
    }
    csv_string(&header, &rows)
}

/// A reproducible record of one run: `key = value` lines, no timestamps.
///
/// Keys appear in insertion order; inputs and outputs carry their SHA-256
/// digests so a manifest pins the exact bytes a run consumed and produced.
#[derive(Debug, Clone)]
pub struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    /// Starts a manifest for one subcommand, recording tool and version.
    pub fn new(subcommand: &str) -> Self {
        let mut m = Self { lines: Vec::new() };
        m.set("manifest_version", "1");
        m.set("tool", concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")));
        m.set("subcommand", subcommand);
        m
    }

    /// Appends one `key = value` line.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.lines.push((key.to_string(), value.into()));
    }

    /// Records the canonical configuration and its digest.
    pub fn config(&mut self, canonical: &str) {
        self.set("config.sha256", sha256_hex(canonical.as_bytes()));
    }

    /// Records an input file path and its digest.
    pub fn input(&mut self, label: &str, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.set(&format!("input.{label}"), path.display().to_string());
        let digest = sha256_file(path)?;
        self.set(&format!("input.{label}.sha256"), digest);
        Ok(())
    }

    /// Records an output file path and its digest (call after writing it).
    pub fn output(&mut self, label: &str, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.set(&format!("output.{label}"), path.display().to_string());
        let digest = sha256_file(path)?;
        self.set(&format!("output.{label}.sha256"), digest);
        Ok(())
    }

    /// Renders the manifest text.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Writes the manifest to a file.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text_file(path, &self.render())
    }
}
