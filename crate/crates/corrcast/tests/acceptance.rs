//! The acceptance gate: every blocking behavioral guarantee of the library,
//! one printed pass/fail line each, asserted together at the end. Run with
//! `cargo test --test acceptance -- --nocapture` to see the table.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use ndarray::Array2;
use rand::Rng;

use corrcast::combine::{bg_weights, error_moments, restricted_ols_weights};
use corrcast::correct::{historical_gamma_slice, DEFAULT_CLAMP};
use corrcast::demo::bg1969_table;
use corrcast::eval::{acf, factor_grid_report, method_comparison, CorrStats, MethodOptions};
use corrcast::gls::{
    general_gls_weights, hildreth_lu, risk_bound_report, two_step_gls, DEFAULT_GRID_STEP,
};
use corrcast::ingest::{
    impute_forward, parse_spf_path, read_actuals_csv, select_forecasters, ActualTransform,
};
use corrcast::series::{align, PeriodIndex, PeriodMask, SeriesMap};

type Outcome = Result<String, String>;

fn fail(msg: impl Into<String>) -> Outcome {
    Err(msg.into())
}

/// End-to-end golden run of the worked example through the real binary:
/// the stdout table ends with the four MSFEs and the CSV carries the exact
/// corrected cells. Runtime budget: one second.
fn golden_demo_table() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let started = Instant::now();
    let output = Command::new(env!("CARGO_BIN_EXE_corrcast"))
        .args(["demo", "bg1969", "--out-dir"])
        .arg(dir.path())
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    if !output.status.success() {
        return fail(format!("exit status {:?}", output.status.code()));
    }
    let stdout = String::from_utf8_lossy(&output.stdout);
    let last = stdout.lines().rev().find(|l| !l.trim().is_empty()).unwrap_or("");
    if !last.starts_with("MSFE") {
        return fail(format!("last stdout line is {last:?}, not the MSFE row"));
    }
    for cell in ["196.08", "187.67", "149.98", "103.46"] {
        if !last.contains(cell) {
            return fail(format!("MSFE row {last:?} lacks {cell}"));
        }
    }

    let csv = std::fs::read_to_string(dir.path().join("demo_bg1969.csv"))
        .map_err(|e| e.to_string())?;
    let expected_corrected = [
        -2.375, -1.5, 22.0, 9.5, -13.0, -18.0, 2.75, -3.5, -8.0, -3.75, -7.25, -4.0,
    ];
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    if rows.len() != 13 {
        return fail(format!("{} CSV rows, expected 12 + MSFE", rows.len()));
    }
    for (k, want) in expected_corrected.iter().enumerate() {
        let cell = rows[k].rsplit(',').next().unwrap_or("");
        let got: f64 = cell.parse().map_err(|_| format!("bad cell {cell:?}"))?;
        if got != *want {
            return fail(format!("corrected[{k}] = {got}, want {want} exactly"));
        }
    }
    let msfe_cell = rows[12].rsplit(',').next().unwrap_or("");
    let got: f64 = msfe_cell.parse().map_err(|_| format!("bad cell {msfe_cell:?}"))?;
    if got != 1241.578125 / 12.0 {
        return fail(format!("corrected MSFE {got} is not the exact fraction"));
    }
    if elapsed.as_secs_f64() >= 1.0 {
        return fail(format!("took {elapsed:.2?}, budget 1s"));
    }
    Ok(format!("12 rows exact, MSFE row verified, {elapsed:.0?}"))
}

/// Combination beats the best individual by ~20% and the correction adds
/// ~31% on top, each within one percentage point.
fn demo_improvement_ratios() -> Outcome {
    let table = bg1969_table().map_err(|e| e.to_string())?;
    let best_individual = table.msfe[0].min(table.msfe[1]);
    let combination_gain = 1.0 - table.msfe[2] / best_individual;
    let correction_gain = 1.0 - table.msfe[3] / table.msfe[2];
    if (combination_gain - 0.20).abs() > 0.01 {
        return fail(format!("combination gain {combination_gain:.4} vs 0.20 ±0.01"));
    }
    if (correction_gain - 0.31).abs() > 0.01 {
        return fail(format!("correction gain {correction_gain:.4} vs 0.31 ±0.01"));
    }
    Ok(format!("gains {:.2}% and {:.2}%", 100.0 * combination_gain, 100.0 * correction_gain))
}

/// The combined demo errors carry lag-1 autocorrelation of about 0.54.
fn combined_error_autocorrelation() -> Outcome {
    let table = bg1969_table().map_err(|e| e.to_string())?;
    let combined: Vec<f64> = table.rows.iter().map(|r| r.combined).collect();
    let rho = acf(&combined, 1).map_err(|e| e.to_string())?.rho[1];
    if (rho - 0.54).abs() > 0.03 {
        return fail(format!("lag-1 rho {rho:.4} vs 0.54 ±0.03"));
    }
    Ok(format!("lag-1 rho {rho:.4}"))
}

/// The two optimal-weight routes — constrained least squares and the
/// inverse-moment formula — agree to 1e-8 over 500 random instances.
/// Runtime budget: ten seconds.
fn weight_route_equivalence() -> Outcome {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..500u64 {
        let mut r = common::rng(seed ^ 0xA5A5);
        let n = r.random_range(2..=6usize);
        let t = r.random_range((n + 4)..=100usize);
        let (f, y) = common::dgp_random(seed, t, n, 0.3);
        let ols = restricted_ols_weights(&f, &y)
            .map_err(|e| format!("seed {seed}: ols: {e}"))?;
        let errors = Array2::from_shape_fn((t, n), |(row, col)| y[row] - f[(row, col)]);
        let sigma = error_moments(&errors).map_err(|e| format!("seed {seed}: {e}"))?;
        let bg = bg_weights(&sigma).map_err(|e| format!("seed {seed}: bg: {e}"))?;
        let delta = ols
            .weights()
            .iter()
            .zip(bg.weights())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst = worst.max(delta);
        if delta >= 1e-8 {
            return fail(format!("seed {seed} (T={t}, n={n}): max|dw| = {delta:.3e}"));
        }
    }
    let elapsed = started.elapsed();
    if elapsed.as_secs_f64() >= 10.0 {
        return fail(format!("took {elapsed:.2?}, budget 10s"));
    }
    Ok(format!("500 instances, worst max|dw| = {worst:.2e}, {elapsed:.0?}"))
}

/// GLS collapses to OLS under the identity covariance, and under a dense
/// AR(1) covariance it matches an independent bordered-system solve.
fn gls_reductions() -> Outcome {
    // Identity covariance: equality with restricted OLS to 1e-10.
    for seed in 0..50u64 {
        let t = 30 + (seed as usize % 40);
        let (f, y) = common::dgp_random(seed ^ 0x1DE, t, 2 + (seed as usize % 3), 0.0);
        let eye = Array2::eye(t);
        let gls = general_gls_weights(&f, &y, &eye)
            .map_err(|e| format!("seed {seed}: gls: {e}"))?;
        let ols = restricted_ols_weights(&f, &y)
            .map_err(|e| format!("seed {seed}: ols: {e}"))?;
        for (a, b) in gls.weights().iter().zip(ols.weights()) {
            if (a - b).abs() >= 1e-10 {
                return fail(format!("seed {seed}: identity-covariance gap {:.2e}", (a - b).abs()));
            }
        }
    }

    // AR(1) covariance: agreement with the Gauss–Jordan bordered system.
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut r = common::rng(seed ^ 0xC0FFEE);
        let t = r.random_range(6..=8usize);
        let n = r.random_range(2..=3usize);
        let phi: f64 = r.random_range(-0.85..0.85);
        let (f, y) = common::dgp_random(seed.wrapping_add(999), t, n, phi);
        let cov = common::ar1_cov_direct(phi, 1.0, t);
        let omega = Array2::from_shape_fn((t, t), |(i, j)| cov[i][j]);
        let gls = general_gls_weights(&f, &y, &omega)
            .map_err(|e| format!("seed {seed}: gls: {e}"))?;
        let precision = common::invert_direct(&cov)
            .ok_or_else(|| format!("seed {seed}: oracle inversion failed"))?;
        let oracle = common::lagrange_gls_oracle(&f, &y, &precision)
            .ok_or_else(|| format!("seed {seed}: oracle solve failed"))?;
        let delta = gls
            .weights()
            .iter()
            .zip(&oracle)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst = worst.max(delta);
        if delta >= 1e-10 {
            return fail(format!("seed {seed} (T={t}, n={n}, phi={phi:.2}): gap {delta:.3e}"));
        }
    }
    Ok(format!("identity x50 and AR(1)-oracle x100 agree, worst {worst:.2e}"))
}

/// All three risk-gap inequalities hold on random instances, and matching
/// coefficients give exactly zero gaps.
fn risk_bound_suite() -> Outcome {
    for seed in 0..200u64 {
        let mut r = common::rng(seed ^ 0xB0B);
        let t = r.random_range(20..=60usize);
        let n = r.random_range(2..=4usize);
        let gamma_true: f64 = r.random_range(-0.8..0.8);
        let shift: f64 = r.random_range(-0.3..0.3);
        let gamma_hat = (gamma_true + shift).clamp(-0.9, 0.9);
        let (f, y) = common::dgp_random(seed.wrapping_add(31), t, n, gamma_true.abs());

        // First pass finds both weight vectors; the budget must cover both
        // for the premise of the bounds to hold.
        let probe = risk_bound_report(&f, &y, gamma_true, gamma_hat, None)
            .map_err(|e| format!("seed {seed}: {e}"))?;
        let c = probe.weights_opt.l1_norm().max(probe.weights_hat.l1_norm());
        let report = risk_bound_report(&f, &y, gamma_true, gamma_hat, Some(c))
            .map_err(|e| format!("seed {seed}: {e}"))?;
        if !report.premise_holds {
            return fail(format!("seed {seed}: L1 premise failed at c = {c:.3}"));
        }
        if !report.within_bounds {
            return fail(format!(
                "seed {seed}: gaps {:?} exceed bounds {:?}",
                report.gaps, report.bounds
            ));
        }
    }

    // Matching coefficients: the two routes are the same computation, so
    // every gap must be exactly zero.
    for seed in [3u64, 17, 99] {
        let (f, y) = common::dgp_random(seed, 40, 3, 0.5);
        let report = risk_bound_report(&f, &y, 0.5, 0.5, None)
            .map_err(|e| format!("seed {seed}: {e}"))?;
        if report.gaps != [0.0, 0.0, 0.0] {
            return fail(format!("seed {seed}: gaps {:?} not exactly zero", report.gaps));
        }
    }
    Ok("200 bounded instances, exact zeros on matched coefficients".into())
}

/// Both estimation routes recover a known coefficient and known weights at
/// T=500, and correcting with the estimated factor whitens the stream, for
/// at least 45 of 50 fixed seeds each.
fn statistical_recovery() -> Outcome {
    const SEEDS: u64 = 50;
    let mut hl_ok = 0usize;
    let mut ts_ok = 0usize;
    let mut band_ok = 0usize;
    for seed in 0..SEEDS {
        let (f, y) = common::dgp_known(seed, 500, 0.5);

        let hl = hildreth_lu(&f, &y, 1, DEFAULT_GRID_STEP)
            .map_err(|e| format!("seed {seed}: {e}"))?;
        let w = hl.weights.weights();
        if (hl.gamma - 0.5).abs() <= 0.12
            && (w[0] - 0.6).abs() <= 0.1
            && (w[1] - 0.4).abs() <= 0.1
        {
            hl_ok += 1;
        }

        let (tw, tg) = two_step_gls(&f, &y, 1).map_err(|e| format!("seed {seed}: {e}"))?;
        let w = tw.weights();
        if (tg - 0.5).abs() <= 0.12 && (w[0] - 0.6).abs() <= 0.1 && (w[1] - 0.4).abs() <= 0.1 {
            ts_ok += 1;
        }

        // Estimated-factor correction of a pure AR(1) stream must pass the
        // white-noise band at lag one.
        let mut r = common::rng(seed.wrapping_add(7000));
        let e = common::ar1_series(&mut r, 500, 0.5, 1.0);
        let gamma = historical_gamma_slice(&e, 1, DEFAULT_CLAMP)
            .map_err(|e| format!("seed {seed}: {e}"))?;
        let corrected: Vec<f64> = (1..e.len()).map(|t| e[t] - gamma * e[t - 1]).collect();
        let rho1 = common::lag1_acf_direct(&corrected);
        if rho1.abs() <= 1.96 / (corrected.len() as f64).sqrt() {
            band_ok += 1;
        }
    }
    if hl_ok < 45 || ts_ok < 45 || band_ok < 45 {
        return fail(format!(
            "recovery counts grid={hl_ok} two-step={ts_ok} band={band_ok} of {SEEDS} (need 45)"
        ));
    }
    Ok(format!("grid {hl_ok}/50, two-step {ts_ok}/50, whiteness {band_ok}/50"))
}

/// The corrected MSFE is exactly quadratic in the factor, and every grid
/// row's minimum sits at the analytic vertex clamped and snapped to the grid.
fn quadratic_identity_and_grid_minimum() -> Outcome {
    let factors: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let start = PeriodIndex::quarter(1990, 1).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;

    for seed in 0..20u64 {
        let mut r = common::rng(seed.wrapping_add(400));
        let phi: f64 = r.random_range(-0.2..0.9);
        let e = common::ar1_series(&mut r, 60, phi, 1.0);

        // Identity: the three sufficient statistics reproduce the direct
        // MSFE at every factor.
        let stats = CorrStats::from_pairs((1..e.len()).map(|t| (e[t], e[t - 1])))
            .ok_or("empty pair set")?;
        for k in 0..=40 {
            let g = -1.0 + k as f64 * 0.05;
            let direct = (1..e.len())
                .map(|t| (e[t] - g * e[t - 1]).powi(2))
                .sum::<f64>()
                / (e.len() - 1) as f64;
            let resid = (stats.msfe_at(g) - direct).abs();
            worst = worst.max(resid);
            if resid >= 1e-10 {
                return fail(format!("seed {seed}, g={g:.2}: residual {resid:.3e}"));
            }
        }

        // Grid minimum: the reported best factor equals both a direct grid
        // scan and the clamped, snapped vertex.
        let errors: SeriesMap = e
            .iter()
            .enumerate()
            .map(|(k, &v)| (start.offset(k as i64), v))
            .collect();
        let window = PeriodMask::new("all", start, start.offset(59)).map_err(|e| e.to_string())?;
        let report = factor_grid_report(&errors, 1, &factors, &[window], None)
            .map_err(|e| e.to_string())?;
        let row = &report.rows[0];
        let stats = row.stats.ok_or("row lacks statistics")?;
        let best = row.best_factor.ok_or("row lacks a best factor")?;

        let scan = common::grid_argmin(
            &factors.iter().map(|g| stats.msfe_at(*g)).collect::<Vec<_>>(),
        );
        let vertex = stats.vertex().ok_or("degenerate vertex")?;
        let snapped = (vertex.clamp(0.0, 1.0) * 10.0).round() / 10.0;
        let analytic = factors
            .iter()
            .position(|g| (g - snapped).abs() < 1e-12)
            .ok_or("snapped vertex off the grid")?;
        if best != scan || best != analytic {
            return fail(format!(
                "seed {seed}: best {best} vs scan {scan} vs analytic {analytic}"
            ));
        }
    }
    Ok(format!("20 streams x 41 factors, worst residual {worst:.2e}"))
}

/// Optional survey replication, active only when the user supplies the raw
/// survey file and matching actuals via `CORRCAST_SPF_FILE` and
/// `CORRCAST_ACTUALS_FILE`. Deviations beyond tolerance are reported, never
/// failed: exact values depend on the actuals vintage in use.
fn survey_integration() -> Outcome {
    let (Ok(spf), Ok(actuals_path)) = (
        std::env::var("CORRCAST_SPF_FILE"),
        std::env::var("CORRCAST_ACTUALS_FILE"),
    ) else {
        return Ok("skipped: CORRCAST_SPF_FILE / CORRCAST_ACTUALS_FILE not set".into());
    };

    let run = || -> Result<String, Box<dyn std::error::Error>> {
        let (panel, _) = parse_spf_path(&spf, "UNEMP2", 1)?;
        let span = PeriodMask::new(
            "sample",
            PeriodIndex::quarter(1968, 4)?,
            PeriodIndex::quarter(2025, 2)?,
        )?;
        let panel = select_forecasters(&panel, 0, Some(&span))?;
        let (panel, _) = impute_forward(&panel)?;
        let actuals = read_actuals_csv(std::fs::File::open(&actuals_path)?, ActualTransform::Levels)?;

        let factors: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let window = PeriodMask::new(
            "2000Q1-2025Q2*",
            PeriodIndex::quarter(2000, 1)?,
            PeriodIndex::quarter(2025, 2)?,
        )?
        .with_exclusion(PeriodIndex::quarter(2020, 1)?, PeriodIndex::quarter(2022, 4)?)?;
        let errors = corrcast::eval::mean_error_series(&panel, &actuals);
        let grid = factor_grid_report(&errors, 1, &factors, &[window], None)?;
        let row = &grid.rows[0];
        let expected = [(1, 0.95), (2, 0.90), (3, 0.86), (4, 0.84), (5, 0.83)];
        let mut notes = Vec::new();
        for (idx, want) in expected {
            match row.relative.get(idx).copied().flatten() {
                Some(got) if (got - want).abs() <= 0.02 => {}
                Some(got) => notes.push(format!("f{}: {got:.3} vs {want}", factors[idx])),
                None => notes.push(format!("f{}: missing", factors[idx])),
            }
        }

        let sample = align(&panel, &actuals)?;
        let opts = MethodOptions { include_individuals: false, ..MethodOptions::default() };
        let cmp = method_comparison(&sample, PeriodIndex::quarter(2000, 1)?, &opts)?;
        let find = |label: &str| cmp.rows.iter().find(|r| r.label == label);
        if let Some(mean) = find("mean") {
            if (mean.msfe - 0.1563).abs() > 0.02 {
                notes.push(format!("mean msfe {:.4} vs 0.1563", mean.msfe));
            }
        }
        for (label, want) in [
            ("mean+fixed(0.50)", 0.5132),
            ("mean+trained", 0.4663),
            ("gls", 0.5275),
        ] {
            match find(label) {
                Some(row) if (row.relative - want).abs() <= 0.02 => {}
                Some(row) => notes.push(format!("{label}: {:.4} vs {want}", row.relative)),
                None => notes.push(format!("{label}: row missing")),
            }
        }
        Ok(if notes.is_empty() {
            "survey values reproduced within tolerance".into()
        } else {
            format!("deviations (reported, non-blocking): {}", notes.join("; "))
        })
    };
    // Non-blocking by design: report problems, do not fail the gate.
    match run() {
        Ok(detail) => Ok(detail),
        Err(e) => Ok(format!("survey run aborted (non-blocking): {e}")),
    }
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("golden demo table", golden_demo_table),
        ("demo improvement ratios", demo_improvement_ratios),
        ("combined-error lag-1 autocorrelation", combined_error_autocorrelation),
        ("weight-route equivalence", weight_route_equivalence),
        ("gls reductions", gls_reductions),
        ("risk-bound suite", risk_bound_suite),
        ("statistical recovery", statistical_recovery),
        ("quadratic identity & grid minimum", quadratic_identity_and_grid_minimum),
        ("survey integration (optional)", survey_integration),
    ];

    let mut failures = Vec::new();
    for (name, criterion) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(criterion))
            .unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  {name:<38} {detail}"),
            Err(detail) => {
                println!("FAIL  {name:<38} {detail}");
                failures.push(name);
            }
        }
    }
    assert!(failures.is_empty(), "acceptance criteria failed: {failures:?}");
}
