//! Shared fixtures for the integration suites: data-generating processes
//! and independent oracle implementations that deliberately avoid the
//! library's own linear algebra.
#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// AR(1) innovations `u[t] = phi u[t-1] + sigma e[t]` started at zero.
pub fn ar1_series(rng: &mut ChaCha8Rng, t: usize, phi: f64, sigma: f64) -> Vec<f64> {
    let mut u = vec![0.0; t];
    for k in 0..t {
        let prev = if k == 0 { 0.0 } else { u[k - 1] };
        u[k] = phi * prev + sigma * normal(rng);
    }
    u
}

/// A full-rank combination sample: `n` forecasters sharing a strong common
/// signal, a target with random positive weights, and AR(`phi`) noise.
pub fn dgp_random(seed: u64, t: usize, n: usize, phi: f64) -> (Array2<f64>, Array1<f64>) {
    let mut r = rng(seed);
    let mut w: Vec<f64> = (0..n).map(|_| r.random_range(0.2..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);

    let signal: Vec<f64> = (0..t).map(|_| 5.0 * normal(&mut r)).collect();
    let mut f = Array2::zeros((t, n));
    for row in 0..t {
        for col in 0..n {
            f[(row, col)] = signal[row] + normal(&mut r);
        }
    }
    let u = ar1_series(&mut r, t, phi, 1.0);
    let y = Array1::from_iter(
        (0..t).map(|row| (0..n).map(|col| w[col] * f[(row, col)]).sum::<f64>() + u[row]),
    );
    (f, y)
}

/// Two forecasters with known weights `(0.6, 0.4)` and AR(`phi`) noise —
/// the recovery benchmark.
pub fn dgp_known(seed: u64, t: usize, phi: f64) -> (Array2<f64>, Array1<f64>) {
    let mut r = rng(seed);
    let signal: Vec<f64> = (0..t).map(|_| 5.0 * normal(&mut r)).collect();
    let mut f = Array2::zeros((t, 2));
    for row in 0..t {
        f[(row, 0)] = signal[row] + normal(&mut r);
        f[(row, 1)] = signal[row] + normal(&mut r);
    }
    let u = ar1_series(&mut r, t, phi, 1.0);
    let y = Array1::from_iter((0..t).map(|row| 0.6 * f[(row, 0)] + 0.4 * f[(row, 1)] + u[row]));
    (f, y)
}

/// Gauss–Jordan elimination with partial pivoting on an augmented system;
/// plain `Vec` arithmetic, independent of the library's solvers.
pub fn gauss_jordan_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = a[i].clone();
            row.push(b[i]);
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            m[i][col].abs().partial_cmp(&m[j][col].abs()).expect("finite")
        })?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        let p = m[col][col];
        for x in m[col].iter_mut() {
            *x /= p;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = m[row][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..=n {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    Some(m.into_iter().map(|row| row[n]).collect())
}

/// Matrix inverse by Gauss–Jordan, column by column.
pub fn invert_direct(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(gauss_jordan_solve(a, &e)?);
    }
    // cols[j][i] is entry (i, j) of the inverse.
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
}

/// Stationary AR(1) covariance in closed form:
/// `sigma2 / (1 - phi^2) * phi^|i-j|`.
pub fn ar1_cov_direct(phi: f64, sigma2: f64, t: usize) -> Vec<Vec<f64>> {
    let scale = sigma2 / (1.0 - phi * phi);
    (0..t)
        .map(|i| {
            (0..t)
                .map(|j| scale * phi.powi((i as i32 - j as i32).abs()))
                .collect()
        })
        .collect()
}

/// Sum-to-one GLS weights by brute force: the bordered normal equations
///
/// ```text
/// [ F' P F   1 ] [ w ]   [ F' P y ]
/// [ 1'       0 ] [ l ] = [ 1      ]
/// ```
///
/// solved by Gauss–Jordan, with `P` the supplied precision matrix.
pub fn lagrange_gls_oracle(
    f: &Array2<f64>,
    y: &Array1<f64>,
    precision: &[Vec<f64>],
) -> Option<Vec<f64>> {
    let t = f.nrows();
    let n = f.ncols();
    // pf = P F (t x n), py = P y (t).
    let pf: Vec<Vec<f64>> = (0..t)
        .map(|i| {
            (0..n)
                .map(|c| (0..t).map(|k| precision[i][k] * f[(k, c)]).sum())
                .collect()
        })
        .collect();
    let py: Vec<f64> = (0..t)
        .map(|i| (0..t).map(|k| precision[i][k] * y[k]).sum())
        .collect();

    let mut a = vec![vec![0.0; n + 1]; n + 1];
    let mut b = vec![0.0; n + 1];
    for r in 0..n {
        for c in 0..n {
            a[r][c] = (0..t).map(|k| f[(k, r)] * pf[k][c]).sum();
        }
        a[r][n] = 1.0;
        a[n][r] = 1.0;
        b[r] = (0..t).map(|k| f[(k, r)] * py[k]).sum();
    }
    b[n] = 1.0;
    let sol = gauss_jordan_solve(&a, &b)?;
    Some(sol[..n].to_vec())
}

/// Index of the smallest value under a strict left-to-right scan.
pub fn grid_argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = k;
        }
    }
    best
}

/// Packs `(f, y)` arrays into an aligned calendar sample: origin `k`
/// forecasts target `k + h` starting from `start`.
pub fn aligned_from_arrays(
    f: &Array2<f64>,
    y: &Array1<f64>,
    start: corrcast::series::PeriodIndex,
    h: usize,
) -> corrcast::series::AlignedSample {
    use corrcast::series::{align, ActualSeries, ForecastPanel};
    let (t, n) = f.dim();
    let ids: Vec<String> = (1..=n).map(|k| k.to_string()).collect();
    let mut panel = ForecastPanel::new(ids.clone(), h).unwrap();
    let mut actuals = ActualSeries::new();
    for row in 0..t {
        let origin = start.offset(row as i64);
        for (col, id) in ids.iter().enumerate() {
            panel.insert(id, origin, f[(row, col)]).unwrap();
        }
        actuals.insert(origin.offset(h as i64), y[row]).unwrap();
    }
    align(&panel, &actuals).unwrap()
}

/// Centered lag-1 autocorrelation computed directly (no library call).
pub fn lag1_acf_direct(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let denom: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    let num: f64 = (1..xs.len())
        .map(|t| (xs[t] - mean) * (xs[t - 1] - mean))
        .sum();
    num / denom
}
