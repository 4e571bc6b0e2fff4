//! Small dense linear-algebra kernels.
//!
//! The problem sizes here are modest (a handful of forecasters, a few hundred
//! periods), so the crate carries its own Cholesky and partially pivoted LU
//! rather than linking an external BLAS/LAPACK backend. All routines return
//! `None` on numerical breakdown and leave error classification to callers.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// Lower Cholesky factor `L` with `A = L L^T`, or `None` when `A` is not
/// (numerically) symmetric positive definite.
pub fn cholesky_lower(a: &ArrayView2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return None;
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// Solves `L x = b` for lower-triangular `L` by forward substitution.
pub fn solve_lower(l: &ArrayView2<f64>, b: &ArrayView1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut x = Array1::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solves `L^T x = b` for lower-triangular `L` by back substitution.
pub fn solve_lower_transpose(l: &ArrayView2<f64>, b: &ArrayView1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut x = Array1::zeros(n);
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solves `A x = b` for symmetric positive definite `A` via Cholesky.
pub fn solve_spd(a: &ArrayView2<f64>, b: &ArrayView1<f64>) -> Option<Array1<f64>> {
    let l = cholesky_lower(a)?;
    let z = solve_lower(&l.view(), b);
    Some(solve_lower_transpose(&l.view(), &z.view()))
}

/// Whitens the columns of `e`: returns `L^{-1} e` for the lower factor `L`.
pub fn whiten_columns(l: &ArrayView2<f64>, e: &ArrayView2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(e.dim());
    for (j, col) in e.columns().into_iter().enumerate() {
        let w = solve_lower(l, &col);
        out.column_mut(j).assign(&w);
    }
    out
}

/// Partially pivoted LU decomposition, stored in place.
pub struct Lu {
    lu: Array2<f64>,
    perm: Vec<usize>,
}

impl Lu {
    /// Factorizes `A = P L U`; `None` when a pivot vanishes.
    pub fn new(a: &ArrayView2<f64>) -> Option<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return None;
        }
        let mut lu = a.to_owned();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let (mut pivot_row, mut pivot_abs) = (col, lu[(col, col)].abs());
            for r in col + 1..n {
                let v = lu[(r, col)].abs();
                if v > pivot_abs {
                    pivot_row = r;
                    pivot_abs = v;
                }
            }
            if pivot_abs == 0.0 || !pivot_abs.is_finite() {
                return None;
            }
            if pivot_row != col {
                perm.swap(pivot_row, col);
                for c in 0..n {
                    let tmp = lu[(pivot_row, c)];
                    lu[(pivot_row, c)] = lu[(col, c)];
                    lu[(col, c)] = tmp;
                }
            }
            let pivot = lu[(col, col)];
            for r in col + 1..n {
                let factor = lu[(r, col)] / pivot;
                lu[(r, col)] = factor;
                for c in col + 1..n {
                    lu[(r, c)] -= factor * lu[(col, c)];
                }
            }
        }
        Some(Self { lu, perm })
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &ArrayView1<f64>) -> Array1<f64> {
        let n = self.lu.nrows();
        let mut x: Array1<f64> = Array1::from_iter(self.perm.iter().map(|&p| b[p]));
        for i in 1..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.lu[(i, k)] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.lu[(i, k)] * x[k];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    /// Explicit inverse, column by column.
    pub fn inverse(&self) -> Array2<f64> {
        let n = self.lu.nrows();
        let mut inv = Array2::zeros((n, n));
        let mut e = Array1::zeros(n);
        for j in 0..n {
            e.fill(0.0);
            e[j] = 1.0;
            inv.column_mut(j).assign(&self.solve(&e.view()));
        }
        inv
    }
}

/// Solves `A x = b` for symmetric `A`: Cholesky first, pivoted LU as the
/// fallback for indefinite but regular systems.
pub fn solve_sym(a: &ArrayView2<f64>, b: &ArrayView1<f64>) -> Option<Array1<f64>> {
    if let Some(x) = solve_spd(a, b) {
        return Some(x);
    }
    Lu::new(a).map(|lu| lu.solve(b))
}

/// Matrix 1-norm (maximum absolute column sum).
pub fn norm_1(a: &ArrayView2<f64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// 1-norm condition estimate via the explicit inverse.
///
/// Intended for the small moment matrices of this crate; returns infinity
/// when the factorization breaks down.
pub fn condition_1(a: &ArrayView2<f64>) -> f64 {
    match Lu::new(a) {
        Some(lu) => {
            let inv = lu.inverse();
            let c = norm_1(a) * norm_1(&inv.view());
            if c.is_finite() {
                c
            } else {
                f64::INFINITY
            }
        }
        None => f64::INFINITY,
    }
}

/// Inverse of a symmetric positive definite matrix via Cholesky,
/// symmetrized against round-off.
pub fn spd_inverse(a: &ArrayView2<f64>) -> Option<Array2<f64>> {
    let l = cholesky_lower(a)?;
    let n = a.nrows();
    let mut inv = Array2::zeros((n, n));
    let mut e = Array1::zeros(n);
    for j in 0..n {
        e.fill(0.0);
        e[j] = 1.0;
        let z = solve_lower(&l.view(), &e.view());
        inv.column_mut(j).assign(&solve_lower_transpose(&l.view(), &z.view()));
    }
    let symmetrized = 0.5 * (&inv + &inv.t());
    Some(symmetrized)
}
