//! Dense Cholesky routines for the small symmetric positive-definite systems
//! that come out of the per-token regressions.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;

/// Lower-triangular factor `L` (row-major, `n x n`) with `A = L Lᵀ`, or `None`
/// if `a` is not numerically positive definite.
pub(crate) fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b`.
pub(crate) fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// Diagonal of `A⁻¹` from the factor of `A`.
pub(crate) fn inverse_diagonal(l: &[f64], n: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    (0..n)
        .map(|i| {
            e[i] = 1.0;
            let col = cholesky_solve(l, n, &e);
            e[i] = 0.0;
            col[i]
        })
        .collect()
}
