//! The budgeted uncertainty term and its linear dual.
//!
//! For a fixed cut, the adversary picks at most `⌊Γ⌋` cut edges at full
//! half-width plus one more at fraction `Γ - ⌊Γ⌋`. Since only a cardinality
//! budget couples the choices, the maximum is attained by taking the largest
//! half-widths in order.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::causal::{BinaryMatrix, Matrix};
use crate::math::floor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualEntry {
    pub i: usize,
    pub j: usize,
    pub p: f64,
}

/// Dual multipliers `(p0, p_ij)` over `J = {(i, j) : θ̂_ij > 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub p0: f64,
    pub p: Vec<DualEntry>,
}

impl DualCertificate {
    /// `Γ·p0 + Σ p_ij`.
    pub fn objective(&self, gamma: f64) -> f64 {
        gamma * self.p0 + self.p.iter().map(|e| e.p).sum::<f64>()
    }

    /// Exact check of `p0 ≥ 0`, `p_ij ≥ 0` and `p0 + p_ij ≥ θ̂_ij y_ij` for
    /// every `(i, j) ∈ J`, with every member of `J` covered.
    pub fn is_feasible(&self, cross: &BinaryMatrix, theta_hat: &Matrix) -> bool {
        if !(self.p0 >= 0.0) {
            return false;
        }
        let members = active_set(theta_hat);
        if members.len() != self.p.len() {
            return false;
        }
        members.iter().zip(&self.p).all(|(&(i, j), e)| {
            e.i == i
                && e.j == j
                && e.p >= 0.0
                && self.p0 + e.p >= theta_hat.get(i, j) * f64::from(cross.get(i, j))
        })
    }
}

fn active_set(theta_hat: &Matrix) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..theta_hat.rows() {
        for j in 0..theta_hat.cols() {
            if theta_hat.get(i, j) > 0.0 {
                out.push((i, j));
            }
        }
    }
    out
}

/// Half-widths of cut edges in `J`, sorted descending.
fn cut_values(cross: &BinaryMatrix, theta_hat: &Matrix) -> Vec<f64> {
    let mut v = Vec::new();
    for i in 0..cross.rows() {
        for j in 0..cross.cols() {
            let h = theta_hat.get(i, j);
            if cross.get(i, j) == 1 && h > 0.0 {
                v.push(h);
            }
        }
    }
    v.sort_unstable_by(|a, b| b.total_cmp(a));
    v
}

/// Budgeted top sum over values sorted descending.
pub(crate) fn budgeted_sum(sorted_desc: &[f64], gamma: f64) -> f64 {
    let whole = floor(gamma);
    let frac = gamma - whole;
    let n = sorted_desc.len();
    let full = if whole >= n as f64 { n } else { whole as usize };
    let mut s: f64 = sorted_desc[..full].iter().sum();
    if full < n && frac > 0.0 {
        s += frac * sorted_desc[full];
    }
    s
}

/// `max_{S ⊆ J, |S| ≤ Γ} Σ_S θ̂ y + (Γ - ⌊Γ⌋) θ̂_t y_t`, in closed form.
pub fn robust_term(cross: &BinaryMatrix, theta_hat: &Matrix, gamma: f64) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    budgeted_sum(&cut_values(cross, theta_hat), gamma)
}

/// Solves `min Γ p0 + Σ p_ij` s.t. `p0 + p_ij ≥ θ̂_ij y_ij`, `p ≥ 0`, in
/// closed form: `p0` is the `(⌊Γ⌋+1)`-th largest active cut value (0 when
/// there are fewer) and `p_ij = max(0, θ̂_ij y_ij - p0)`.
pub fn robust_term_dual(cross: &BinaryMatrix, theta_hat: &Matrix, gamma: f64) -> (f64, DualCertificate) {
    let values = cut_values(cross, theta_hat);
    let whole = floor(gamma.max(0.0));
    let p0 = if whole < values.len() as f64 { values[whole as usize] } else { 0.0 };
    let p = active_set(theta_hat)
        .into_iter()
        .map(|(i, j)| {
            let need = theta_hat.get(i, j) * f64::from(cross.get(i, j));
            let mut p = (need - p0).max(0.0);
            // keep p0 + p >= need exact under rounding
            while p0 + p < need {
                p = p.next_up();
            }
            DualEntry { i, j, p }
        })
        .collect();
    let cert = DualCertificate { p0, p };
    (cert.objective(gamma), cert)
}

/// `Σ θ_ij y_ij + robust_term`.
pub fn robust_cut_cost(cross: &BinaryMatrix, theta: &Matrix, theta_hat: &Matrix, gamma: f64) -> f64 {
    let mut det = 0.0;
    for i in 0..cross.rows() {
        for j in 0..cross.cols() {
            if cross.get(i, j) == 1 {
                det += theta.get(i, j);
            }
        }
    }
    det + robust_term(cross, theta_hat, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Three cut edges with half-widths 0.5, 0.4, 0.3 and weights 1, 2, 3.
    fn three_cut() -> (BinaryMatrix, Matrix, Matrix) {
        let cross = BinaryMatrix::from_rows(&[vec![1, 1, 1]]).unwrap();
        let theta = Matrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        let hat = Matrix::from_rows(&[vec![0.5, 0.4, 0.3]]).unwrap();
        (cross, theta, hat)
    }

    /// Brute force over all subsets plus the fractional edge.
    fn enumerate(values: &[f64], gamma: f64) -> f64 {
        let whole = libm::floor(gamma) as usize;
        let frac = gamma - libm::floor(gamma);
        let n = values.len();
        let mut best = 0.0f64;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize > whole {
                continue;
            }
            let base: f64 = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| values[b]).sum();
            let extra = (0..n).filter(|b| mask >> b & 1 == 0).map(|b| frac * values[b]).fold(0.0, f64::max);
            best = best.max(base + extra);
        }
        best
    }

    #[test]
    fn budget_examples() {
        let (cross, _, hat) = three_cut();
        assert_eq!(robust_term(&cross, &hat, 0.0), 0.0);
        assert!((robust_term(&cross, &hat, 1.0) - 0.5).abs() < 1e-15);
        assert!((robust_term(&cross, &hat, 1.5) - 0.7).abs() < 1e-15);
        for g in [0.0, 0.3, 1.0, 1.5, 2.0, 2.7, 3.0, 5.0] {
            assert!((robust_term(&cross, &hat, g) - enumerate(&[0.5, 0.4, 0.3], g)).abs() < 1e-15);
        }
    }

    #[test]
    fn dual_examples() {
        let (cross, _, hat) = three_cut();
        let (v, cert) = robust_term_dual(&cross, &hat, 1.0);
        assert_eq!(cert.p0, 0.4);
        assert!((v - 0.5).abs() < 1e-15);
        assert!(cert.is_feasible(&cross, &hat));
        let (v, cert) = robust_term_dual(&cross, &hat, 3.0);
        assert_eq!(cert.p0, 0.0);
        assert!((v - 1.2).abs() < 1e-15);
        let empty = BinaryMatrix::zeros(1, 3);
        let (v, cert) = robust_term_dual(&empty, &hat, 2.0);
        assert_eq!((v, cert.p0), (0.0, 0.0));
        assert!(cert.is_feasible(&empty, &hat));
    }

    #[test]
    fn cost_examples() {
        let (cross, theta, hat) = three_cut();
        assert_eq!(robust_cut_cost(&cross, &theta, &hat, 0.0), 6.0);
        assert!((robust_cut_cost(&cross, &theta, &hat, 1.0) - 6.5).abs() < 1e-12);
        assert!((robust_cut_cost(&cross, &theta, &hat, 3.0) - 7.2).abs() < 1e-12);
    }

    #[test]
    fn zero_half_widths_are_outside_j() {
        let cross = BinaryMatrix::from_rows(&[vec![1, 0]]).unwrap();
        let hat = Matrix::from_rows(&[vec![0.0, 0.3]]).unwrap();
        let (v, cert) = robust_term_dual(&cross, &hat, 1.0);
        assert_eq!(v, 0.0);
        assert_eq!(cert.p.len(), 1);
        assert_eq!((cert.p[0].i, cert.p[0].j), (0, 1));
    }
}
