//! Spectral co-clustering baseline.
//!
//! Normalizes `A_n = D1^{-1/2} θ D2^{-1/2}`, takes singular vectors 2 through
//! `⌈log2 K⌉ + 1`, stacks the rescaled left and right vectors into one
//! embedding and clusters it with k-means. Cardinality bounds are not
//! enforced.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::causal::{DependencyGraph, Matrix};
use crate::error::{Error, Result};
use crate::math::sqrt;

use super::{canonical_labels, Partition, PartitionConfig, SolverKind};

const SEED: u64 = 0x5eed;
const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITER: usize = 300;
const POWER_MAX_ITER: usize = 20_000;
const POWER_TOL: f64 = 1e-12;

/// Co-clusters with `cfg.k` clusters and reports the robust cost under
/// `cfg.gamma`. Only `k` and `gamma` are read from `cfg`.
pub fn cocluster_spectral(graph: &DependencyGraph, cfg: &PartitionConfig) -> Result<Partition> {
    let (n, m) = (graph.n_inputs(), graph.n_outputs());
    let max = n.min(m);
    if cfg.k == 0 || cfg.k > max {
        return Err(Error::InvalidK { k: cfg.k, max });
    }
    if cfg.k == 1 {
        return Partition::from_labels(graph, 1, vec![0; n], vec![0; m], cfg.gamma, SolverKind::Spectral);
    }
    let (an, d1, d2) = normalize(&graph.theta);
    let n_sv = (usize::BITS - (cfg.k - 1).leading_zeros()) as usize + 1;
    let triplets = top_singular_triplets(&an, n_sv, SEED);
    let dim = n_sv - 1;
    let mut points = Vec::with_capacity(n + m);
    for (i, d) in d1.iter().enumerate() {
        points.push(triplets[1..].iter().map(|t| t.u[i] / sqrt(*d)).collect::<Vec<f64>>());
    }
    for (j, d) in d2.iter().enumerate() {
        points.push(triplets[1..].iter().map(|t| t.v[j] / sqrt(*d)).collect::<Vec<f64>>());
    }
    debug_assert!(points.iter().all(|p| p.len() == dim));
    let raw = kmeans(&points, cfg.k, SEED);
    let canon = canonical_labels(&raw[..n], &raw[n..]);
    Partition::from_labels(graph, cfg.k, canon[..n].to_vec(), canon[n..].to_vec(), cfg.gamma, SolverKind::Spectral)
}

/// Normalized matrix and row/column degrees (zero degrees replaced by 1).
pub fn normalize(theta: &Matrix) -> (Matrix, Vec<f64>, Vec<f64>) {
    let (n, m) = (theta.rows(), theta.cols());
    let fix = |d: f64| if d > 0.0 { d } else { 1.0 };
    let d1: Vec<f64> = (0..n).map(|i| fix(theta.row(i).iter().sum())).collect();
    let d2: Vec<f64> = (0..m).map(|j| fix((0..n).map(|i| theta.get(i, j)).sum())).collect();
    let an = Matrix::from_fn(n, m, |i, j| theta.get(i, j) / sqrt(d1[i] * d2[j]));
    (an, d1, d2)
}

#[derive(Debug, Clone)]
pub struct SingularTriplet {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize_vec(v: &mut [f64]) -> f64 {
    let norm = sqrt(dot(v, v));
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let p = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
    }
}

/// Leading `r` singular triplets of `a` by power iteration on `AᵀA` with
/// deflation. When `r` exceeds the rank, the trailing triplets have
/// `sigma = 0` and an arbitrary orthonormal `v`.
pub fn top_singular_triplets(a: &Matrix, r: usize, seed: u64) -> Vec<SingularTriplet> {
    let (n, m) = (a.rows(), a.cols());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vs: Vec<Vec<f64>> = Vec::new();
    let mut out = Vec::new();
    let ata = |v: &[f64]| -> Vec<f64> {
        let av: Vec<f64> = (0..n).map(|i| dot(a.row(i), v)).collect();
        (0..m).map(|j| (0..n).map(|i| a.get(i, j) * av[i]).sum()).collect()
    };
    for _ in 0..r.min(m) {
        let mut v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        orthogonalize(&mut v, &vs);
        normalize_vec(&mut v);
        for _ in 0..POWER_MAX_ITER {
            let mut w = ata(&v);
            orthogonalize(&mut w, &vs);
            if normalize_vec(&mut w) <= 1e-300 {
                break;
            }
            let change: f64 = w.iter().zip(&v).map(|(x, y)| (x - y) * (x - y)).sum();
            v = w;
            if change < POWER_TOL * POWER_TOL {
                break;
            }
        }
        let mut u: Vec<f64> = (0..n).map(|i| dot(a.row(i), &v)).collect();
        let sigma = normalize_vec(&mut u);
        if sigma <= 1e-12 {
            u.iter_mut().for_each(|x| *x = 0.0);
        }
        vs.push(v.clone());
        out.push(SingularTriplet { sigma, u, v });
    }
    out
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding and Lloyd iterations, best inertia over restarts.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let (inertia, labels) = kmeans_once(points, k, &mut rng);
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    best.map(|b| b.1).unwrap_or_default()
}

fn kmeans_once(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> (f64, Vec<usize>) {
    let n = points.len();
    let mut centers: Vec<Vec<f64>> = vec![points[rng.gen_range(0..n)].clone()];
    let mut d: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.gen_range(0.0..total);
            let mut idx = n - 1;
            for (i, &di) in d.iter().enumerate() {
                if t < di {
                    idx = i;
                    break;
                }
                t -= di;
            }
            idx
        } else {
            rng.gen_range(0..n)
        };
        centers.push(points[pick].clone());
        for (di, p) in d.iter_mut().zip(points) {
            *di = di.min(dist2(p, &centers[centers.len() - 1]));
        }
    }
    let mut labels = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            for c in 1..k {
                if dist2(p, &centers[c]) < dist2(p, &centers[best]) {
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let dim = points[0].len();
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            if members.is_empty() {
                continue;
            }
            for (t, x) in center.iter_mut().enumerate().take(dim) {
                *x = members.iter().map(|p| p[t]).sum::<f64>() / members.len() as f64;
            }
        }
    }
    let inertia = points.iter().zip(&labels).map(|(p, &l)| dist2(p, &centers[l])).sum();
    (inertia, labels)
}
