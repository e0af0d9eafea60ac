//! Independent reference implementations used by the property and
//! acceptance tests. Nothing here calls into the solver code it checks.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use socrat_core::{DependencyGraph, Matrix, PartitionConfig, Side, TokenSequence};

pub fn seq(n: usize, side: Side) -> TokenSequence {
    TokenSequence::from_surfaces((0..n).map(|i| format!("t{i}")).collect::<Vec<_>>(), side).unwrap()
}

pub fn graph_from(theta: Vec<Vec<f64>>, hat: Vec<Vec<f64>>) -> DependencyGraph {
    let (n, m) = (theta.len(), theta[0].len());
    DependencyGraph::from_weights(
        seq(n, Side::Input),
        seq(m, Side::Output),
        Matrix::from_rows(&theta).unwrap(),
        Matrix::from_rows(&hat).unwrap(),
    )
    .unwrap()
}

/// θ, θ̂ ~ U(0, 1), with roughly a fifth of the entries zeroed.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DependencyGraph {
    let draw = |rng: &mut ChaCha8Rng| {
        (0..n)
            .map(|_| (0..m).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen::<f64>() }).collect())
            .collect::<Vec<Vec<f64>>>()
    };
    let theta = draw(rng);
    let hat = draw(rng);
    graph_from(theta, hat)
}

/// Random `(lo, hi)` with `k*lo <= n <= k*hi`.
pub fn random_bounds(rng: &mut ChaCha8Rng, n: usize, k: usize) -> (usize, usize) {
    let lo = rng.gen_range(1..=n / k);
    let min_hi = n.div_ceil(k).max(lo);
    let hi = rng.gen_range(min_hi..=n);
    (lo, hi)
}

pub fn random_config(rng: &mut ChaCha8Rng, n: usize, m: usize, k: usize, gamma: f64) -> PartitionConfig {
    let (c_u_min, c_u_max) = random_bounds(rng, n, k);
    let (c_v_min, c_v_max) = random_bounds(rng, m, k);
    PartitionConfig {
        k,
        c_u_min,
        c_u_max,
        c_v_min,
        c_v_max,
        gamma,
        abs_gap_tol: 0.0,
        time_limit_secs: f64::INFINITY,
    }
}

/// Cut weight plus the budgeted top sum of cut half-widths.
pub fn cost_of(g: &DependencyGraph, u: &[usize], v: &[usize], gamma: f64) -> f64 {
    let mut det = 0.0;
    let mut hats = Vec::new();
    for (i, &a) in u.iter().enumerate() {
        for (j, &b) in v.iter().enumerate() {
            if a != b {
                det += g.theta.get(i, j);
                let h = g.theta_hat.get(i, j);
                if h > 0.0 {
                    hats.push(h);
                }
            }
        }
    }
    det + top_budget(hats, gamma)
}

/// `max Σ_{S} v + frac * v_t` over `|S| <= ⌊Γ⌋`, by sorting.
pub fn top_budget(mut values: Vec<f64>, gamma: f64) -> f64 {
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let whole = gamma.floor();
    let frac = gamma - whole;
    let mut s = 0.0;
    for (r, v) in values.iter().enumerate() {
        if (r as f64) < whole {
            s += v;
        } else {
            if frac > 0.0 {
                s += frac * v;
            }
            break;
        }
    }
    s
}

/// Exhaustive enumeration of all `K^(n+m)` labelings within the bounds.
/// Returns the minimum cost and one minimizing `(u, v)`.
pub fn brute_force(g: &DependencyGraph, cfg: &PartitionConfig) -> (f64, Vec<usize>, Vec<usize>) {
    let (n, m, k) = (g.n_inputs(), g.n_outputs(), cfg.k);
    let total = n + m;
    let mut labels = vec![0usize; total];
    let mut best = (f64::INFINITY, Vec::new(), Vec::new());
    let ok = |ls: &[usize], lo: usize, hi: usize| {
        (0..k).all(|l| {
            let c = ls.iter().filter(|&&x| x == l).count();
            c >= lo && c <= hi
        })
    };
    loop {
        let (u, v) = labels.split_at(n);
        if ok(u, cfg.c_u_min, cfg.c_u_max) && ok(v, cfg.c_v_min, cfg.c_v_max) {
            let c = cost_of(g, u, v, cfg.gamma);
            if c < best.0 {
                best = (c, u.to_vec(), v.to_vec());
            }
        }
        let mut p = 0;
        loop {
            if p == total {
                return best;
            }
            labels[p] += 1;
            if labels[p] < k {
                break;
            }
            labels[p] = 0;
            p += 1;
        }
    }
}

pub fn levenshtein_recursive(a: &[char], b: &[char]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            let sub = levenshtein_recursive(ra, rb) + usize::from(x != y);
            let del = levenshtein_recursive(ra, b) + 1;
            let ins = levenshtein_recursive(a, rb) + 1;
            sub.min(del).min(ins)
        }
    }
}

/// Root of a monotone function on `[lo, hi]` by bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}
