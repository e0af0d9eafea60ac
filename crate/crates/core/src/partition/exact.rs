//! Depth-first branch and bound over joint label assignments.
//!
//! Nodes are labelled in decreasing order of incident weight. A label may
//! only be opened in order (`label <= labels used so far`), which removes
//! the `K!` relabelling symmetry. The lower bound at a search node is the
//! exact cost of the decided cut edges, plus for every undecided node the
//! cheapest label it could still take against the decided opposite side.

use alloc::vec;
use alloc::vec::Vec;

use crate::causal::{DependencyGraph, Matrix};
use crate::error::Result;

use super::robust::budgeted_sum;
use super::{canonical_labels, cross_matrix, robust_cut_cost, Partition, PartitionConfig, SolverKind};

const UNSET: usize = usize::MAX;

/// Polled once per search node after the first feasible solution is known.
pub trait StopCondition {
    fn should_stop(&self) -> bool;
}

/// Never stops early.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoLimit;

impl StopCondition for NoLimit {
    fn should_stop(&self) -> bool {
        false
    }
}

/// Wall-clock deadline.
#[cfg(feature = "std")]
#[derive(Debug, Clone, Copy)]
pub struct TimeLimit {
    deadline: Option<std::time::Instant>,
}

#[cfg(feature = "std")]
impl TimeLimit {
    /// A non-finite limit never expires.
    pub fn from_secs(secs: f64) -> Self {
        let deadline = std::time::Duration::try_from_secs_f64(secs)
            .ok()
            .and_then(|d| std::time::Instant::now().checked_add(d));
        TimeLimit { deadline }
    }
}

#[cfg(feature = "std")]
impl StopCondition for TimeLimit {
    fn should_stop(&self) -> bool {
        self.deadline.is_some_and(|d| std::time::Instant::now() >= d)
    }
}

/// Exact solver with the wall-clock limit from `cfg.time_limit_secs`. On
/// timeout the incumbent is returned with `optimal = false`.
#[cfg(feature = "std")]
pub fn partition_exact(graph: &DependencyGraph, cfg: &PartitionConfig) -> Result<Partition> {
    partition_exact_with(graph, cfg, &TimeLimit::from_secs(cfg.time_limit_secs))
}

/// Exact solver without a time limit.
#[cfg(not(feature = "std"))]
pub fn partition_exact(graph: &DependencyGraph, cfg: &PartitionConfig) -> Result<Partition> {
    partition_exact_with(graph, cfg, &NoLimit)
}

/// Exact solver with a caller-supplied stop condition.
pub fn partition_exact_with<S: StopCondition + ?Sized>(
    graph: &DependencyGraph,
    cfg: &PartitionConfig,
    stop: &S,
) -> Result<Partition> {
    let (n, m) = (graph.n_inputs(), graph.n_outputs());
    cfg.validate(n, m)?;
    let mut search = Search::new(graph, cfg, stop);
    search.dfs(0);
    let labels = &search.best_labels;
    let mut p = Partition::from_labels(
        graph,
        cfg.k,
        labels[..n].to_vec(),
        labels[n..].to_vec(),
        cfg.gamma,
        SolverKind::Exact,
    )?;
    p.optimal = !search.stopped;
    p.nodes_explored = search.nodes;
    Ok(p)
}

struct Search<'a, S: ?Sized> {
    theta: &'a Matrix,
    hat: &'a Matrix,
    n: usize,
    k: usize,
    gamma: f64,
    tol: f64,
    bounds: [(usize, usize); 2],
    order: Vec<usize>,
    labels: Vec<usize>,
    counts: [Vec<usize>; 2],
    remaining: [usize; 2],
    /// `partial[c * k + l]`: weight from node `c` to decided opposite nodes labelled `l`.
    partial: Vec<f64>,
    /// Weight from node `c` to all decided opposite nodes.
    decided: Vec<f64>,
    undo: Vec<f64>,
    det: f64,
    used: usize,
    cut_buf: Vec<f64>,
    best_cost: f64,
    best_canon: Vec<usize>,
    best_labels: Vec<usize>,
    nodes: u64,
    stopped: bool,
    stop: &'a S,
}

impl<'a, S: StopCondition + ?Sized> Search<'a, S> {
    fn new(graph: &'a DependencyGraph, cfg: &PartitionConfig, stop: &'a S) -> Self {
        let (n, m) = (graph.n_inputs(), graph.n_outputs());
        let total = n + m;
        let theta = &graph.theta;
        let mass: Vec<f64> = (0..total)
            .map(|c| {
                if c < n {
                    theta.row(c).iter().sum()
                } else {
                    (0..n).map(|i| theta.get(i, c - n)).sum()
                }
            })
            .collect();
        let mut order: Vec<usize> = (0..total).collect();
        order.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]).then(a.cmp(&b)));
        Search {
            theta,
            hat: &graph.theta_hat,
            n,
            k: cfg.k,
            gamma: cfg.gamma,
            tol: cfg.abs_gap_tol,
            bounds: [cfg.bounds(0), cfg.bounds(1)],
            order,
            labels: vec![UNSET; total],
            counts: [vec![0; cfg.k], vec![0; cfg.k]],
            remaining: [n, m],
            partial: vec![0.0; total * cfg.k],
            decided: vec![0.0; total],
            undo: Vec::new(),
            det: 0.0,
            used: 0,
            cut_buf: Vec::new(),
            best_cost: f64::INFINITY,
            best_canon: Vec::new(),
            best_labels: Vec::new(),
            nodes: 0,
            stopped: false,
            stop,
        }
    }

    fn side(&self, c: usize) -> usize {
        usize::from(c >= self.n)
    }

    fn opposite(&self, c: usize) -> core::ops::Range<usize> {
        if c < self.n { self.n..self.labels.len() } else { 0..self.n }
    }

    fn weight(&self, a: usize, b: usize) -> f64 {
        if a < self.n { self.theta.get(a, b - self.n) } else { self.theta.get(b, a - self.n) }
    }

    fn has_best(&self) -> bool {
        !self.best_labels.is_empty()
    }

    /// Can the side still meet every lower bound after one more node goes to `label`?
    fn feasible_after(&self, side: usize, label: usize) -> bool {
        let (lo, hi) = self.bounds[side];
        if self.counts[side][label] >= hi {
            return false;
        }
        let deficit: usize = self.counts[side]
            .iter()
            .enumerate()
            .map(|(l, &c)| lo.saturating_sub(c + usize::from(l == label)))
            .sum();
        deficit < self.remaining[side]
    }

    fn lower_bound(&mut self) -> f64 {
        self.cut_buf.clear();
        if self.gamma > 0.0 {
            for i in 0..self.n {
                let li = self.labels[i];
                if li == UNSET {
                    continue;
                }
                for j in 0..self.hat.cols() {
                    let lj = self.labels[self.n + j];
                    let h = self.hat.get(i, j);
                    if lj != UNSET && lj != li && h > 0.0 {
                        self.cut_buf.push(h);
                    }
                }
            }
            self.cut_buf.sort_unstable_by(|a, b| b.total_cmp(a));
        }
        let robust = if self.gamma > 0.0 { budgeted_sum(&self.cut_buf, self.gamma) } else { 0.0 };
        let mut look = 0.0;
        for c in 0..self.labels.len() {
            if self.labels[c] != UNSET {
                continue;
            }
            let side = self.side(c);
            let hi = self.bounds[side].1;
            let mut best = f64::INFINITY;
            for l in 0..self.k {
                if self.counts[side][l] < hi {
                    best = best.min((self.decided[c] - self.partial[c * self.k + l]).max(0.0));
                }
            }
            if best.is_finite() {
                look += best;
            }
        }
        self.det + robust + look
    }

    fn prune(&self, bound: f64) -> bool {
        if self.tol > 0.0 {
            bound >= self.best_cost - self.tol
        } else {
            bound > self.best_cost + 1e-12 * (1.0 + self.best_cost.abs())
        }
    }

    fn assign(&mut self, c: usize, label: usize) {
        for d in self.opposite(c) {
            let w = self.weight(c, d);
            let ld = self.labels[d];
            if ld != UNSET && ld != label {
                self.det += w;
            }
            let slot = d * self.k + label;
            self.undo.push(self.partial[slot]);
            self.undo.push(self.decided[d]);
            self.partial[slot] += w;
            self.decided[d] += w;
        }
        let side = self.side(c);
        self.labels[c] = label;
        self.counts[side][label] += 1;
        self.remaining[side] -= 1;
    }

    fn unassign(&mut self, c: usize, label: usize) {
        for d in self.opposite(c).rev() {
            self.decided[d] = self.undo.pop().unwrap_or_default();
            self.partial[d * self.k + label] = self.undo.pop().unwrap_or_default();
        }
        let side = self.side(c);
        self.labels[c] = UNSET;
        self.counts[side][label] -= 1;
        self.remaining[side] += 1;
    }

    fn leaf(&mut self) {
        let (u, v) = self.labels.split_at(self.n);
        let cost = robust_cut_cost(&cross_matrix(u, v), self.theta, self.hat, self.gamma);
        let canon = canonical_labels(u, v);
        let better = !self.has_best()
            || cost < self.best_cost
            || (cost == self.best_cost && canon < self.best_canon);
        if better {
            self.best_cost = cost;
            self.best_canon = canon;
            self.best_labels = self.labels.clone();
        }
    }

    fn dfs(&mut self, depth: usize) {
        if self.stopped {
            return;
        }
        self.nodes += 1;
        if self.has_best() && self.stop.should_stop() {
            self.stopped = true;
            return;
        }
        if depth == self.order.len() {
            self.leaf();
            return;
        }
        if self.has_best() {
            let b = self.lower_bound();
            if self.prune(b) {
                return;
            }
        }
        let c = self.order[depth];
        let side = self.side(c);
        let mut children: Vec<(f64, usize)> = (0..(self.used + 1).min(self.k))
            .filter(|&l| self.feasible_after(side, l))
            .map(|l| ((self.decided[c] - self.partial[c * self.k + l]).max(0.0), l))
            .collect();
        children.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (_, l) in children {
            let (det, used) = (self.det, self.used);
            self.assign(c, l);
            self.used = self.used.max(l + 1);
            self.dfs(depth + 1);
            self.unassign(c, l);
            self.det = det;
            self.used = used;
            if self.stopped {
                return;
            }
        }
    }
}
