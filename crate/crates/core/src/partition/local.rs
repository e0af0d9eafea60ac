//! Multi-start first-improvement local search.
//!
//! Moves are single-node relabelling and swapping the labels of two nodes on
//! the same side. Both keep the cardinality bounds when applied to a feasible
//! assignment under the checks below. Candidates whose optimistic cost
//! (deterministic change, minus every half-width that stops being cut) cannot
//! beat the current cost are skipped without evaluating the robust term.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::causal::DependencyGraph;
use crate::error::Result;

use super::robust::budgeted_sum;
use super::{canonical_labels, Partition, PartitionConfig, SolverKind};

/// Best local optimum over `restarts` seeded random feasible starts.
pub fn partition_local_search(
    graph: &DependencyGraph,
    cfg: &PartitionConfig,
    restarts: usize,
    seed: u64,
) -> Result<Partition> {
    let (n, m) = (graph.n_inputs(), graph.n_outputs());
    cfg.validate(n, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = State::new(graph, cfg);
    let mut best: Option<(f64, Vec<usize>, Vec<usize>, Vec<usize>)> = None;
    for _ in 0..restarts.max(1) {
        state.u = random_start(n, cfg.k, cfg.bounds(0), &mut rng);
        state.v = random_start(m, cfg.k, cfg.bounds(1), &mut rng);
        state.descend();
        let cost = state.cost();
        let canon = canonical_labels(&state.u, &state.v);
        let eps = 1e-12 * (1.0 + cost.abs());
        let replace = match &best {
            None => true,
            Some((c, bc, _, _)) => cost < c - eps || (cost <= c + eps && canon < *bc),
        };
        if replace {
            best = Some((cost, canon, state.u.clone(), state.v.clone()));
        }
    }
    let (_, _, u, v) = best.unwrap_or_default();
    Partition::from_labels(graph, cfg.k, u, v, cfg.gamma, SolverKind::LocalSearch)
}

/// Every label first receives its minimum count, the rest go to uniformly
/// drawn labels that still have room.
fn random_start(n: usize, k: usize, (lo, hi): (usize, usize), rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(rng);
    let mut labels = vec![0; n];
    let mut counts = vec![0; k];
    for (slot, &node) in nodes.iter().enumerate() {
        let label = if slot < k * lo {
            slot % k
        } else {
            let open: Vec<usize> = (0..k).filter(|&l| counts[l] < hi).collect();
            open[rng.gen_range(0..open.len())]
        };
        labels[node] = label;
        counts[label] += 1;
    }
    labels
}

struct State<'a> {
    g: &'a DependencyGraph,
    k: usize,
    gamma: f64,
    bounds: [(usize, usize); 2],
    u: Vec<usize>,
    v: Vec<usize>,
    buf: Vec<f64>,
}

impl<'a> State<'a> {
    fn new(g: &'a DependencyGraph, cfg: &PartitionConfig) -> Self {
        State {
            g,
            k: cfg.k,
            gamma: cfg.gamma,
            bounds: [cfg.bounds(0), cfg.bounds(1)],
            u: Vec::new(),
            v: Vec::new(),
            buf: Vec::new(),
        }
    }

    fn det(&self) -> f64 {
        let mut s = 0.0;
        for (i, &a) in self.u.iter().enumerate() {
            for (j, &b) in self.v.iter().enumerate() {
                if a != b {
                    s += self.g.theta.get(i, j);
                }
            }
        }
        s
    }

    fn robust(&mut self) -> f64 {
        if self.gamma <= 0.0 {
            return 0.0;
        }
        self.buf.clear();
        for (i, &a) in self.u.iter().enumerate() {
            for (j, &b) in self.v.iter().enumerate() {
                let h = self.g.theta_hat.get(i, j);
                if a != b && h > 0.0 {
                    self.buf.push(h);
                }
            }
        }
        self.buf.sort_unstable_by(|a, b| b.total_cmp(a));
        budgeted_sum(&self.buf, self.gamma)
    }

    fn cost(&mut self) -> f64 {
        self.det() + self.robust()
    }

    fn labels(&mut self, side: usize) -> &mut Vec<usize> {
        if side == 0 { &mut self.u } else { &mut self.v }
    }

    /// `(θ, θ̂)` between node `a` on `side` and node `b` on the other side.
    fn edge(&self, side: usize, a: usize, b: usize) -> (f64, f64) {
        let (i, j) = if side == 0 { (a, b) } else { (b, a) };
        (self.g.theta.get(i, j), self.g.theta_hat.get(i, j))
    }

    /// Change in cut weight and the cut half-width that would be removed
    /// when node `a` on `side` moves from `from` to `to`.
    fn move_delta(&self, side: usize, a: usize, from: usize, to: usize) -> (f64, f64) {
        let other = if side == 0 { &self.v } else { &self.u };
        let mut d = 0.0;
        let mut removed = 0.0;
        for (b, &lb) in other.iter().enumerate() {
            let (w, h) = self.edge(side, a, b);
            if lb == to {
                d -= w;
                removed += h;
            } else if lb == from {
                d += w;
            }
        }
        (d, removed)
    }

    fn count(&self, side: usize, label: usize) -> usize {
        let labels = if side == 0 { &self.u } else { &self.v };
        labels.iter().filter(|&&l| l == label).count()
    }

    /// Applies the first strictly improving move found; returns the new cost.
    fn improve(&mut self, det: f64, robust: f64) -> Option<f64> {
        let cur = det + robust;
        for side in 0..2 {
            let (lo, hi) = self.bounds[side];
            let len = if side == 0 { self.u.len() } else { self.v.len() };
            for a in 0..len {
                let from = self.labels(side)[a];
                if self.count(side, from) <= lo {
                    continue;
                }
                for to in 0..self.k {
                    if to == from || self.count(side, to) >= hi {
                        continue;
                    }
                    let (d, removed) = self.move_delta(side, a, from, to);
                    if det + d + robust - removed >= cur {
                        continue;
                    }
                    self.labels(side)[a] = to;
                    let c = self.cost();
                    if c < cur {
                        return Some(c);
                    }
                    self.labels(side)[a] = from;
                }
            }
        }
        for side in 0..2 {
            let len = if side == 0 { self.u.len() } else { self.v.len() };
            for a in 0..len {
                for b in a + 1..len {
                    let (la, lb) = (self.labels(side)[a], self.labels(side)[b]);
                    if la == lb {
                        continue;
                    }
                    let (da, ra) = self.move_delta(side, a, la, lb);
                    let (db, rb) = self.move_delta(side, b, lb, la);
                    if det + da + db + robust - ra - rb >= cur {
                        continue;
                    }
                    self.labels(side)[a] = lb;
                    self.labels(side)[b] = la;
                    let c = self.cost();
                    if c < cur {
                        return Some(c);
                    }
                    self.labels(side)[a] = la;
                    self.labels(side)[b] = lb;
                }
            }
        }
        None
    }

    fn descend(&mut self) {
        loop {
            let det = self.det();
            let robust = self.robust();
            if self.improve(det, robust).is_none() {
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::Matrix;
    use crate::tokens::{Side, TokenSequence};

    fn graph(theta: &[Vec<f64>]) -> DependencyGraph {
        let seq = |n: usize, side| {
            TokenSequence::from_surfaces((0..n).map(|i| alloc::format!("t{i}")).collect::<Vec<_>>(), side).unwrap()
        };
        let t = Matrix::from_rows(theta).unwrap();
        DependencyGraph::from_weights(seq(theta.len(), Side::Input), seq(theta[0].len(), Side::Output), t.clone(), t.scaled(0.1))
            .unwrap()
    }

    #[test]
    fn starts_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let l = random_start(7, 3, (2, 3), &mut rng);
            for k in 0..3 {
                let c = l.iter().filter(|&&x| x == k).count();
                assert!((2..=3).contains(&c));
            }
        }
    }

    #[test]
    fn finds_block_structure() {
        let theta = [vec![1.0, 1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 1.0], vec![0.0, 0.0, 1.0, 1.0]];
        let g = graph(&theta);
        let cfg = PartitionConfig::with_k(4, 4, 2);
        let p = partition_local_search(&g, &cfg, 5, 0).unwrap();
        assert_eq!(p.cost, 0.0);
        assert_eq!(p.canonical(), vec![0, 0, 1, 1, 0, 0, 1, 1]);
        p.check(&g, Some(&cfg)).unwrap();
        assert_eq!(p, partition_local_search(&g, &cfg, 5, 0).unwrap());
    }
}
