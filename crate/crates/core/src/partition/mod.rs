//! Robust K-way partitioning of the bipartite dependency graph.
//!
//! A partition assigns every input node and every output node one of `K`
//! subset labels; the pair `(i, j)` is *cut* (`y_ij = 1`) when the labels
//! differ. The cost of a partition is the cut weight `Σ θ_ij y_ij` plus the
//! worst-case extra weight when up to `Γ` cut edges move to the upper end of
//! their interval `θ_ij + θ̂_ij` (see [`robust_term`]).

mod exact;
mod local;
mod robust;
pub mod spectral;

use alloc::string::ToString;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::causal::{BinaryMatrix, DependencyGraph};
use crate::error::{Error, Result};
use crate::math::ceil_div;

pub use exact::{partition_exact, partition_exact_with, NoLimit, StopCondition};
#[cfg(feature = "std")]
pub use exact::TimeLimit;
pub use local::partition_local_search;
pub use robust::{robust_cut_cost, robust_term, robust_term_dual, DualCertificate, DualEntry};
pub use spectral::cocluster_spectral;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionConfig {
    pub k: usize,
    pub c_u_min: usize,
    pub c_u_max: usize,
    pub c_v_min: usize,
    pub c_v_max: usize,
    /// Uncertainty budget `Γ`.
    pub gamma: f64,
    pub abs_gap_tol: f64,
    pub time_limit_secs: f64,
}

impl PartitionConfig {
    /// Defaults for a graph with `nx` inputs and `ny` outputs:
    /// `K = max(2, ⌈min(nx, ny)/3⌉)` clamped to `min(nx, ny)`, lower bound 1,
    /// upper bound `⌈side/K⌉ + 1`, `Γ = 1`.
    pub fn defaults_for(nx: usize, ny: usize) -> Self {
        let smaller = nx.min(ny).max(1);
        let k = ceil_div(smaller, 3).max(2).min(smaller);
        Self::with_k(nx, ny, k)
    }

    /// Default bounds for an explicit `k`.
    pub fn with_k(nx: usize, ny: usize, k: usize) -> Self {
        let k = k.max(1);
        PartitionConfig {
            k,
            c_u_min: 1,
            c_u_max: ceil_div(nx, k) + 1,
            c_v_min: 1,
            c_v_max: ceil_div(ny, k) + 1,
            gamma: 1.0,
            abs_gap_tol: 1e-4,
            time_limit_secs: 120.0,
        }
    }

    pub fn validate(&self, nx: usize, ny: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidConfig("gamma must be a finite non-negative number".into()));
        }
        if !(self.abs_gap_tol >= 0.0) || !(self.time_limit_secs >= 0.0) {
            return Err(Error::InvalidConfig("gap tolerance and time limit must be non-negative".into()));
        }
        for (side, n, lo, hi) in [("input", nx, self.c_u_min, self.c_u_max), ("output", ny, self.c_v_min, self.c_v_max)] {
            if lo < 1 || lo > hi {
                return Err(Error::InfeasibleBounds(alloc::format!(
                    "{side} bounds [{lo}, {hi}] must satisfy 1 <= min <= max"
                )));
            }
            if self.k * lo > n || self.k * hi < n {
                return Err(Error::InfeasibleBounds(alloc::format!(
                    "{side} side has {n} nodes, cannot split into {} subsets of size [{lo}, {hi}]",
                    self.k
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn bounds(&self, side: usize) -> (usize, usize) {
        if side == 0 { (self.c_u_min, self.c_u_max) } else { (self.c_v_min, self.c_v_max) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Exact,
    LocalSearch,
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PartitionRepr", into = "PartitionRepr")]
pub struct Partition {
    pub k: usize,
    /// Subset label of each input node.
    pub u_assign: Vec<usize>,
    /// Subset label of each output node.
    pub v_assign: Vec<usize>,
    /// `cross[i][j] = 1` iff input `i` and output `j` carry different labels.
    pub cross: BinaryMatrix,
    pub cost: f64,
    pub gamma: f64,
    pub certificate: Option<DualCertificate>,
    pub solver: SolverKind,
    /// True when the solver proved the cost optimal within its gap tolerance.
    pub optimal: bool,
    pub nodes_explored: u64,
}

#[derive(Serialize, Deserialize)]
struct PartitionRepr {
    k: usize,
    u_assign: Vec<usize>,
    v_assign: Vec<usize>,
    cost: f64,
    gamma: f64,
    solver: SolverKind,
    optimal: bool,
    #[serde(default)]
    nodes_explored: u64,
    #[serde(default)]
    certificate: Option<DualCertificate>,
}

impl TryFrom<PartitionRepr> for Partition {
    type Error = Error;
    fn try_from(r: PartitionRepr) -> Result<Self> {
        if r.u_assign.iter().chain(&r.v_assign).any(|&l| l >= r.k) {
            return Err(Error::InvalidConfig("label out of range".into()));
        }
        Ok(Partition {
            cross: cross_matrix(&r.u_assign, &r.v_assign),
            k: r.k,
            u_assign: r.u_assign,
            v_assign: r.v_assign,
            cost: r.cost,
            gamma: r.gamma,
            certificate: r.certificate,
            solver: r.solver,
            optimal: r.optimal,
            nodes_explored: r.nodes_explored,
        })
    }
}

impl From<Partition> for PartitionRepr {
    fn from(p: Partition) -> Self {
        PartitionRepr {
            k: p.k,
            u_assign: p.u_assign,
            v_assign: p.v_assign,
            cost: p.cost,
            gamma: p.gamma,
            solver: p.solver,
            optimal: p.optimal,
            nodes_explored: p.nodes_explored,
            certificate: p.certificate,
        }
    }
}

/// `y_ij` from the two label vectors.
pub fn cross_matrix(u: &[usize], v: &[usize]) -> BinaryMatrix {
    let mut cross = BinaryMatrix::zeros(u.len(), v.len());
    for (i, &a) in u.iter().enumerate() {
        for (j, &b) in v.iter().enumerate() {
            cross.set(i, j, a != b);
        }
    }
    cross
}

/// Relabels `[u.., v..]` so that labels appear in increasing order of first
/// occurrence. Two assignments describe the same partition iff their
/// canonical forms are equal.
pub fn canonical_labels(u: &[usize], v: &[usize]) -> Vec<usize> {
    let mut map: Vec<Option<usize>> = Vec::new();
    let mut next = 0;
    u.iter()
        .chain(v)
        .map(|&l| {
            if l >= map.len() {
                map.resize(l + 1, None);
            }
            *map[l].get_or_insert_with(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

impl Partition {
    /// Builds a partition from label vectors, computing the cut indicators,
    /// robust cost and dual certificate against `graph`.
    pub fn from_labels(
        graph: &DependencyGraph,
        k: usize,
        u_assign: Vec<usize>,
        v_assign: Vec<usize>,
        gamma: f64,
        solver: SolverKind,
    ) -> Result<Self> {
        if u_assign.len() != graph.n_inputs() || v_assign.len() != graph.n_outputs() {
            return Err(Error::ShapeMismatch("assignment length does not match the graph".into()));
        }
        if u_assign.iter().chain(&v_assign).any(|&l| l >= k) {
            return Err(Error::InvalidConfig("label out of range".into()));
        }
        let cross = cross_matrix(&u_assign, &v_assign);
        let cost = robust_cut_cost(&cross, &graph.theta, &graph.theta_hat, gamma);
        let (_, cert) = robust_term_dual(&cross, &graph.theta_hat, gamma);
        Ok(Partition {
            k,
            u_assign,
            v_assign,
            cross,
            cost,
            gamma,
            certificate: Some(cert),
            solver,
            optimal: false,
            nodes_explored: 0,
        })
    }

    pub fn canonical(&self) -> Vec<usize> {
        canonical_labels(&self.u_assign, &self.v_assign)
    }

    /// Checks every assignment constraint directly: one label per node,
    /// cardinalities within the bounds of `cfg` (when given), `y_ij`
    /// consistent with the labels, and `cost` matching the recomputed
    /// objective within `1e-9` relative.
    pub fn check(&self, graph: &DependencyGraph, cfg: Option<&PartitionConfig>) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.u_assign.len() != graph.n_inputs() || self.v_assign.len() != graph.n_outputs() {
            return fail("assignment length does not match the graph");
        }
        if self.u_assign.iter().chain(&self.v_assign).any(|&l| l >= self.k) {
            return fail("label out of range");
        }
        if let Some(cfg) = cfg {
            for (side, labels) in [(0, &self.u_assign), (1, &self.v_assign)] {
                let (lo, hi) = cfg.bounds(side);
                for k in 0..self.k {
                    let c = labels.iter().filter(|&&l| l == k).count();
                    if c < lo || c > hi {
                        return fail("subset cardinality out of bounds");
                    }
                }
            }
        }
        for (i, &a) in self.u_assign.iter().enumerate() {
            for (j, &b) in self.v_assign.iter().enumerate() {
                if (self.cross.get(i, j) == 1) != (a != b) {
                    return fail("cut indicator inconsistent with labels");
                }
            }
        }
        let expect = robust_cut_cost(&self.cross, &graph.theta, &graph.theta_hat, self.gamma);
        if (expect - self.cost).abs() > 1e-9 * (1.0 + expect.abs()) {
            return fail("stored cost differs from the recomputed objective");
        }
        Ok(())
    }

    /// Node lists of each subset, in label order: `(inputs, outputs)`.
    pub fn groups(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        (0..self.k)
            .map(|k| {
                (
                    (0..self.u_assign.len()).filter(|&i| self.u_assign[i] == k).collect(),
                    (0..self.v_assign.len()).filter(|&j| self.v_assign[j] == k).collect(),
                )
            })
            .collect()
    }
}
