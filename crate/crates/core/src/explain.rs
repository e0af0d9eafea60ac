//! The end-to-end pipeline and the chunk ranking.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::blackbox::{BlackBox, Response};
use crate::causal::{CausalConfig, DependencyGraph};
use crate::error::{Error, Result};
use crate::partition::{partition_exact, partition_local_search, Partition, PartitionConfig};
use crate::perturb::{Perturber, PerturberConfig};
use crate::tokens::{ExamplePair, PerturbationSet, PerturbedPair, TokenSequence};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainConfig {
    /// `n_samples` counts the original pair, so `n_samples - 1` perturbations
    /// are drawn.
    pub perturb: PerturberConfig,
    pub causal: CausalConfig,
    /// `None` picks [`PartitionConfig::defaults_for`] the pair's lengths.
    pub partition: Option<PartitionConfig>,
    /// Total node count up to which the exact solver is used.
    pub exact_threshold: usize,
    pub restarts: usize,
    pub workers: usize,
    /// Queries per black-box call; 0 sends everything at once.
    pub batch_size: usize,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            perturb: PerturberConfig::default(),
            causal: CausalConfig::default(),
            partition: None,
            exact_threshold: 16,
            restarts: 20,
            workers: 1,
            batch_size: 0,
        }
    }
}

/// One chunk `(V_x^k, V_y^k)` with its importance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationChunk {
    pub x_nodes: Vec<usize>,
    pub y_nodes: Vec<usize>,
    pub x_tokens: Vec<String>,
    pub y_tokens: Vec<String>,
    /// Negated weight of the edges with exactly one endpoint in the chunk.
    pub importance: f64,
    /// `(i, j, θ_ij)` for edges inside the chunk with positive weight.
    pub internal_edges: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub chunks: Vec<ExplanationChunk>,
    pub graph: DependencyGraph,
    pub partition: Partition,
    pub provenance: BTreeMap<String, String>,
    /// Perturbations dropped because their query failed.
    pub dropped: usize,
}

/// Importance of every label `0..partition.k`, in label order.
pub fn importance_scores(partition: &Partition, graph: &DependencyGraph) -> Vec<f64> {
    let mut scores = alloc::vec![0.0; partition.k];
    for (i, &a) in partition.u_assign.iter().enumerate() {
        for (j, &b) in partition.v_assign.iter().enumerate() {
            if a != b {
                let w = graph.theta.get(i, j);
                scores[a] -= w;
                scores[b] -= w;
            }
        }
    }
    scores
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeRule {
    ArgmaxPerOutput,
    Threshold(f64),
}

/// Alignment edges read off `θ`.
pub fn predict_edges(graph: &DependencyGraph, rule: EdgeRule) -> BTreeSet<(usize, usize)> {
    let (n, m) = (graph.n_inputs(), graph.n_outputs());
    let theta = &graph.theta;
    match rule {
        EdgeRule::ArgmaxPerOutput => (0..m)
            .filter(|_| n > 0)
            .map(|j| {
                let best = (1..n).fold(0, |b, i| if theta.get(i, j) > theta.get(b, j) { i } else { b });
                (best, j)
            })
            .collect(),
        EdgeRule::Threshold(t) => {
            (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).filter(|&(i, j)| theta.get(i, j) >= t).collect()
        }
    }
}

/// Non-empty chunks, most relevant (least negative importance) first; ties
/// go to the chunk holding the smallest input index, and chunks without
/// inputs come after those with inputs at equal importance.
pub fn rank_chunks(partition: &Partition, graph: &DependencyGraph) -> Vec<ExplanationChunk> {
    let scores = importance_scores(partition, graph);
    let mut chunks: Vec<ExplanationChunk> = partition
        .groups()
        .into_iter()
        .zip(scores)
        .filter(|((xs, ys), _)| !xs.is_empty() || !ys.is_empty())
        .map(|((xs, ys), importance)| {
            let mut internal = Vec::new();
            for &i in &xs {
                for &j in &ys {
                    let w = graph.theta.get(i, j);
                    if w > 0.0 {
                        internal.push((i, j, w));
                    }
                }
            }
            ExplanationChunk {
                x_tokens: xs.iter().map(|&i| graph.x_nodes.tokens()[i].surface.clone()).collect(),
                y_tokens: ys.iter().map(|&j| graph.y_nodes.tokens()[j].surface.clone()).collect(),
                x_nodes: xs,
                y_nodes: ys,
                importance,
                internal_edges: internal,
            }
        })
        .collect();
    let key = |c: &ExplanationChunk| match c.x_nodes.first() {
        Some(&i) => (0, i),
        None => (1, c.y_nodes[0]),
    };
    chunks.sort_by(|a, b| b.importance.total_cmp(&a.importance).then_with(|| key(a).cmp(&key(b))));
    chunks
}

/// Derives an independent seed for a pipeline stage (SplitMix64 finalizer).
pub fn stage_seed(seed: u64, stage: u64) -> u64 {
    let mut z = seed ^ stage.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub const STAGE_PARTITION: u64 = 2;

/// Queries `inputs` in batches. A failing batch is retried one input at a
/// time and the inputs that still fail are dropped.
fn query_all<B: BlackBox + ?Sized>(
    blackbox: &B,
    inputs: Vec<TokenSequence>,
    batch_size: usize,
) -> (Vec<PerturbedPair>, usize, Option<Error>) {
    let size = if batch_size == 0 { inputs.len().max(1) } else { batch_size };
    let mut out = Vec::with_capacity(inputs.len());
    let mut dropped = 0;
    let mut last_err = None;
    let ask = |batch: &[TokenSequence]| -> Result<Vec<Response>> {
        let r = blackbox.query_batch(batch)?;
        if r.len() != batch.len() {
            return Err(Error::Protocol(alloc::format!("expected {} responses, got {}", batch.len(), r.len())));
        }
        Ok(r)
    };
    for batch in inputs.chunks(size) {
        match ask(batch) {
            Ok(resp) => out.extend(batch.iter().cloned().zip(resp).map(|(x, r)| PerturbedPair { x, y: r.into_option() })),
            Err(_) if batch.len() > 1 => {
                for x in batch {
                    match ask(core::slice::from_ref(x)) {
                        Ok(mut r) => out.push(PerturbedPair { x: x.clone(), y: r.pop().and_then(Response::into_option) }),
                        Err(e) => {
                            dropped += 1;
                            last_err = Some(e);
                        }
                    }
                }
            }
            Err(e) => {
                dropped += 1;
                last_err = Some(e);
            }
        }
    }
    (out, dropped, last_err)
}

/// Perturbs `pair.x` and queries the black box. Returns the sample set and
/// the number of dropped queries; fails when fewer than half succeed.
pub fn collect_samples<B: BlackBox + ?Sized, P: Perturber + ?Sized>(
    pair: &ExamplePair,
    blackbox: &B,
    perturber: &mut P,
    cfg: &ExplainConfig,
) -> Result<(PerturbationSet, usize)> {
    cfg.perturb.validate()?;
    let draws = cfg.perturb.n_samples - 1;
    let inputs = if draws > 0 {
        perturber.perturb(&pair.x, &PerturberConfig { n_samples: draws, ..cfg.perturb.clone() })?
    } else {
        Vec::new()
    };
    let requested = inputs.len();
    let (samples, dropped, err) = query_all(blackbox, inputs, cfg.batch_size);
    if requested > 0 && samples.len() * 2 < requested {
        let reason = err.map(|e| e.to_string()).unwrap_or_default();
        return Err(Error::black_box(
            None,
            alloc::format!("only {} of {requested} queries succeeded: {reason}", samples.len()),
        ));
    }
    Ok((PerturbationSet::new(pair.clone(), samples), dropped))
}

/// Perturbs, queries, fits the dependency graph and partitions it.
pub fn explain<B: BlackBox + ?Sized, P: Perturber + ?Sized>(
    pair: &ExamplePair,
    blackbox: &B,
    perturber: &mut P,
    cfg: &ExplainConfig,
) -> Result<Explanation> {
    let (pset, dropped) = collect_samples(pair, blackbox, perturber, cfg)?;
    explain_samples(&pset, cfg, dropped)
}

/// The pipeline after querying: fit, partition, rank.
pub fn explain_samples(pset: &PerturbationSet, cfg: &ExplainConfig, dropped: usize) -> Result<Explanation> {
    #[cfg(feature = "std")]
    let graph = crate::causal::build_dependency_graph_parallel(pset, &cfg.causal, cfg.workers)?;
    #[cfg(not(feature = "std"))]
    let graph = crate::causal::build_dependency_graph(pset, &cfg.causal)?;
    let (n, m) = (graph.n_inputs(), graph.n_outputs());
    let pcfg = cfg.partition.clone().unwrap_or_else(|| PartitionConfig::defaults_for(n, m));
    let seed = stage_seed(cfg.perturb.seed, STAGE_PARTITION);
    let partition = if n + m <= cfg.exact_threshold {
        partition_exact(&graph, &pcfg)?
    } else {
        partition_local_search(&graph, &pcfg, cfg.restarts, seed)?
    };
    let chunks = rank_chunks(&partition, &graph);
    let mut provenance = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        provenance.insert(k.to_string(), v);
    };
    put("seed", cfg.perturb.seed.to_string());
    put("partition_seed", seed.to_string());
    put("n_samples", cfg.perturb.n_samples.to_string());
    put("effective_rows", pset.effective_len().to_string());
    put("dropped", dropped.to_string());
    put("prior_alpha", cfg.causal.prior.alpha.to_string());
    put("prior_beta", cfg.causal.prior.beta.to_string());
    put("interval_scale", cfg.causal.interval_scale.to_string());
    put("k", pcfg.k.to_string());
    put("gamma", pcfg.gamma.to_string());
    put("bounds_u", alloc::format!("{}..{}", pcfg.c_u_min, pcfg.c_u_max));
    put("bounds_v", alloc::format!("{}..{}", pcfg.c_v_min, pcfg.c_v_max));
    put("abs_gap_tol", pcfg.abs_gap_tol.to_string());
    put("exact_threshold", cfg.exact_threshold.to_string());
    put("restarts", cfg.restarts.to_string());
    Ok(Explanation { chunks, graph, partition, provenance, dropped })
}
