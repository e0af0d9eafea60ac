//! Explanations for structured black-box predictors.
//!
//! Given an input/output pair `(x, y)` of token sequences and oracle access to a
//! model `F`, the pipeline perturbs `x`, queries `F` on the perturbations, fits one
//! Bayesian logistic regression per output token to estimate how strongly each
//! input token drives it, and partitions the resulting interval-weighted bipartite
//! graph into ranked explanation chunks with a budgeted robust cut objective.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. The `std` feature adds wall-clock time limits for the exact solver and
//! threaded per-token fitting.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod blackbox;
pub mod causal;
mod error;
pub mod eval;
pub mod explain;
mod linalg;
mod math;
pub mod partition;
pub mod perturb;
pub mod tokens;

pub use blackbox::{BiasedWrapper, BlackBox, G2PDictionary, Identity, Lexicon, Permuter, Response};
pub use causal::{
    build_dependency_graph, encode_features, encode_labels, fit_token_model, BinaryMatrix,
    CausalConfig, DependencyGraph, FitOptions, Matrix, PosteriorSummary, RegressionPrior,
};
pub use error::{Error, Result};
pub use eval::{alignment_error_rate, edge_f1, GoldAlignment};
pub use explain::{
    collect_samples, explain, explain_samples, importance_scores, predict_edges, stage_seed,
    EdgeRule, ExplainConfig, Explanation, ExplanationChunk,
};
pub use partition::{
    cocluster_spectral, partition_exact, partition_local_search, robust_cut_cost, robust_term,
    robust_term_dual, DualCertificate, Partition, PartitionConfig, SolverKind,
};
pub use perturb::{
    levenshtein, sample_edit_neighborhood, sample_token_perturbations, EditNeighborhood,
    Perturber, PerturberConfig, TokenDropout,
};
pub use tokens::{tokenize, ExamplePair, PerturbationSet, PerturbedPair, Scheme, Side, Token, TokenSequence};
