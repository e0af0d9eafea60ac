//! Dependency estimation between input and output tokens.
//!
//! For every output token `y_j` a logistic model
//! `P(y_j ∈ ỹ | x̃) = σ(θ_jᵀ φ(x̃))` is fitted over the perturbation samples,
//! where `φ(x̃) ∈ {0,1}^{|x|}` flags which original input tokens survive in
//! `x̃`. The prior is `N(α·1, β⁻¹ I)`; the posterior is approximated by a
//! Gaussian at the MAP (Laplace) whose covariance is the inverse Hessian of
//! the negative log posterior.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::math::{sigmoid, softplus, sqrt};
use crate::tokens::{PerturbationSet, Side, TokenSequence};

/// Dense row-major 0/1 matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

/// One row per effective sample, one column per input token occurrence.
pub type FeatureMatrix = BinaryMatrix;

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BinaryMatrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::ShapeMismatch("ragged binary matrix".into()));
            }
            if r.iter().any(|&v| v > 1) {
                return Err(Error::InvalidConfig("binary matrix entries must be 0 or 1".into()));
            }
            data.extend_from_slice(r);
        }
        Ok(BinaryMatrix { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.data[r * self.cols + c] = u8::from(v);
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<u8> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }
}

/// Dense row-major real matrix. Serialized as a list of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(&rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        (0..m.rows).map(|r| m.row(r).to_vec()).collect()
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("ragged matrix".into()));
        }
        Ok(Matrix { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * factor).collect() }
    }
}

/// Presence of each original input token in `x_tilde`: entry `i` is 1 iff
/// `x_tilde` holds at least `occurrence_rank(x_i)` copies of `x_i`'s surface.
pub fn encode_features(x: &TokenSequence, x_tilde: &TokenSequence) -> Vec<u8> {
    presence(x, Some(x_tilde))
}

fn presence(original: &TokenSequence, other: Option<&TokenSequence>) -> Vec<u8> {
    let Some(other) = other else { return vec![0; original.len()] };
    let counts = other.surface_counts();
    original
        .tokens()
        .iter()
        .map(|t| u8::from(counts.get(t.surface.as_str()).copied().unwrap_or(0) >= t.occurrence_rank))
        .collect()
}

/// Presence of each original output token in each perturbed output; an
/// absent output yields a zero row.
pub fn encode_labels<'a>(
    y: &TokenSequence,
    y_tilde: impl IntoIterator<Item = Option<&'a TokenSequence>>,
) -> BinaryMatrix {
    let rows: Vec<Vec<u8>> = y_tilde.into_iter().map(|o| presence(y, o)).collect();
    BinaryMatrix::from_rows(&rows).unwrap_or_else(|_| BinaryMatrix::zeros(0, y.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionPrior {
    /// Prior mean of every coefficient.
    pub alpha: f64,
    /// Prior precision (must be positive).
    pub beta: f64,
}

impl Default for RegressionPrior {
    fn default() -> Self {
        RegressionPrior { alpha: 0.0, beta: 1.0 }
    }
}

impl RegressionPrior {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() || !self.alpha.is_finite() {
            return Err(Error::InvalidConfig("prior requires finite alpha and beta > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Convergence threshold on the gradient's max-norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { tol: 1e-8, max_iter: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Negative log posterior of one per-token logistic model, with its
/// derivatives.
#[derive(Debug, Clone, Copy)]
pub struct LogisticPosterior<'a> {
    features: &'a BinaryMatrix,
    labels: &'a [u8],
    prior: RegressionPrior,
}

impl<'a> LogisticPosterior<'a> {
    pub fn new(features: &'a BinaryMatrix, labels: &'a [u8], prior: RegressionPrior) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::ShapeMismatch(alloc::format!(
                "{} labels for {} feature rows",
                labels.len(),
                features.rows()
            )));
        }
        Ok(LogisticPosterior { features, labels, prior })
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    fn logit(&self, s: usize, theta: &[f64]) -> f64 {
        self.features.row(s).iter().zip(theta).filter(|(&f, _)| f == 1).map(|(_, t)| t).sum()
    }

    pub fn objective(&self, theta: &[f64]) -> f64 {
        let nll: f64 = (0..self.features.rows())
            .map(|s| {
                let z = self.logit(s, theta);
                softplus(z) - f64::from(self.labels[s]) * z
            })
            .sum();
        let penalty: f64 = theta.iter().map(|t| (t - self.prior.alpha) * (t - self.prior.alpha)).sum();
        nll + 0.5 * self.prior.beta * penalty
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = theta.iter().map(|t| self.prior.beta * (t - self.prior.alpha)).collect();
        for s in 0..self.features.rows() {
            let r = sigmoid(self.logit(s, theta)) - f64::from(self.labels[s]);
            for (gi, &f) in g.iter_mut().zip(self.features.row(s)) {
                if f == 1 {
                    *gi += r;
                }
            }
        }
        g
    }

    /// Row-major `d x d` Hessian: `Σ_s σ_s(1-σ_s) φ_s φ_sᵀ + β I`.
    pub fn hessian(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            h[i * d + i] = self.prior.beta;
        }
        for s in 0..self.features.rows() {
            let p = sigmoid(self.logit(s, theta));
            let w = p * (1.0 - p);
            let row = self.features.row(s);
            for i in 0..d {
                if row[i] == 0 {
                    continue;
                }
                for j in 0..d {
                    if row[j] == 1 {
                        h[i * d + j] += w;
                    }
                }
            }
        }
        h
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

/// MAP fit by damped Newton iterations plus the Laplace posterior summary.
///
/// Steps are halved until the objective does not increase. Non-convergence
/// within `max_iter` is reported through `converged = false`, with the best
/// iterate.
pub fn fit_token_model(
    features: &BinaryMatrix,
    labels: &[u8],
    prior: RegressionPrior,
    opts: FitOptions,
) -> Result<PosteriorSummary> {
    prior.validate()?;
    if features.rows() == 0 {
        return Err(Error::InvalidConfig("regression needs at least one row".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidConfig("tolerance must be positive".into()));
    }
    let post = LogisticPosterior::new(features, labels, prior)?;
    let d = post.dim();
    let mut theta = vec![prior.alpha; d];
    let mut f = post.objective(&theta);
    let mut g = post.gradient(&theta);
    let mut converged = max_abs(&g) < opts.tol;
    let mut iterations = 0;

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let Some(l) = linalg::cholesky(&post.hessian(&theta), d) else { break };
        let step = linalg::cholesky_solve(&l, d, &g);
        let g_norm = max_abs(&g);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a - t * s).collect();
            let fc = post.objective(&cand);
            if fc <= f {
                accepted = Some((cand, fc));
                break;
            }
            // Near the optimum the objective stops resolving; fall back to the gradient.
            let gc = post.gradient(&cand);
            if max_abs(&gc) < g_norm && fc - f <= 1e-12 * (1.0 + f.abs()) {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, fc)) = accepted else { break };
        theta = cand;
        f = fc;
        g = post.gradient(&theta);
        converged = max_abs(&g) < opts.tol;
    }

    let stddev = match linalg::cholesky(&post.hessian(&theta), d) {
        Some(l) => linalg::inverse_diagonal(&l, d).into_iter().map(sqrt).collect(),
        None => vec![f64::NAN; d],
    };
    Ok(PosteriorSummary { mean: theta, stddev, converged, iterations })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CausalConfig {
    pub prior: RegressionPrior,
    /// Interval half-width multiplier `c` in `θ̂ = c · stddev`.
    pub interval_scale: f64,
    pub fit: FitOptions,
}

impl Default for CausalConfig {
    fn default() -> Self {
        CausalConfig { prior: RegressionPrior::default(), interval_scale: 1.0, fit: FitOptions::default() }
    }
}

/// Dense bipartite graph with interval edge weights `theta ± theta_hat`.
/// Rows index input tokens, columns index output tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct DependencyGraph {
    pub x_nodes: TokenSequence,
    pub y_nodes: TokenSequence,
    pub theta: Matrix,
    pub theta_hat: Matrix,
    /// Per output token: whether its regression converged.
    pub converged: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    x_nodes: Vec<String>,
    y_nodes: Vec<String>,
    theta: Matrix,
    theta_hat: Matrix,
    #[serde(default)]
    converged: Vec<bool>,
}

impl TryFrom<GraphRepr> for DependencyGraph {
    type Error = Error;
    fn try_from(r: GraphRepr) -> Result<Self> {
        let x = TokenSequence::from_surfaces(r.x_nodes, Side::Input)?;
        let y = TokenSequence::from_surfaces(r.y_nodes, Side::Output)?;
        let converged = if r.converged.is_empty() { vec![true; y.len()] } else { r.converged };
        DependencyGraph::new(x, y, r.theta, r.theta_hat, converged)
    }
}

impl From<DependencyGraph> for GraphRepr {
    fn from(g: DependencyGraph) -> Self {
        GraphRepr {
            x_nodes: g.x_nodes.surfaces().map(String::from).collect(),
            y_nodes: g.y_nodes.surfaces().map(String::from).collect(),
            theta: g.theta,
            theta_hat: g.theta_hat,
            converged: g.converged,
        }
    }
}

impl DependencyGraph {
    pub fn new(
        x_nodes: TokenSequence,
        y_nodes: TokenSequence,
        theta: Matrix,
        theta_hat: Matrix,
        converged: Vec<bool>,
    ) -> Result<Self> {
        let (n, m) = (x_nodes.len(), y_nodes.len());
        for (name, mat) in [("theta", &theta), ("theta_hat", &theta_hat)] {
            if mat.rows() != n || mat.cols() != m {
                return Err(Error::ShapeMismatch(alloc::format!(
                    "{name} is {}x{}, expected {n}x{m}",
                    mat.rows(),
                    mat.cols()
                )));
            }
            if mat.as_slice().iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig(alloc::format!("{name} has non-finite entries")));
            }
        }
        if theta.as_slice().iter().any(|&v| v < 0.0) || theta_hat.as_slice().iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidConfig("edge weights and half-widths must be non-negative".into()));
        }
        if converged.len() != m {
            return Err(Error::ShapeMismatch("one convergence flag per output token".into()));
        }
        Ok(DependencyGraph { x_nodes, y_nodes, theta, theta_hat, converged })
    }

    /// Graph with the given weights and zero uncertainty on named nodes.
    pub fn from_weights(
        x: TokenSequence,
        y: TokenSequence,
        theta: Matrix,
        theta_hat: Matrix,
    ) -> Result<Self> {
        let m = y.len();
        DependencyGraph::new(x.with_side(Side::Input), y.with_side(Side::Output), theta, theta_hat, vec![true; m])
    }

    pub fn n_inputs(&self) -> usize {
        self.x_nodes.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.y_nodes.len()
    }
}

/// Regression inputs shared by all per-token fits: the original pair is row 0.
#[derive(Debug, Clone)]
pub struct RegressionData {
    pub features: FeatureMatrix,
    pub labels: BinaryMatrix,
}

impl RegressionData {
    pub fn from_set(pset: &PerturbationSet) -> Self {
        let x = &pset.original.x;
        let y = &pset.original.y;
        let mut feature_rows = vec![vec![1u8; x.len()]];
        feature_rows.extend(pset.samples.iter().map(|s| encode_features(x, &s.x)));
        let labels = encode_labels(
            y,
            core::iter::once(Some(y)).chain(pset.samples.iter().map(|s| s.y.as_ref())),
        );
        let features = BinaryMatrix::from_rows(&feature_rows).expect("rectangular by construction");
        RegressionData { features, labels }
    }

    pub fn fit_column(&self, j: usize, cfg: &CausalConfig) -> Result<PosteriorSummary> {
        fit_token_model(&self.features, &self.labels.column(j), cfg.prior, cfg.fit)
    }
}

/// Normalizes per-token fits into a graph: negative means are clipped to 0,
/// then means and half-widths are divided by the largest clipped mean (left
/// as is when that maximum is 0).
pub fn assemble_graph(
    pset: &PerturbationSet,
    fits: &[PosteriorSummary],
    cfg: &CausalConfig,
) -> Result<DependencyGraph> {
    let (n, m) = (pset.original.x.len(), pset.original.y.len());
    if fits.len() != m {
        return Err(Error::ShapeMismatch("one fit per output token".into()));
    }
    let clipped = Matrix::from_fn(n, m, |i, j| fits[j].mean[i].max(0.0));
    let max = clipped.max();
    let divisor = if max > 0.0 { max } else { 1.0 };
    let theta = Matrix::from_fn(n, m, |i, j| clipped.get(i, j) / divisor);
    let theta_hat = Matrix::from_fn(n, m, |i, j| {
        let sd = fits[j].stddev[i];
        if sd.is_finite() { cfg.interval_scale * sd / divisor } else { 0.0 }
    });
    DependencyGraph::new(
        pset.original.x.clone(),
        pset.original.y.clone(),
        theta,
        theta_hat,
        fits.iter().map(|f| f.converged).collect(),
    )
}

fn validate_causal(cfg: &CausalConfig) -> Result<()> {
    cfg.prior.validate()?;
    if !(cfg.interval_scale >= 0.0) {
        return Err(Error::InvalidConfig("interval_scale must be non-negative".into()));
    }
    Ok(())
}

/// Fits one regression per output token and assembles the normalized graph.
pub fn build_dependency_graph(pset: &PerturbationSet, cfg: &CausalConfig) -> Result<DependencyGraph> {
    validate_causal(cfg)?;
    let data = RegressionData::from_set(pset);
    let fits = (0..pset.original.y.len()).map(|j| data.fit_column(j, cfg)).collect::<Result<Vec<_>>>()?;
    assemble_graph(pset, &fits, cfg)
}

/// Same as [`build_dependency_graph`], with the per-token fits spread over
/// up to `workers` threads. Results are identical to the sequential path.
#[cfg(feature = "std")]
pub fn build_dependency_graph_parallel(
    pset: &PerturbationSet,
    cfg: &CausalConfig,
    workers: usize,
) -> Result<DependencyGraph> {
    validate_causal(cfg)?;
    let m = pset.original.y.len();
    let workers = workers.clamp(1, m.max(1));
    if workers == 1 {
        return build_dependency_graph(pset, cfg);
    }
    let data = RegressionData::from_set(pset);
    let mut slots: Vec<Option<Result<PosteriorSummary>>> = (0..m).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunk = m.div_ceil(workers);
        for (c, out) in slots.chunks_mut(chunk).enumerate() {
            let data = &data;
            scope.spawn(move || {
                for (k, slot) in out.iter_mut().enumerate() {
                    *slot = Some(data.fit_column(c * chunk + k, cfg));
                }
            });
        }
    });
    let fits = slots.into_iter().map(|s| s.expect("every slot filled")).collect::<Result<Vec<_>>>()?;
    assemble_graph(pset, &fits, cfg)
}
