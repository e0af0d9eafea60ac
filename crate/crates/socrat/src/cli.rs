//! Command-line interface: `explain`, `partition`, `eval` and `bias`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use socrat_core::partition::cocluster_spectral;
use socrat_core::{
    collect_samples, explain_samples, partition_exact, partition_local_search, stage_seed, CausalConfig,
    DependencyGraph, EditNeighborhood, Error as CoreError, ExamplePair, ExplainConfig, Partition, Perturber,
    PerturberConfig, RegressionPrior, Scheme, Side, TokenDropout, TokenSequence,
};

use crate::adapters::{BlackBoxKind, BlackBoxSpec, HttpPerturber};
use crate::config::{parse_n_grid, parse_seeds, PartitionOverrides, Resolver};
use crate::error::{exit, read_file, AppError, Result};
use crate::experiment::{run_bias_experiment, run_g2p_experiment, BiasSetup, ExperimentConfig};
use crate::formats::{from_versioned_json, load_cmudict, load_gold, load_perturbation_file, to_versioned_json};
use crate::render::{render, ExplanationDocument, Format};

#[derive(Debug, Parser)]
#[command(name = "socrat", version, about = "Explain predictions of black-box sequence-to-sequence models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Explain one input/output pair of a black box.
    Explain(ExplainArgs),
    /// Partition a dependency graph read from JSON.
    Partition(PartitionArgs),
    /// Score recovered alignments against gold alignments.
    Eval(EvalArgs),
    /// Measure the dependency of an injected register bias on its trigger.
    Bias(BiasArgs),
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// `key = value` file with defaults for any flag.
    #[arg(long, env = "SOCRAT_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, env = "SOCRAT_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, env = "SOCRAT_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct SamplingArgs {
    /// Samples including the original pair.
    #[arg(long, env = "SOCRAT_N_SAMPLES")]
    pub n_samples: Option<usize>,
    /// Variance scaling forwarded to an external perturber.
    #[arg(long, env = "SOCRAT_SCALING")]
    pub scaling: Option<f64>,
    #[arg(long, env = "SOCRAT_MAX_EDIT_DISTANCE")]
    pub max_edit_distance: Option<usize>,
    #[arg(long, env = "SOCRAT_DROPOUT_RATE")]
    pub dropout_rate: Option<f64>,
    #[arg(long, env = "SOCRAT_PRIOR_ALPHA", allow_hyphen_values = true)]
    pub prior_alpha: Option<f64>,
    #[arg(long, env = "SOCRAT_PRIOR_BETA")]
    pub prior_beta: Option<f64>,
    /// Multiplier from posterior standard deviation to interval half-width.
    #[arg(long, env = "SOCRAT_INTERVAL_SCALE")]
    pub interval_scale: Option<f64>,
    /// Queries per black-box call.
    #[arg(long, env = "SOCRAT_BATCH_SIZE")]
    pub batch_size: Option<usize>,
    /// Per-call timeout of external black boxes, in seconds.
    #[arg(long, env = "SOCRAT_TIMEOUT")]
    pub timeout: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct SolverArgs {
    /// Number of chunks.
    #[arg(long, env = "SOCRAT_K")]
    pub k: Option<usize>,
    /// Uncertainty budget.
    #[arg(long, env = "SOCRAT_GAMMA")]
    pub gamma: Option<f64>,
    #[arg(long, env = "SOCRAT_ABS_GAP_TOL")]
    pub abs_gap_tol: Option<f64>,
    /// Exact solver time limit in seconds.
    #[arg(long, env = "SOCRAT_TIME_LIMIT")]
    pub time_limit: Option<f64>,
    /// Minimum input nodes per chunk.
    #[arg(long, env = "SOCRAT_U_MIN")]
    pub u_min: Option<usize>,
    #[arg(long, env = "SOCRAT_U_MAX")]
    pub u_max: Option<usize>,
    /// Minimum output nodes per chunk.
    #[arg(long, env = "SOCRAT_V_MIN")]
    pub v_min: Option<usize>,
    #[arg(long, env = "SOCRAT_V_MAX")]
    pub v_max: Option<usize>,
    /// Largest node count solved exactly; larger graphs use local search.
    #[arg(long, env = "SOCRAT_EXACT_THRESHOLD")]
    pub exact_threshold: Option<usize>,
    /// Local search restarts.
    #[arg(long, env = "SOCRAT_RESTARTS")]
    pub restarts: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    /// Black-box spec: dict:PATH, identity, permute:I,J,..., lexicon:PATH,
    /// biased:TRIGGER,ON,OFF:SPEC, cmd:PROGRAM ARGS, http:URL.
    #[arg(long, env = "SOCRAT_BLACKBOX")]
    pub blackbox: Option<String>,
    #[arg(long, env = "SOCRAT_INPUT")]
    pub input: Option<String>,
    /// Output to explain; the black box is queried when absent.
    #[arg(long, env = "SOCRAT_OUTPUT")]
    pub output: Option<String>,
    /// Input tokenization: word or char (char for dictionaries by default).
    #[arg(long, env = "SOCRAT_TOKENIZE")]
    pub tokenize: Option<String>,
    /// Output tokenization: word or char.
    #[arg(long, env = "SOCRAT_OUTPUT_TOKENIZE")]
    pub output_tokenize: Option<String>,
    /// json, dot or heatmap_csv.
    #[arg(long, env = "SOCRAT_FORMAT")]
    pub format: Option<String>,
    /// auto, edit, dropout or http:URL.
    #[arg(long, env = "SOCRAT_PERTURBER")]
    pub perturber: Option<String>,
    /// Replay perturbations and outputs from a JSON-lines file instead of
    /// querying.
    #[arg(long, env = "SOCRAT_PERTURBATIONS")]
    pub perturbations: Option<PathBuf>,
    #[arg(long, env = "SOCRAT_SEED")]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    /// Dependency graph JSON.
    #[arg(long, env = "SOCRAT_GRAPH")]
    pub graph: Option<PathBuf>,
    /// exact, local or spectral.
    #[arg(long, env = "SOCRAT_SOLVER")]
    pub solver: Option<String>,
    #[arg(long, env = "SOCRAT_SEED")]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub bounds: SolverArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Pronunciation dictionary in CMU format.
    #[arg(long, env = "SOCRAT_DICT")]
    pub dict: Option<PathBuf>,
    /// Gold alignments.
    #[arg(long, env = "SOCRAT_GOLD")]
    pub gold: Option<PathBuf>,
    /// Comma-separated sample counts.
    #[arg(long, env = "SOCRAT_N_GRID")]
    pub n_grid: Option<String>,
    /// A count N (seeds 0..N) or a comma-separated list.
    #[arg(long, env = "SOCRAT_SEEDS")]
    pub seeds: Option<String>,
    /// Record wall-clock times (makes the report non-reproducible).
    #[arg(long, env = "SOCRAT_TIMING")]
    pub timing: bool,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct BiasArgs {
    /// A count N (seeds 0..N) or a comma-separated list.
    #[arg(long, env = "SOCRAT_SEEDS")]
    pub seeds: Option<String>,
    /// Query the unmodified lexicon instead of the biased wrapper.
    #[arg(long, env = "SOCRAT_UNBIASED")]
    pub unbiased: bool,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
}

/// Edit-distance neighbors, or token dropout when the input has none.
struct EditOrDropout(EditNeighborhood);

impl Perturber for EditOrDropout {
    fn perturb(&mut self, x: &TokenSequence, cfg: &PerturberConfig) -> socrat_core::Result<Vec<TokenSequence>> {
        match self.0.perturb(x, cfg) {
            Err(CoreError::EmptyNeighborhood { .. }) => TokenDropout::default().perturb(x, cfg),
            r => r,
        }
    }
}

fn parse_scheme(s: &str) -> Result<Scheme> {
    match s {
        "word" | "whitespace" => Ok(Scheme::Whitespace),
        "char" | "character" => Ok(Scheme::Character),
        _ => Err(AppError::Usage(format!("unknown tokenization {s:?} (word, char)"))),
    }
}

fn resolve_common(r: &mut Resolver, a: &CommonArgs) -> Result<(Option<PathBuf>, usize)> {
    let out = r.opt("out", a.out.as_ref().map(|p| p.display().to_string()))?.map(PathBuf::from);
    let workers = r.value("workers", a.workers, 1)?;
    if workers == 0 {
        return Err(AppError::Usage("--workers must be positive".into()));
    }
    Ok((out, workers))
}

/// Sampling, fitting and solver-choice settings; seed and partition are set
/// by the caller.
fn resolve_explain_config(r: &mut Resolver, s: &SamplingArgs, v: &SolverArgs, workers: usize) -> Result<ExplainConfig> {
    let d = ExplainConfig::default();
    let perturb = PerturberConfig {
        n_samples: r.value("n-samples", s.n_samples, d.perturb.n_samples)?,
        seed: 0,
        scaling: r.value("scaling", s.scaling, d.perturb.scaling)?,
        max_edit_distance: r.value("max-edit-distance", s.max_edit_distance, d.perturb.max_edit_distance)?,
        dropout_rate: r.value("dropout-rate", s.dropout_rate, d.perturb.dropout_rate)?,
    };
    perturb.validate()?;
    let causal = CausalConfig {
        prior: RegressionPrior {
            alpha: r.value("prior-alpha", s.prior_alpha, d.causal.prior.alpha)?,
            beta: r.value("prior-beta", s.prior_beta, d.causal.prior.beta)?,
        },
        interval_scale: r.value("interval-scale", s.interval_scale, d.causal.interval_scale)?,
        fit: d.causal.fit,
    };
    causal.prior.validate()?;
    Ok(ExplainConfig {
        perturb,
        causal,
        partition: None,
        exact_threshold: r.value("exact-threshold", v.exact_threshold, d.exact_threshold)?,
        restarts: r.value("restarts", v.restarts, d.restarts)?,
        workers,
        batch_size: r.value("batch-size", s.batch_size, 64)?,
    })
}

fn resolve_overrides(r: &mut Resolver, v: &SolverArgs) -> Result<PartitionOverrides> {
    Ok(PartitionOverrides {
        k: r.opt("k", v.k)?,
        gamma: r.opt("gamma", v.gamma)?,
        abs_gap_tol: r.opt("abs-gap-tol", v.abs_gap_tol)?,
        time_limit_secs: r.opt("time-limit", v.time_limit)?,
        u_min: r.opt("u-min", v.u_min)?,
        u_max: r.opt("u-max", v.u_max)?,
        v_min: r.opt("v-min", v.v_min)?,
        v_max: r.opt("v-max", v.v_max)?,
    })
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| AppError::io(p, e)),
        None => stdout.write_all(text.as_bytes()).map_err(|e| AppError::io("<stdout>", e)),
    }
}

pub fn cmd_explain(a: &ExplainArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut r = Resolver::from_path(a.common.config.as_deref())?;
    let (out, workers) = resolve_common(&mut r, &a.common)?;
    let mut cfg = resolve_explain_config(&mut r, &a.sampling, &a.solver, workers)?;
    let seed = r.value("seed", a.seed, 0u64)?;
    cfg.perturb.seed = seed;
    let overrides = resolve_overrides(&mut r, &a.solver)?;
    let format: Format = r.value("format", a.format.clone(), "json".to_string())?.parse()?;
    let replay = r.opt("perturbations", a.perturbations.as_ref().map(|p| p.display().to_string()))?;
    let blackbox = r.opt("blackbox", a.blackbox.clone())?;
    let kind = blackbox.as_deref().map(BlackBoxKind::parse).transpose()?;
    let is_dict = kind.as_ref().is_some_and(|k| k.dictionary_path().is_some());
    let x_scheme = parse_scheme(&r.value("tokenize", a.tokenize.clone(), if is_dict { "char" } else { "word" }.into())?)?;
    let y_scheme = parse_scheme(&r.value("output-tokenize", a.output_tokenize.clone(), "word".into())?)?;

    let (pset, dropped) = if let Some(path) = replay {
        (load_perturbation_file(Path::new(&path), x_scheme, y_scheme)?, 0)
    } else {
        let kind = kind.ok_or_else(|| AppError::Usage("--blackbox or --perturbations is required".into()))?;
        let input = r.required("input", a.input.clone())?;
        let mut spec = BlackBoxSpec::new(kind.clone());
        spec.batch_size = cfg.batch_size.max(1);
        spec.timeout = Duration::from_secs_f64(r.value("timeout", a.sampling.timeout, 30.0)?);
        spec.input_scheme = x_scheme;
        spec.output_scheme = y_scheme;
        spec.max_parallel = workers;
        let bb = spec.build()?;
        let x = socrat_core::tokenize(&input, x_scheme, Side::Input)?;
        let y = match r.opt("output", a.output.clone())? {
            Some(o) => socrat_core::tokenize(&o, y_scheme, Side::Output)?,
            None => bb
                .query_batch(std::slice::from_ref(&x))?
                .pop()
                .and_then(|resp| resp.into_option())
                .ok_or_else(|| CoreError::black_box(Some(0), format!("no output for {input:?}")))?,
        };
        let which = r.value("perturber", a.perturber.clone(), "auto".to_string())?;
        let mut perturber: Box<dyn Perturber> = match which.as_str() {
            "auto" | "edit" if is_dict => {
                let dict = load_cmudict(kind.dictionary_path().expect("dictionary spec"))?;
                let edit = EditNeighborhood::new(dict.vocabulary(), x_scheme);
                if which == "auto" {
                    Box::new(EditOrDropout(edit))
                } else {
                    Box::new(edit)
                }
            }
            "edit" => return Err(AppError::Usage("--perturber edit needs a dict: black box".into())),
            "auto" | "dropout" => Box::new(TokenDropout::default()),
            other => match other.strip_prefix("http:") {
                Some(rest) => {
                    let url = if rest.starts_with("//") { format!("http:{rest}") } else { rest.to_string() };
                    Box::new(HttpPerturber::new(&url, spec.timeout))
                }
                None => return Err(AppError::Usage(format!("unknown perturber {other:?}"))),
            },
        };
        collect_samples(&ExamplePair::new(x, y), &bb, perturber.as_mut(), &cfg)?
    };
    let (nx, ny) = (pset.original.x.len(), pset.original.y.len());
    let pcfg = overrides.resolve(nx, ny);
    pcfg.validate(nx, ny)?;
    note_partition(&mut r, &pcfg);
    cfg.partition = Some(pcfg);
    let explanation = explain_samples(&pset, &cfg, dropped)?;
    let doc = ExplanationDocument { run_config: r.into_resolved(), explanation };
    emit(&out, &render(&doc, format)?, stdout)
}

#[derive(serde::Serialize)]
struct PartitionDocument<'a> {
    run_config: &'a std::collections::BTreeMap<String, String>,
    partition: &'a Partition,
}

#[derive(serde::Deserialize)]
struct GraphDocument {
    graph: DependencyGraph,
}

/// Reads a graph from a versioned JSON document: either `{"graph": ...}` or
/// an explanation document, whose graph is used.
pub fn load_graph(path: &Path) -> Result<DependencyGraph> {
    let text = read_file(path)?;
    let origin = path.display().to_string();
    if let Ok(doc) = from_versioned_json::<GraphDocument>(&text, &origin) {
        return Ok(doc.graph);
    }
    Ok(from_versioned_json::<ExplanationDocument>(&text, &origin)?.explanation.graph)
}

fn note_partition(r: &mut Resolver, cfg: &socrat_core::PartitionConfig) {
    r.note("k", cfg.k);
    r.note("gamma", cfg.gamma);
    r.note("abs-gap-tol", cfg.abs_gap_tol);
    r.note("time-limit", cfg.time_limit_secs);
    r.note("u-min", cfg.c_u_min);
    r.note("u-max", cfg.c_u_max);
    r.note("v-min", cfg.c_v_min);
    r.note("v-max", cfg.c_v_max);
}

pub fn cmd_partition(a: &PartitionArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut r = Resolver::from_path(a.common.config.as_deref())?;
    let (out, _) = resolve_common(&mut r, &a.common)?;
    let path = PathBuf::from(r.required::<String>("graph", a.graph.as_ref().map(|p| p.display().to_string()))?);
    let graph = load_graph(&path)?;
    let solver = r.value("solver", a.solver.clone(), "exact".to_string())?;
    let seed = r.value("seed", a.seed, 0u64)?;
    let restarts = r.value("restarts", a.bounds.restarts, ExplainConfig::default().restarts)?;
    let overrides = resolve_overrides(&mut r, &a.bounds)?;
    let (nx, ny) = (graph.n_inputs(), graph.n_outputs());
    let cfg = overrides.resolve(nx, ny);
    note_partition(&mut r, &cfg);
    let partition = match solver.as_str() {
        "exact" => partition_exact(&graph, &cfg)?,
        "local" => partition_local_search(&graph, &cfg, restarts, stage_seed(seed, socrat_core::explain::STAGE_PARTITION))?,
        "spectral" => cocluster_spectral(&graph, &cfg)?,
        other => return Err(AppError::Usage(format!("unknown solver {other:?} (exact, local, spectral)"))),
    };
    let resolved = r.into_resolved();
    let doc = PartitionDocument { run_config: &resolved, partition: &partition };
    emit(&out, &to_versioned_json(&doc)?, stdout)
}

pub fn cmd_eval(a: &EvalArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut r = Resolver::from_path(a.common.config.as_deref())?;
    let (out, workers) = resolve_common(&mut r, &a.common)?;
    let dict_path = r.required::<String>("dict", a.dict.as_ref().map(|p| p.display().to_string()))?;
    let gold_path = r.required::<String>("gold", a.gold.as_ref().map(|p| p.display().to_string()))?;
    let n_grid = parse_n_grid(&r.required::<String>("n-grid", a.n_grid.clone())?)?;
    let seeds = parse_seeds(&r.value("seeds", a.seeds.clone(), "5".to_string())?)?;
    let timing = r.value("timing", a.timing.then_some(true), false)?;
    let explain = resolve_explain_config(&mut r, &a.sampling, &a.solver, 1)?;
    let partition = resolve_overrides(&mut r, &a.solver)?;
    let dict = load_cmudict(Path::new(&dict_path))?;
    let gold = load_gold(Path::new(&gold_path))?;
    let cfg = ExperimentConfig { explain, partition, workers, timing };
    let report = run_g2p_experiment(&dict, &gold, &n_grid, &seeds, &cfg)?;
    emit(&out, &report.to_csv(r.resolved()), stdout)
}

pub fn cmd_bias(a: &BiasArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut r = Resolver::from_path(a.common.config.as_deref())?;
    let (out, workers) = resolve_common(&mut r, &a.common)?;
    let seeds = parse_seeds(&r.value("seeds", a.seeds.clone(), "5".to_string())?)?;
    let unbiased = r.value("unbiased", a.unbiased.then_some(true), false)?;
    let explain = resolve_explain_config(&mut r, &a.sampling, &SolverArgs::default(), 1)?;
    let cfg = ExperimentConfig { explain, workers, ..Default::default() };
    let report = run_bias_experiment(&BiasSetup::builtin(), !unbiased, &seeds, &cfg)?;
    emit(&out, &report.to_csv(r.resolved()), stdout)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    let result = match &cli.command {
        Command::Explain(a) => cmd_explain(a, stdout),
        Command::Partition(a) => cmd_partition(a, stdout),
        Command::Eval(a) => cmd_eval(a, stdout),
        Command::Bias(a) => cmd_bias(a, stdout),
    };
    match result {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(stderr, "socrat: {e}");
            e.exit_code()
        }
    }
}
