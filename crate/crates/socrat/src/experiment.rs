//! Experiment drivers: alignment recovery on a pronunciation dictionary and
//! detection of an injected register bias.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use socrat_core::{
    alignment_error_rate, collect_samples, edge_f1, explain, levenshtein, stage_seed, BiasedWrapper, BlackBox,
    DependencyGraph, EdgeRule, EditNeighborhood, Error as CoreError, ExamplePair, ExplainConfig, G2PDictionary,
    GoldAlignment, Lexicon, Scheme, Side, TokenDropout, TokenSequence,
};

use crate::config::PartitionOverrides;
use crate::error::{AppError, Result};

const STAGE_WORD: u64 = 0x100;
const STAGE_BIAS: u64 = 0x200;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// `perturb.n_samples` and `perturb.seed` are overridden per run.
    pub explain: ExplainConfig,
    /// Applied to each word's graph; unset fields use the per-graph defaults.
    pub partition: PartitionOverrides,
    pub workers: usize,
    /// Record wall-clock times; off by default so reports are reproducible.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig { explain: ExplainConfig::default(), partition: PartitionOverrides::default(), workers: 1, timing: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub n: usize,
    pub seed: u64,
    pub word: String,
    pub aer: f64,
    pub f1: f64,
    pub wall_ms: u64,
}

/// Mean and sample standard deviation over seeds of the per-seed averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n: usize,
    pub runs: usize,
    pub aer_mean: f64,
    pub aer_std: f64,
    pub f1_mean: f64,
    pub f1_std: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Sorted by `(n, seed, word)`.
    pub records: Vec<ExperimentRecord>,
    pub aggregates: Vec<Aggregate>,
    /// Gold words that could not be run, with the reason.
    pub skipped: BTreeMap<String, String>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl ExperimentReport {
    fn aggregate(records: &[ExperimentRecord]) -> Vec<Aggregate> {
        let mut per_seed: BTreeMap<usize, BTreeMap<u64, (Vec<f64>, Vec<f64>)>> = BTreeMap::new();
        for r in records {
            let e = per_seed.entry(r.n).or_default().entry(r.seed).or_default();
            e.0.push(r.aer);
            e.1.push(r.f1);
        }
        per_seed
            .into_iter()
            .map(|(n, seeds)| {
                let aer: Vec<f64> = seeds.values().map(|(a, _)| mean_std(a).0).collect();
                let f1: Vec<f64> = seeds.values().map(|(_, f)| mean_std(f).0).collect();
                let (aer_mean, aer_std) = mean_std(&aer);
                let (f1_mean, f1_std) = mean_std(&f1);
                Aggregate { n, runs: seeds.len(), aer_mean, aer_std, f1_mean, f1_std }
            })
            .collect()
    }

    pub fn aggregate_for(&self, n: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.n == n)
    }

    /// Per-run rows, a blank line, then one aggregate row per `n`. Lines
    /// starting with `#` carry the run configuration and skipped words.
    pub fn to_csv(&self, run_config: &BTreeMap<String, String>) -> String {
        let mut out = String::new();
        for (k, v) in run_config {
            let _ = writeln!(out, "# {k}={v}");
        }
        for (w, why) in &self.skipped {
            let _ = writeln!(out, "# skipped {w}: {why}");
        }
        out.push_str("n,seed,word,aer,f1,wall_ms\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{},{},{:.6},{:.6},{}", r.n, r.seed, r.word, r.aer, r.f1, r.wall_ms);
        }
        out.push('\n');
        out.push_str("n,runs,aer_mean,aer_std,f1_mean,f1_std\n");
        for a in &self.aggregates {
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{:.6},{:.6}",
                a.n, a.runs, a.aer_mean, a.aer_std, a.f1_mean, a.f1_std
            );
        }
        out
    }
}

/// Runs `jobs` on up to `workers` threads and returns the results in job order.
fn run_parallel<J: Sync, T: Send>(jobs: &[J], workers: usize, f: impl Fn(&J) -> T + Sync) -> Vec<T> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<T>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, jobs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let r = f(job);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    results.into_inner().unwrap().into_iter().map(|r| r.expect("every job ran")).collect()
}

struct WordJob<'a> {
    n: usize,
    seed: u64,
    word_index: usize,
    word: &'a str,
}

struct WordSetup {
    pair: ExamplePair,
    neighborhood: EditNeighborhood,
}

/// For every `(n, seed)` and gold word, explains the dictionary's output for
/// the word under edit-distance perturbations drawn from the dictionary's
/// vocabulary, predicts one input per output token and scores the edges.
///
/// Words missing from the dictionary, without a neighbor in it, or whose gold
/// indices exceed the sequence lengths are skipped and listed in the report.
pub fn run_g2p_experiment(
    dict: &G2PDictionary,
    gold: &BTreeMap<String, GoldAlignment>,
    n_grid: &[usize],
    seeds: &[u64],
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    if n_grid.is_empty() || seeds.is_empty() {
        return Err(AppError::Usage("n_grid and seeds must be non-empty".into()));
    }
    if let Some(n) = n_grid.iter().find(|&&n| n == 0) {
        return Err(AppError::Usage(format!("perturbation count {n} must be positive")));
    }
    let vocab = dict.vocabulary();
    let max = cfg.explain.perturb.max_edit_distance;
    let mut skipped = BTreeMap::new();
    let mut setups: BTreeMap<&str, WordSetup> = BTreeMap::new();
    for (word, g) in gold {
        let Some(phones) = dict.lookup(word) else {
            skipped.insert(word.clone(), "not in dictionary".to_string());
            continue;
        };
        let x = socrat_core::tokenize(word, Scheme::Character, Side::Input)?;
        let y = TokenSequence::from_surfaces(phones.to_vec(), Side::Output)?;
        if let Err(e) = g.validate(x.len(), y.len()) {
            skipped.insert(word.clone(), e.to_string());
            continue;
        }
        // the sampler enumerates its pool in vocabulary order, so restricting
        // the vocabulary to the ball around the word leaves the draws unchanged
        let ball: BTreeSet<String> = vocab
            .iter()
            .filter(|v| v.chars().count().abs_diff(x.len()) <= max && levenshtein(v, word) <= max)
            .cloned()
            .collect();
        if ball.iter().all(|v| v == word) {
            skipped.insert(word.clone(), CoreError::EmptyNeighborhood { word: word.clone(), max_distance: max }.to_string());
            continue;
        }
        setups.insert(word, WordSetup { pair: ExamplePair::new(x, y), neighborhood: EditNeighborhood::new(ball, Scheme::Character) });
    }
    let index: BTreeMap<&str, usize> = gold.keys().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let mut jobs = Vec::new();
    for &n in n_grid {
        for &seed in seeds {
            for &word in setups.keys() {
                jobs.push(WordJob { n, seed, word_index: index[word], word });
            }
        }
    }
    let results = run_parallel(&jobs, cfg.workers, |job| -> Result<ExperimentRecord> {
        let setup = &setups[job.word];
        let mut ecfg = cfg.explain.clone();
        ecfg.perturb.n_samples = job.n;
        ecfg.perturb.seed = stage_seed(job.seed, STAGE_WORD + job.word_index as u64);
        ecfg.partition = Some(cfg.partition.resolve(setup.pair.x.len(), setup.pair.y.len()));
        // per-token fits run on one thread; the jobs are already parallel
        ecfg.workers = 1;
        let start = Instant::now();
        let mut perturber = setup.neighborhood.clone();
        let ex = explain(&setup.pair, dict, &mut perturber, &ecfg)?;
        let edges = socrat_core::predict_edges(&ex.graph, EdgeRule::ArgmaxPerOutput);
        let g = &gold[job.word];
        Ok(ExperimentRecord {
            n: job.n,
            seed: job.seed,
            word: job.word.to_string(),
            aer: alignment_error_rate(&edges, g),
            f1: edge_f1(&edges, &g.sure),
            wall_ms: if cfg.timing { start.elapsed().as_millis() as u64 } else { 0 },
        })
    });
    let mut records = results.into_iter().collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| (a.n, a.seed, &a.word).cmp(&(b.n, b.seed, &b.word)));
    let aggregates = ExperimentReport::aggregate(&records);
    Ok(ExperimentReport { records, aggregates, skipped })
}

/// A matched pair of sentences that differ only at one position: the trigger
/// in `with_trigger`, a neutral filler in `without_trigger`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub with_trigger: String,
    pub without_trigger: String,
}

#[derive(Debug, Clone)]
pub struct BiasSetup {
    pub trigger: String,
    pub register_on: String,
    pub register_off: String,
    pub base: Lexicon,
    pub pairs: Vec<MatchedPair>,
}

impl BiasSetup {
    /// English-to-French word lexicon where "you" and "yourself" both render
    /// the formal "vous", trigger "however", filler "indeed".
    pub fn builtin() -> Self {
        let base = Lexicon::from_pairs([
            ("you", "vous"),
            ("yourself", "vous"),
            ("however", "cependant"),
            ("indeed", "en effet"),
            ("should", "devriez"),
            ("ask", "demander"),
            ("why", "pourquoi"),
            ("know", "savez"),
            ("that", "que"),
            ("can", "pouvez"),
            ("trust", "faire confiance"),
            ("will", "allez"),
            ("find", "trouver"),
            ("at", "à"),
            ("home", "maison"),
            ("tell", "dites"),
            ("are", "êtes"),
            ("ready", "prêt"),
            ("see", "voir"),
            ("in", "dans"),
            ("the", "le"),
            ("mirror", "miroir"),
        ]);
        let sentences = [
            "however you should ask yourself why",
            "you know however that you can trust yourself",
            "however you will find yourself at home",
            "tell yourself however that you are ready",
            "you can however see yourself in the mirror",
        ];
        let pairs = sentences
            .iter()
            .map(|s| MatchedPair { with_trigger: s.to_string(), without_trigger: s.replace("however", "indeed") })
            .collect();
        BiasSetup {
            trigger: "however".into(),
            register_on: "tu".into(),
            register_off: "vous".into(),
            base,
            pairs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRecord {
    pub pair: usize,
    pub seed: u64,
    /// False when the output has no register token; the numbers are then 0.
    pub applicable: bool,
    /// θ from the trigger to the first register token of the output.
    pub strength: f64,
    /// 1 + number of other inputs with θ at least `strength` in that column.
    pub rank: usize,
    /// `strength` minus the same quantity for the filler sentence.
    pub contrast: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BiasReport {
    pub records: Vec<BiasRecord>,
}

impl BiasReport {
    /// Mean contrast and its standard error over applicable records.
    pub fn contrast_summary(&self) -> (f64, f64, usize) {
        let c: Vec<f64> = self.records.iter().filter(|r| r.applicable).map(|r| r.contrast).collect();
        let (mean, std) = mean_std(&c);
        (mean, std / (c.len() as f64).sqrt(), c.len())
    }

    pub fn to_csv(&self, run_config: &BTreeMap<String, String>) -> String {
        let mut out = String::new();
        for (k, v) in run_config {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str("pair,seed,applicable,strength,rank,contrast\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{},{:.6}",
                r.pair, r.seed, r.applicable, r.strength, r.rank, r.contrast
            );
        }
        out
    }
}

/// Index of the first output token equal to either register token.
fn register_column(y: &TokenSequence, setup: &BiasSetup) -> Option<usize> {
    y.surfaces().position(|s| s == setup.register_on || s == setup.register_off)
}

fn column_strength(graph: &DependencyGraph, row: usize, col: usize) -> (f64, usize) {
    let s = graph.theta.get(row, col);
    let above = (0..graph.n_inputs()).filter(|&i| i != row && graph.theta.get(i, col) >= s).count();
    (s, above + 1)
}

/// Strength and rank of `x[slot]` in the first register column, or `None`
/// when the output has no register token.
fn measure<B: BlackBox + ?Sized>(
    sentence: &str,
    slot: usize,
    blackbox: &B,
    setup: &BiasSetup,
    cfg: &ExplainConfig,
    seed: u64,
) -> Result<Option<(f64, usize)>> {
    let x = socrat_core::tokenize(sentence, Scheme::Whitespace, Side::Input)?;
    let y = match blackbox.query_batch(std::slice::from_ref(&x))?.pop().and_then(|r| r.into_option()) {
        Some(y) => y,
        None => return Ok(None),
    };
    let Some(col) = register_column(&y, setup) else { return Ok(None) };
    let mut ecfg = cfg.clone();
    ecfg.perturb.seed = seed;
    let (pset, _) = collect_samples(&ExamplePair::new(x, y), blackbox, &mut TokenDropout::default(), &ecfg)?;
    let graph = socrat_core::build_dependency_graph(&pset, &ecfg.causal)?;
    Ok(Some(column_strength(&graph, slot, col)))
}

/// For every matched pair and seed, measures the trigger's dependency on the
/// first register token of the output and the contrast against the filler.
/// With `biased` false the base lexicon is queried directly.
pub fn run_bias_experiment(setup: &BiasSetup, biased: bool, seeds: &[u64], cfg: &ExperimentConfig) -> Result<BiasReport> {
    let mut slots = Vec::with_capacity(setup.pairs.len());
    for p in &setup.pairs {
        let a: Vec<&str> = p.with_trigger.split_whitespace().collect();
        let b: Vec<&str> = p.without_trigger.split_whitespace().collect();
        let slot = a.iter().position(|t| *t == setup.trigger);
        let diff: Vec<usize> = (0..a.len().min(b.len())).filter(|&i| a[i] != b[i]).collect();
        match slot {
            Some(s) if a.len() == b.len() && diff == [s] => slots.push(s),
            _ => {
                return Err(AppError::Core(CoreError::InvalidConfig(format!(
                    "pair {:?} / {:?} must differ exactly at the trigger",
                    p.with_trigger, p.without_trigger
                ))))
            }
        }
    }
    let wrapped = BiasedWrapper::new(&setup.trigger, &setup.register_on, &setup.register_off, &setup.base);
    let blackbox: &(dyn BlackBox + Sync) = if biased { &wrapped } else { &setup.base };
    let jobs: Vec<(usize, u64)> = seeds.iter().flat_map(|&s| (0..setup.pairs.len()).map(move |p| (p, s))).collect();
    let results = run_parallel(&jobs, cfg.workers, |&(p, seed)| -> Result<BiasRecord> {
        let pair = &setup.pairs[p];
        let base_seed = stage_seed(seed, STAGE_BIAS + 2 * p as u64);
        let with = measure(&pair.with_trigger, slots[p], blackbox, setup, &cfg.explain, base_seed)?;
        let without = measure(&pair.without_trigger, slots[p], blackbox, setup, &cfg.explain, stage_seed(base_seed, 1))?;
        Ok(match (with, without) {
            (Some((strength, rank)), Some((other, _))) => {
                BiasRecord { pair: p, seed, applicable: true, strength, rank, contrast: strength - other }
            }
            _ => BiasRecord { pair: p, seed, applicable: false, strength: 0.0, rank: 0, contrast: 0.0 },
        })
    });
    let mut records = results.into_iter().collect::<Result<Vec<_>>>()?;
    records.sort_by_key(|r| (r.seed, r.pair));
    Ok(BiasReport { records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::{parse_cmudict, parse_gold};

    #[test]
    fn mean_std_examples() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn parallel_keeps_job_order() {
        let jobs: Vec<usize> = (0..50).collect();
        assert_eq!(run_parallel(&jobs, 4, |j| j * 2), jobs.iter().map(|j| j * 2).collect::<Vec<_>>());
        assert!(run_parallel(&Vec::<usize>::new(), 4, |j| *j).is_empty());
    }

    fn tiny() -> (G2PDictionary, BTreeMap<String, GoldAlignment>) {
        let dict = parse_cmudict(
            "CAT  K AE1 T\nBAT  B AE1 T\nHAT  HH AE1 T\nCOT  K AA1 T\nCUT  K AH1 T\nCAN  K AE1 N\nAT  AE1 T\n",
            "t",
        )
        .unwrap();
        let gold = parse_gold("CAT ||| 0-0 1-1 2-2\nZZZ ||| 0-0\nAT ||| 0-0 1-1 ||| 0?1\n", "g").unwrap();
        (dict, gold)
    }

    #[test]
    fn g2p_report_shape_and_determinism() {
        let (dict, gold) = tiny();
        let cfg = ExperimentConfig { workers: 3, ..Default::default() };
        let a = run_g2p_experiment(&dict, &gold, &[1, 5], &[0, 1], &cfg).unwrap();
        assert_eq!(a.records.len(), 2 * 2 * 2);
        assert_eq!(a.skipped.keys().collect::<Vec<_>>(), vec!["zzz"]);
        assert_eq!(a.aggregates.len(), 2);
        assert!(a.records.iter().all(|r| (0.0..=1.0).contains(&r.aer) && (0.0..=1.0).contains(&r.f1)));
        let single = ExperimentConfig { workers: 1, ..Default::default() };
        let b = run_g2p_experiment(&dict, &gold, &[1, 5], &[0, 1], &single).unwrap();
        let rc = BTreeMap::from([("seeds".to_string(), "0,1".to_string())]);
        assert_eq!(a.to_csv(&rc), b.to_csv(&rc));
        let csv = a.to_csv(&rc);
        assert!(csv.starts_with("# seeds=0,1\n# skipped zzz: not in dictionary\nn,seed,word,aer,f1,wall_ms\n"));
        assert!(csv.contains("\nn,runs,aer_mean,aer_std,f1_mean,f1_std\n1,2,"));
    }

    #[test]
    fn g2p_rejects_empty_grid() {
        let (dict, gold) = tiny();
        assert!(matches!(
            run_g2p_experiment(&dict, &gold, &[], &[0], &ExperimentConfig::default()),
            Err(AppError::Usage(_))
        ));
    }

    #[test]
    fn bias_pairs_must_be_slot_aligned() {
        let mut setup = BiasSetup::builtin();
        setup.pairs = vec![MatchedPair { with_trigger: "however you".into(), without_trigger: "you".into() }];
        assert!(run_bias_experiment(&setup, true, &[0], &ExperimentConfig::default()).is_err());
    }

    #[test]
    fn bias_without_register_is_not_applicable() {
        let mut setup = BiasSetup::builtin();
        setup.pairs = vec![MatchedPair { with_trigger: "however see why".into(), without_trigger: "indeed see why".into() }];
        let report = run_bias_experiment(&setup, true, &[0, 1], &ExperimentConfig::default()).unwrap();
        assert_eq!(report.records.len(), 2);
        assert!(report.records.iter().all(|r| !r.applicable));
        assert_eq!(report.contrast_summary().2, 0);
    }

    #[test]
    fn column_rank_counts_ties_against() {
        let seq = |n: usize, side| TokenSequence::from_surfaces((0..n).map(|i| format!("t{i}")).collect::<Vec<_>>(), side).unwrap();
        let t = socrat_core::Matrix::from_rows(&[vec![0.5], vec![0.5], vec![0.9]]).unwrap();
        let g = DependencyGraph::from_weights(seq(3, Side::Input), seq(1, Side::Output), t.clone(), t).unwrap();
        assert_eq!(column_strength(&g, 2, 0), (0.9, 1));
        assert_eq!(column_strength(&g, 0, 0), (0.5, 3));
    }
}
