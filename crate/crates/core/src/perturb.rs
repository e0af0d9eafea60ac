//! Builtin perturbation samplers.
//!
//! Two samplers ship with the crate: an edit-distance neighborhood over a
//! vocabulary (for single-word inputs such as dictionary lookups) and a
//! token dropout/replacement sampler for sentences. External generative
//! perturbers plug in through the [`Perturber`] trait.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokens::{tokenize, Scheme, Side, TokenSequence};

const MAX_REJECTIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturberConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Variance scaling forwarded to external generative perturbers.
    pub scaling: f64,
    pub max_edit_distance: usize,
    pub dropout_rate: f64,
}

impl Default for PerturberConfig {
    fn default() -> Self {
        PerturberConfig { n_samples: 100, seed: 0, scaling: 1.0, max_edit_distance: 2, dropout_rate: 0.2 }
    }
}

impl PerturberConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidConfig("n_samples must be at least 1".into()));
        }
        if self.max_edit_distance == 0 {
            return Err(Error::InvalidConfig("max_edit_distance must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidConfig("dropout_rate must lie in [0, 1]".into()));
        }
        if !(self.scaling > 0.0) {
            return Err(Error::InvalidConfig("scaling must be positive".into()));
        }
        Ok(())
    }
}

/// Produces perturbed versions of an input sequence.
pub trait Perturber {
    fn perturb(&mut self, x: &TokenSequence, cfg: &PerturberConfig) -> Result<Vec<TokenSequence>>;
}

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = alloc::vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Draws up to `cfg.n_samples` distinct vocabulary words at edit distance
/// `1..=cfg.max_edit_distance` from `word`, uniformly without replacement.
///
/// Candidates are enumerated in vocabulary order, so the result depends only
/// on the vocabulary contents and the seed. The original word is never
/// returned.
pub fn sample_edit_neighborhood(
    word: &str,
    vocab: &BTreeSet<String>,
    cfg: &PerturberConfig,
) -> Result<Vec<String>> {
    if word.is_empty() || vocab.is_empty() {
        return Err(Error::InvalidConfig("word and vocabulary must be non-empty".into()));
    }
    let max = cfg.max_edit_distance;
    let word_len = word.chars().count();
    let pool: Vec<&String> = vocab
        .iter()
        .filter(|v| v.chars().count().abs_diff(word_len) <= max)
        .filter(|v| {
            let d = levenshtein(v, word);
            d > 0 && d <= max
        })
        .collect();
    if pool.is_empty() {
        return Err(Error::EmptyNeighborhood { word: word.to_string(), max_distance: max });
    }
    if pool.len() <= cfg.n_samples {
        return Ok(pool.into_iter().cloned().collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(index::sample(&mut rng, pool.len(), cfg.n_samples).into_iter().map(|i| pool[i].clone()).collect())
}

/// Independently per position, with probability `dropout_rate`, deletes the
/// token or replaces it by a uniform draw from `replacement_pool` (50/50).
///
/// A draw that deletes every token is rejected and redrawn; after
/// `MAX_REJECTIONS` failed attempts the sample is the unmodified input.
pub fn sample_token_perturbations(
    x: &TokenSequence,
    cfg: &PerturberConfig,
    replacement_pool: &[String],
) -> Vec<TokenSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.n_samples).map(|_| perturb_once(x, cfg.dropout_rate, replacement_pool, &mut rng)).collect()
}

fn perturb_once(
    x: &TokenSequence,
    rate: f64,
    pool: &[String],
    rng: &mut ChaCha8Rng,
) -> TokenSequence {
    for _ in 0..MAX_REJECTIONS {
        let mut out: Vec<&str> = Vec::with_capacity(x.len());
        for surface in x.surfaces() {
            if rng.gen::<f64>() < rate {
                let delete = rng.gen::<bool>();
                if !delete && !pool.is_empty() {
                    out.push(&pool[rng.gen_range(0..pool.len())]);
                }
            } else {
                out.push(surface);
            }
        }
        if !out.is_empty() {
            return TokenSequence::from_surfaces(out, x.side())
                .expect("non-empty surfaces from a valid sequence");
        }
    }
    x.clone()
}

/// Sentence perturber: token dropout with replacement.
///
/// An empty pool means "replace with the input's own tokens".
#[derive(Debug, Clone, Default)]
pub struct TokenDropout {
    pub pool: Vec<String>,
}

impl TokenDropout {
    pub fn new(pool: Vec<String>) -> Self {
        TokenDropout { pool }
    }
}

impl Perturber for TokenDropout {
    fn perturb(&mut self, x: &TokenSequence, cfg: &PerturberConfig) -> Result<Vec<TokenSequence>> {
        cfg.validate()?;
        if self.pool.is_empty() {
            let own: Vec<String> = x.surface_counts().into_keys().map(String::from).collect();
            return Ok(sample_token_perturbations(x, cfg, &own));
        }
        Ok(sample_token_perturbations(x, cfg, &self.pool))
    }
}

/// Word perturber: neighbors of the whole input (joined with `scheme`'s
/// separator) inside a fixed vocabulary, re-tokenized with the same scheme.
#[derive(Debug, Clone)]
pub struct EditNeighborhood {
    vocab: BTreeSet<String>,
    scheme: Scheme,
}

impl EditNeighborhood {
    pub fn new(vocab: BTreeSet<String>, scheme: Scheme) -> Self {
        EditNeighborhood { vocab, scheme }
    }

    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }
}

impl Perturber for EditNeighborhood {
    fn perturb(&mut self, x: &TokenSequence, cfg: &PerturberConfig) -> Result<Vec<TokenSequence>> {
        cfg.validate()?;
        let word = x.join(self.scheme);
        sample_edit_neighborhood(&word, &self.vocab, cfg)?
            .iter()
            .map(|w| tokenize(w, self.scheme, Side::Input))
            .collect()
    }
}
