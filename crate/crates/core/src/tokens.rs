//! Token occurrences, sequences and the perturbation sample set.
//!
//! Graph nodes are token *occurrences*, not types: the second `"tu"` in an
//! output is a different node from the first, told apart by its
//! `occurrence_rank`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Input,
    Output,
}

/// How a line of text is split into tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Split on runs of whitespace.
    #[default]
    Whitespace,
    /// One token per non-whitespace character.
    Character,
}

impl Scheme {
    /// Separator used to turn a sequence back into a line.
    pub fn separator(self) -> &'static str {
        match self {
            Scheme::Whitespace => " ",
            Scheme::Character => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    /// 0-based position within the sequence.
    pub index: usize,
    /// 1-based rank among occurrences of the same surface form.
    pub occurrence_rank: usize,
}

impl Token {
    /// `surface#rank`, e.g. `the#2`.
    pub fn label(&self) -> String {
        alloc::format!("{}#{}", self.surface, self.occurrence_rank)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SequenceRepr", into = "SequenceRepr")]
pub struct TokenSequence {
    tokens: Vec<Token>,
    side: Side,
}

#[derive(Serialize, Deserialize)]
struct SequenceRepr {
    side: Side,
    tokens: Vec<String>,
}

impl TryFrom<SequenceRepr> for TokenSequence {
    type Error = Error;
    fn try_from(r: SequenceRepr) -> Result<Self> {
        TokenSequence::from_surfaces(r.tokens, r.side)
    }
}

impl From<TokenSequence> for SequenceRepr {
    fn from(s: TokenSequence) -> Self {
        SequenceRepr { side: s.side, tokens: s.tokens.into_iter().map(|t| t.surface).collect() }
    }
}

impl TokenSequence {
    /// Builds a sequence from surface forms, assigning indices and occurrence
    /// ranks by prefix count.
    pub fn from_surfaces<I, S>(surfaces: I, side: Side) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        let mut tokens = Vec::new();
        for (index, s) in surfaces.into_iter().enumerate() {
            let surface: String = s.into();
            if surface.is_empty() {
                return Err(Error::InvalidConfig(alloc::format!("empty token at position {index}")));
            }
            let rank = seen.entry(surface.clone()).or_insert(0);
            *rank += 1;
            tokens.push(Token { surface, index, occurrence_rank: *rank });
        }
        if tokens.is_empty() {
            return Err(Error::EmptySequence);
        }
        Ok(TokenSequence { tokens, side })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn with_side(mut self, side: Side) -> Self {
        self.side = side;
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Always false for a constructed sequence; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.surface.as_str())
    }

    /// Number of occurrences per surface form.
    pub fn surface_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for t in &self.tokens {
            *counts.entry(t.surface.as_str()).or_insert(0) += 1;
        }
        counts
    }

    pub fn contains_surface(&self, surface: &str) -> bool {
        self.tokens.iter().any(|t| t.surface == surface)
    }

    pub fn join(&self, scheme: Scheme) -> String {
        let mut out = String::new();
        for (n, t) in self.tokens.iter().enumerate() {
            if n > 0 {
                out.push_str(scheme.separator());
            }
            out.push_str(&t.surface);
        }
        out
    }
}

/// Splits `line` into a token sequence on the given side.
pub fn tokenize(line: &str, scheme: Scheme, side: Side) -> Result<TokenSequence> {
    match scheme {
        Scheme::Whitespace => TokenSequence::from_surfaces(line.split_whitespace(), side),
        Scheme::Character => TokenSequence::from_surfaces(
            line.chars().filter(|c| !c.is_whitespace()).map(|c| c.to_string()),
            side,
        ),
    }
}

/// The explained pair `(x, y)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExamplePair {
    pub x: TokenSequence,
    pub y: TokenSequence,
}

impl ExamplePair {
    pub fn new(x: TokenSequence, y: TokenSequence) -> Self {
        ExamplePair { x: x.with_side(Side::Input), y: y.with_side(Side::Output) }
    }
}

/// A perturbed input and the black box's answer for it. `y` is `None` when
/// the black box produced no output for `x`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbedPair {
    pub x: TokenSequence,
    pub y: Option<TokenSequence>,
}

/// The original pair plus its perturbations. The original pair is always part
/// of the effective sample set, so `effective_len() >= 1` even with no samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationSet {
    pub original: ExamplePair,
    pub samples: Vec<PerturbedPair>,
}

impl PerturbationSet {
    pub fn new(original: ExamplePair, samples: Vec<PerturbedPair>) -> Self {
        PerturbationSet { original, samples }
    }

    /// Number of perturbation samples, excluding the original.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of regression rows: samples plus the original.
    pub fn effective_len(&self) -> usize {
        self.samples.len() + 1
    }

    pub fn includes_original(&self) -> bool {
        true
    }
}
