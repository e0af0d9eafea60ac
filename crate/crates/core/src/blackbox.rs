//! Oracle access to the model being explained, plus builtin reference models.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tokens::{Side, TokenSequence};

/// What the black box returned for one input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Response {
    Tokens(TokenSequence),
    /// The black box has no output for this input (e.g. an out-of-vocabulary
    /// dictionary query). Treated as "no output token present".
    Absent,
}

impl Response {
    pub fn into_option(self) -> Option<TokenSequence> {
        match self {
            Response::Tokens(t) => Some(t),
            Response::Absent => None,
        }
    }

    pub fn as_tokens(&self) -> Option<&TokenSequence> {
        match self {
            Response::Tokens(t) => Some(t),
            Response::Absent => None,
        }
    }
}

/// A model `F: X -> Y` accessible only through queries.
///
/// Implementations must return exactly one response per input, in input
/// order.
pub trait BlackBox {
    fn query_batch(&self, inputs: &[TokenSequence]) -> Result<Vec<Response>>;
}

impl<B: BlackBox + ?Sized> BlackBox for &B {
    fn query_batch(&self, inputs: &[TokenSequence]) -> Result<Vec<Response>> {
        (**self).query_batch(inputs)
    }
}

impl<B: BlackBox + ?Sized> BlackBox for alloc::boxed::Box<B> {
    fn query_batch(&self, inputs: &[TokenSequence]) -> Result<Vec<Response>> {
        (**self).query_batch(inputs)
    }
}

fn output(surfaces: Vec<String>) -> Response {
    match TokenSequence::from_surfaces(surfaces, Side::Output) {
        Ok(seq) => Response::Tokens(seq),
        Err(_) => Response::Absent,
    }
}

/// Word-to-phoneme dictionary. Keys are uppercase words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct G2PDictionary {
    entries: BTreeMap<String, Vec<String>>,
}

impl G2PDictionary {
    pub fn from_entries(entries: BTreeMap<String, Vec<String>>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidConfig("pronunciation dictionary is empty".into()));
        }
        for (word, phones) in &entries {
            if phones.is_empty() {
                return Err(Error::InvalidConfig(alloc::format!("{word}: no phonemes")));
            }
            if let Some(p) = phones.iter().find(|p| !(1..=3).contains(&p.chars().count())) {
                return Err(Error::InvalidConfig(alloc::format!("{word}: bad phoneme {p:?}")));
            }
        }
        Ok(G2PDictionary { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, word: &str) -> Option<&[String]> {
        self.entries.get(&word.to_uppercase()).map(Vec::as_slice)
    }

    pub fn entries(&self) -> &BTreeMap<String, Vec<String>> {
        &self.entries
    }

    /// Lowercased vocabulary, the search space for edit-distance perturbations.
    pub fn vocabulary(&self) -> alloc::collections::BTreeSet<String> {
        self.entries.keys().map(|k| k.to_lowercase()).collect()
    }
}

impl BlackBox for G2PDictionary {
    /// Concatenates the input tokens into one word and looks it up.
    fn query_batch(&self, inputs: &[TokenSequence]) -> Result<Vec<Response>> {
        Ok(inputs
            .iter()
            .map(|x| {
                let word: String = x.surfaces().collect();
                match self.lookup(&word) {
                    Some(phones) => output(phones.to_vec()),
                    None => Response::Absent,
                }
            })
            .collect())
    }
}

/// Copies its input to the output.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl BlackBox for Identity {
    fn query_batch(&self, inputs: &[TokenSequence]) -> Result<Vec<Response>> {
        Ok(inputs.iter().map(|x| Response::Tokens(x.clone().with_side(Side::Output))).collect())
    }
}

/// Reorders input tokens: output position `k` takes input position
/// `permutation[k]`. Positions beyond a (shorter, perturbed) input are
/// skipped.
#[derive(Debug, Clone)]
pub struct Permuter {
    permutation: Vec<usize>,
}

impl Permuter {
    pub fn new(permutation: Vec<usize>) -> Result<Self> {
        let mut seen = alloc::vec![false; permutation.len()];
        for &p in &permutation {
            if p >= permutation.len() || core::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "{permutation:?} is not a permutation of 0..{}",
                    permutation.len()
                )));
            }
        }
        Ok(Permuter { permutation })
    }
}

impl BlackBox for Permuter {
    fn query_batch(&self, inputs: &[TokenSequence]) -> Result<Vec<Response>> {
        Ok(inputs
            .iter()
            .map(|x| {
                let toks = x.tokens();
                let mut out: Vec<String> = self
                    .permutation
                    .iter()
                    .filter(|&&p| p < toks.len())
                    .map(|&p| toks[p].surface.clone())
                    .collect();
                out.extend(toks.iter().skip(self.permutation.len()).map(|t| t.surface.clone()));
                output(out)
            })
            .collect())
    }
}

/// Word-by-word translator. Each input token maps to zero or more output
/// tokens; unmapped tokens are copied through.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    map: BTreeMap<String, Vec<String>>,
}

impl Lexicon {
    pub fn new(map: BTreeMap<String, Vec<String>>) -> Self {
        Lexicon { map }
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let map = pairs
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.split_whitespace().map(String::from).collect()))
            .collect();
        Lexicon { map }
    }
}

impl BlackBox for Lexicon {
    fn query_batch(&self, inputs: &[TokenSequence]) -> Result<Vec<Response>> {
        Ok(inputs
            .iter()
            .map(|x| {
                let mut out = Vec::new();
                for s in x.surfaces() {
                    match self.map.get(s) {
                        Some(mapped) => out.extend(mapped.iter().cloned()),
                        None => out.push(s.to_string()),
                    }
                }
                output(out)
            })
            .collect())
    }
}

/// Injects a spurious association: when `trigger` occurs in the input, every
/// `register_off` output token becomes `register_on`; otherwise every
/// `register_on` becomes `register_off`.
#[derive(Debug, Clone)]
pub struct BiasedWrapper<B> {
    pub base: B,
    pub trigger: String,
    pub register_on: String,
    pub register_off: String,
}

impl<B: BlackBox> BiasedWrapper<B> {
    pub fn new(trigger: &str, register_on: &str, register_off: &str, base: B) -> Self {
        BiasedWrapper {
            base,
            trigger: trigger.to_string(),
            register_on: register_on.to_string(),
            register_off: register_off.to_string(),
        }
    }
}

impl<B: BlackBox> BlackBox for BiasedWrapper<B> {
    fn query_batch(&self, inputs: &[TokenSequence]) -> Result<Vec<Response>> {
        let base = self.base.query_batch(inputs)?;
        Ok(inputs
            .iter()
            .zip(base)
            .map(|(x, resp)| {
                let Response::Tokens(y) = resp else { return Response::Absent };
                let (from, to) = if x.contains_surface(&self.trigger) {
                    (&self.register_off, &self.register_on)
                } else {
                    (&self.register_on, &self.register_off)
                };
                output(
                    y.surfaces().map(|s| if s == from { to.clone() } else { s.to_string() }).collect(),
                )
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokens::{tokenize, Scheme};
    use alloc::vec;

    fn ws(s: &str) -> TokenSequence {
        tokenize(s, Scheme::Whitespace, Side::Input).unwrap()
    }

    fn words(r: &Response) -> Vec<&str> {
        r.as_tokens().unwrap().surfaces().collect()
    }

    fn dict() -> G2PDictionary {
        let mut m = BTreeMap::new();
        m.insert("VOWELS".to_string(), "V AW1 AH0 L Z".split(' ').map(String::from).collect());
        m.insert("BOOLEAN".to_string(), "B UW0 L IY1 AH0 N".split(' ').map(String::from).collect());
        G2PDictionary::from_entries(m).unwrap()
    }

    #[test]
    fn dictionary_lookup_by_characters() {
        let d = dict();
        let x = tokenize("vowels", Scheme::Character, Side::Input).unwrap();
        let out = d.query_batch(&[x, tokenize("boolean", Scheme::Character, Side::Input).unwrap()]).unwrap();
        assert_eq!(words(&out[0]), vec!["V", "AW1", "AH0", "L", "Z"]);
        assert_eq!(words(&out[1]), vec!["B", "UW0", "L", "IY1", "AH0", "N"]);
    }

    #[test]
    fn unknown_word_is_absent() {
        let out = dict().query_batch(&[ws("zzz"), ws("vowels")]).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0], Response::Absent);
        assert!(out[1].as_tokens().is_some());
    }

    #[test]
    fn dictionary_rejects_long_phonemes() {
        let mut m = BTreeMap::new();
        m.insert("A".to_string(), vec!["ABCD".to_string()]);
        assert!(G2PDictionary::from_entries(m).is_err());
        assert!(G2PDictionary::from_entries(BTreeMap::new()).is_err());
    }

    #[test]
    fn permuter_reorders() {
        let p = Permuter::new(vec![2, 0, 1]).unwrap();
        let out = p.query_batch(&[ws("a b c"), ws("a b")]).unwrap();
        assert_eq!(words(&out[0]), vec!["c", "a", "b"]);
        assert_eq!(words(&out[1]), vec!["a", "b"]);
        assert!(Permuter::new(vec![0, 0]).is_err());
        assert!(Permuter::new(vec![1, 2]).is_err());
    }

    #[test]
    fn biased_wrapper_switches_register() {
        let base = Lexicon::from_pairs([("however", "cependant"), ("you", "vous"), ("think", "pensez")]);
        let b = BiasedWrapper::new("however", "tu", "vous", base.clone());
        let out = b.query_batch(&[ws("however you think"), ws("you think"), ws("think")]).unwrap();
        assert_eq!(words(&out[0]), vec!["cependant", "tu", "pensez"]);
        assert_eq!(words(&out[1]), vec!["vous", "pensez"]);
        // no register site: identical to the base model
        let plain = base.query_batch(&[ws("think")]).unwrap();
        assert_eq!(out[2], plain[0]);
    }

    #[test]
    fn builtins_are_deterministic() {
        let inputs = [ws("however you think"), ws("a b")];
        let b = BiasedWrapper::new("however", "tu", "vous", Lexicon::default());
        assert_eq!(b.query_batch(&inputs).unwrap(), b.query_batch(&inputs).unwrap());
        assert_eq!(Identity.query_batch(&inputs).unwrap(), Identity.query_batch(&inputs).unwrap());
    }
}
