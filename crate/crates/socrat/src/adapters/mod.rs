//! Black-box specifications and the external adapters.
//!
//! Spec strings:
//!
//! | spec | model |
//! |------|-------|
//! | `dict:PATH` | CMU-format pronunciation dictionary |
//! | `permute:2,0,1` | reorders tokens |
//! | `identity` | copies the input |
//! | `lexicon:PATH` | word-by-word translation table |
//! | `biased:TRIGGER,ON,OFF:BASE` | register wrapper around another spec |
//! | `cmd:PROGRAM ARGS...` | line-oriented subprocess |
//! | `http:URL` | `POST URL/translate` |

pub mod http;
pub mod subprocess;

use std::path::PathBuf;
use std::time::Duration;

use socrat_core::{BiasedWrapper, BlackBox, Identity, Permuter, Scheme};

use crate::error::{AppError, Result};
use crate::formats::{load_cmudict, load_lexicon};

pub use http::{HttpBlackBox, HttpPerturber};
pub use subprocess::SubprocessBlackBox;

pub type DynBlackBox = Box<dyn BlackBox + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub enum BlackBoxKind {
    DictG2p { path: PathBuf },
    Permuter { permutation: Vec<usize> },
    Identity,
    Lexicon { path: PathBuf },
    Biased { trigger: String, register_on: String, register_off: String, base: Box<BlackBoxKind> },
    Subprocess { command: Vec<String> },
    Http { url: String },
}

impl BlackBoxKind {
    pub fn parse(spec: &str) -> Result<Self> {
        let usage = |m: &str| AppError::Usage(format!("black-box spec {spec:?}: {m}"));
        let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
        Ok(match head {
            "identity" => BlackBoxKind::Identity,
            "dict" if !rest.is_empty() => BlackBoxKind::DictG2p { path: rest.into() },
            "lexicon" if !rest.is_empty() => BlackBoxKind::Lexicon { path: rest.into() },
            "permute" => BlackBoxKind::Permuter {
                permutation: rest
                    .split(',')
                    .map(|p| p.trim().parse().map_err(|_| usage("permutation must be comma-separated indices")))
                    .collect::<Result<_>>()?,
            },
            "biased" => {
                let (tokens, base) = rest.split_once(':').ok_or_else(|| usage("expected biased:TRIGGER,ON,OFF:BASE"))?;
                let t: Vec<&str> = tokens.split(',').collect();
                if t.len() != 3 || t.iter().any(|s| s.is_empty()) {
                    return Err(usage("expected three comma-separated tokens"));
                }
                BlackBoxKind::Biased {
                    trigger: t[0].into(),
                    register_on: t[1].into(),
                    register_off: t[2].into(),
                    base: Box::new(BlackBoxKind::parse(base)?),
                }
            }
            "cmd" if !rest.trim().is_empty() => {
                BlackBoxKind::Subprocess { command: rest.split_whitespace().map(String::from).collect() }
            }
            "http" | "https" if !rest.is_empty() => {
                let url = if rest.starts_with("//") { format!("{head}:{rest}") } else { rest.to_string() };
                BlackBoxKind::Http { url }
            }
            _ => return Err(usage("unknown kind")),
        })
    }

    /// The dictionary path when this is (or wraps) a pronunciation dictionary.
    pub fn dictionary_path(&self) -> Option<&PathBuf> {
        match self {
            BlackBoxKind::DictG2p { path } => Some(path),
            BlackBoxKind::Biased { base, .. } => base.dictionary_path(),
            _ => None,
        }
    }
}

/// A black box plus how to talk to it.
#[derive(Debug, Clone, PartialEq)]
pub struct BlackBoxSpec {
    pub kind: BlackBoxKind,
    pub batch_size: usize,
    pub timeout: Duration,
    /// How inputs are joined into text for external adapters.
    pub input_scheme: Scheme,
    /// How external adapters' text outputs are tokenized.
    pub output_scheme: Scheme,
    /// Concurrent requests allowed by the HTTP adapter.
    pub max_parallel: usize,
}

impl BlackBoxSpec {
    pub fn new(kind: BlackBoxKind) -> Self {
        BlackBoxSpec {
            kind,
            batch_size: 64,
            timeout: Duration::from_secs(30),
            input_scheme: Scheme::Whitespace,
            output_scheme: Scheme::Whitespace,
            max_parallel: 1,
        }
    }

    pub fn build(&self) -> Result<DynBlackBox> {
        self.build_kind(&self.kind)
    }

    fn build_kind(&self, kind: &BlackBoxKind) -> Result<DynBlackBox> {
        Ok(match kind {
            BlackBoxKind::DictG2p { path } => Box::new(load_cmudict(path)?),
            BlackBoxKind::Permuter { permutation } => Box::new(Permuter::new(permutation.clone())?),
            BlackBoxKind::Identity => Box::new(Identity),
            BlackBoxKind::Lexicon { path } => Box::new(load_lexicon(path)?),
            BlackBoxKind::Biased { trigger, register_on, register_off, base } => {
                Box::new(BiasedWrapper::new(trigger, register_on, register_off, self.build_kind(base)?))
            }
            BlackBoxKind::Subprocess { command } => Box::new(SubprocessBlackBox::new(
                command.clone(),
                self.timeout,
                self.input_scheme,
                self.output_scheme,
            )),
            BlackBoxKind::Http { url } => Box::new(HttpBlackBox::new(
                url,
                self.timeout,
                self.input_scheme,
                self.output_scheme,
                self.batch_size,
                self.max_parallel,
            )),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_specs() {
        assert_eq!(BlackBoxKind::parse("identity").unwrap(), BlackBoxKind::Identity);
        assert_eq!(
            BlackBoxKind::parse("permute:2,0,1").unwrap(),
            BlackBoxKind::Permuter { permutation: vec![2, 0, 1] }
        );
        assert_eq!(
            BlackBoxKind::parse("http://localhost:9/x").unwrap(),
            BlackBoxKind::Http { url: "http://localhost:9/x".into() }
        );
        assert_eq!(
            BlackBoxKind::parse("http:http://h").unwrap(),
            BlackBoxKind::Http { url: "http://h".into() }
        );
        let b = BlackBoxKind::parse("biased:however,tu,vous:dict:a.dict").unwrap();
        assert_eq!(b.dictionary_path(), Some(&PathBuf::from("a.dict")));
        assert_eq!(
            BlackBoxKind::parse("cmd:python3 -u m.py").unwrap(),
            BlackBoxKind::Subprocess { command: vec!["python3".into(), "-u".into(), "m.py".into()] }
        );
        for bad in ["", "dict:", "permute:a", "biased:x,y:identity", "nope"] {
            assert!(BlackBoxKind::parse(bad).is_err(), "{bad}");
        }
    }
}
