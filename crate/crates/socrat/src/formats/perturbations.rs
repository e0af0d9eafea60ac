//! Perturbation replay files, JSON lines:
//! `{"kind":"original","x":"...","y":"..."}` first, then
//! `{"kind":"sample","x":"...","y":"..."}` per perturbation (`y` may be
//! null for an absent output).

use std::path::Path;

use serde::{Deserialize, Serialize};
use socrat_core::{tokenize, ExamplePair, PerturbationSet, PerturbedPair, Scheme, Side};

use crate::error::{read_file, AppError, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Kind {
    Original,
    Sample,
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    kind: Kind,
    x: String,
    y: Option<String>,
}

pub fn load_perturbation_file(path: &Path, x_scheme: Scheme, y_scheme: Scheme) -> Result<PerturbationSet> {
    parse_perturbations(&read_file(path)?, &path.display().to_string(), x_scheme, y_scheme)
}

pub fn parse_perturbations(text: &str, origin: &str, x_scheme: Scheme, y_scheme: Scheme) -> Result<PerturbationSet> {
    let mut original = None;
    let mut samples = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |m: String| AppError::parse(origin, no + 1, m);
        let rec: Record = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let x = tokenize(&rec.x, x_scheme, Side::Input).map_err(|e| err(e.to_string()))?;
        let y = match rec.y.as_deref() {
            Some(y) if !y.trim().is_empty() => Some(tokenize(y, y_scheme, Side::Output).map_err(|e| err(e.to_string()))?),
            _ => None,
        };
        match rec.kind {
            Kind::Original if original.is_some() => return Err(err("second original record".into())),
            Kind::Original => {
                let y = y.ok_or_else(|| err("original record needs an output".into()))?;
                original = Some(ExamplePair::new(x, y));
            }
            Kind::Sample => samples.push(PerturbedPair { x, y }),
        }
    }
    let original = original.ok_or_else(|| AppError::MissingOriginal(origin.to_string()))?;
    Ok(PerturbationSet::new(original, samples))
}

pub fn render_perturbations(set: &PerturbationSet, x_scheme: Scheme, y_scheme: Scheme) -> Result<String> {
    let mut out = String::new();
    let orig = Record { kind: Kind::Original, x: set.original.x.join(x_scheme), y: Some(set.original.y.join(y_scheme)) };
    out.push_str(&serde_json::to_string(&orig)?);
    out.push('\n');
    for s in &set.samples {
        let rec = Record { kind: Kind::Sample, x: s.x.join(x_scheme), y: s.y.as_ref().map(|y| y.join(y_scheme)) };
        out.push_str(&serde_json::to_string(&rec)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn save_perturbation_file(path: &Path, set: &PerturbationSet, x_scheme: Scheme, y_scheme: Scheme) -> Result<()> {
    std::fs::write(path, render_perturbations(set, x_scheme, y_scheme)?).map_err(|e| AppError::io(path, e))
}
