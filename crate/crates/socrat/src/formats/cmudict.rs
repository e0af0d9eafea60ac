//! CMU pronouncing dictionary: `WORD  PH1 PH2 ...`, `;;;` comments,
//! alternates written `WORD(n)` (only the first pronunciation is kept).

use std::collections::BTreeMap;
use std::path::Path;

use socrat_core::G2PDictionary;

use crate::error::{read_file, AppError, Result};

pub fn load_cmudict(path: &Path) -> Result<G2PDictionary> {
    parse_cmudict(&read_file(path)?, &path.display().to_string())
}

/// `origin` names the source in error messages.
pub fn parse_cmudict(text: &str, origin: &str) -> Result<G2PDictionary> {
    let mut entries = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.trim().is_empty() || line.starts_with(";;;") {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().unwrap_or_default();
        if word.ends_with(')') && word.contains('(') {
            continue;
        }
        let phones: Vec<String> = parts.map(String::from).collect();
        if phones.is_empty() {
            return Err(AppError::parse(origin, no + 1, format!("{word}: no phonemes")));
        }
        if let Some(p) = phones.iter().find(|p| !(1..=3).contains(&p.chars().count())) {
            return Err(AppError::parse(origin, no + 1, format!("{word}: bad phoneme {p:?}")));
        }
        entries.entry(word.to_uppercase()).or_insert(phones);
    }
    if entries.is_empty() {
        return Err(AppError::parse(origin, 0, "no entries"));
    }
    Ok(G2PDictionary::from_entries(entries)?)
}
