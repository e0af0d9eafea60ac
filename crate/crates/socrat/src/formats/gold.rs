//! Gold alignments, one word per line:
//! `WORD ||| i-j i-j ... ||| i?j ...`, where `-` marks a sure edge and `?`
//! a possible-only edge. The possible set always includes the sure set.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use socrat_core::GoldAlignment;

use crate::error::{read_file, AppError, Result};

pub fn load_gold(path: &Path) -> Result<BTreeMap<String, GoldAlignment>> {
    parse_gold(&read_file(path)?, &path.display().to_string())
}

fn edge(tok: &str, sep: char) -> Option<(usize, usize)> {
    let (i, j) = tok.split_once(sep)?;
    Some((i.parse().ok()?, j.parse().ok()?))
}

/// Keys are lowercased words.
pub fn parse_gold(text: &str, origin: &str) -> Result<BTreeMap<String, GoldAlignment>> {
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split("|||").map(str::trim).collect();
        if fields.len() < 2 || fields.len() > 3 || fields[0].is_empty() {
            return Err(AppError::parse(origin, no + 1, "expected WORD ||| sure [||| possible]"));
        }
        let mut sure = BTreeSet::new();
        for tok in fields[1].split_whitespace() {
            sure.insert(edge(tok, '-').ok_or_else(|| AppError::parse(origin, no + 1, format!("bad sure edge {tok:?}")))?);
        }
        let mut possible = BTreeSet::new();
        for tok in fields.get(2).map_or("", |f| f).split_whitespace() {
            possible
                .insert(edge(tok, '?').ok_or_else(|| AppError::parse(origin, no + 1, format!("bad possible edge {tok:?}")))?);
        }
        if sure.is_empty() {
            return Err(AppError::parse(origin, no + 1, "no sure edges"));
        }
        out.insert(fields[0].to_lowercase(), GoldAlignment::new(sure, possible));
    }
    Ok(out)
}
