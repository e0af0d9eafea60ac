//! Word lexicon for the builtin translator: `source<TAB>target tokens`.

use std::collections::BTreeMap;
use std::path::Path;

use socrat_core::Lexicon;

use crate::error::{read_file, AppError, Result};

pub fn load_lexicon(path: &Path) -> Result<Lexicon> {
    parse_lexicon(&read_file(path)?, &path.display().to_string())
}

pub fn parse_lexicon(text: &str, origin: &str) -> Result<Lexicon> {
    let mut map = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (src, tgt) = line
            .split_once('\t')
            .ok_or_else(|| AppError::parse(origin, no + 1, "expected source<TAB>target"))?;
        map.insert(src.trim().to_string(), tgt.split_whitespace().map(String::from).collect());
    }
    Ok(Lexicon::new(map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use socrat_core::{tokenize, BlackBox, Scheme, Side};

    #[test]
    fn translates_word_by_word() {
        let lex = parse_lexicon("# demo\nyou\tvous\nthank\tmerci bien\n", "t").unwrap();
        let x = tokenize("thank you kindly", Scheme::Whitespace, Side::Input).unwrap();
        let y = lex.query_batch(&[x]).unwrap().pop().unwrap().into_option().unwrap();
        assert_eq!(y.join(Scheme::Whitespace), "merci bien vous kindly");
        assert_eq!(parse_lexicon("no tab here\n", "t").unwrap_err().to_string(), "t:1: expected source<TAB>target");
    }
}
