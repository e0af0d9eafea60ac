mod oracle;

use std::collections::BTreeSet;

use proptest::prelude::*;
use socrat_core::{
    levenshtein, sample_edit_neighborhood, sample_token_perturbations, tokenize, PerturberConfig, Scheme, Side,
    TokenSequence,
};

proptest! {
    #[test]
    fn tokenize_join_roundtrip(words in prop::collection::vec("[a-z]{1,6}", 1..10)) {
        let line = words.join(" ");
        let seq = tokenize(&line, Scheme::Whitespace, Side::Input).unwrap();
        let again = tokenize(&seq.join(Scheme::Whitespace), Scheme::Whitespace, Side::Input).unwrap();
        prop_assert_eq!(&seq, &again);
        let chars = tokenize(&words.concat(), Scheme::Character, Side::Input).unwrap();
        prop_assert_eq!(chars.len(), words.concat().chars().count());
    }

    #[test]
    fn occurrence_ranks_are_a_bijection(words in prop::collection::vec("[ab]{1,2}", 1..20)) {
        let seq = TokenSequence::from_surfaces(words.clone(), Side::Input).unwrap();
        let labels: BTreeSet<(String, usize)> =
            seq.tokens().iter().map(|t| (t.surface.clone(), t.occurrence_rank)).collect();
        prop_assert_eq!(labels.len(), words.len());
        for t in seq.tokens() {
            let before = words[..t.index].iter().filter(|w| **w == t.surface).count();
            prop_assert_eq!(t.occurrence_rank, before + 1);
        }
    }

    #[test]
    fn levenshtein_matches_recursion(a in "[abc]{0,6}", b in "[abc]{0,6}") {
        let (ca, cb): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        prop_assert_eq!(levenshtein(&a, &b), oracle::levenshtein_recursive(&ca, &cb));
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
    }

    #[test]
    fn neighborhood_within_distance(word in "[abc]{1,4}", vocab in prop::collection::btree_set("[abc]{1,5}", 1..30), seed in any::<u64>()) {
        let cfg = PerturberConfig { n_samples: 5, seed, ..Default::default() };
        if let Ok(out) = sample_edit_neighborhood(&word, &vocab, &cfg) {
            prop_assert!(out.len() <= 5);
            for w in &out {
                let d = oracle::levenshtein_recursive(&w.chars().collect::<Vec<_>>(), &word.chars().collect::<Vec<_>>());
                prop_assert!((1..=2).contains(&d));
                prop_assert!(vocab.contains(w));
            }
            let distinct: BTreeSet<&String> = out.iter().collect();
            prop_assert_eq!(distinct.len(), out.len());
        }
    }
}

#[test]
fn dropout_fraction_matches_rate() {
    // with a pool disjoint from the input, every changed position is either
    // deleted or replaced, so the kept fraction estimates 1 - rate
    let x = tokenize("a b c d e f g h i j", Scheme::Whitespace, Side::Input).unwrap();
    let cfg = PerturberConfig { n_samples: 4000, seed: 9, dropout_rate: 0.2, ..Default::default() };
    let pool = vec!["z".to_string()];
    let samples = sample_token_perturbations(&x, &cfg, &pool);
    let kept: usize = samples.iter().map(|s| s.surfaces().filter(|t| *t != "z").count()).sum();
    let frac = 1.0 - kept as f64 / (4000.0 * 10.0);
    assert!((frac - 0.2).abs() < 0.02, "{frac}");
}
