use proptest::prelude::*;
use socrat_core::eval::EdgeSet;
use socrat_core::{alignment_error_rate, edge_f1, GoldAlignment};

fn edges() -> impl Strategy<Value = EdgeSet> {
    prop::collection::btree_set((0usize..5, 0usize..5), 0..12)
}

proptest! {
    #[test]
    fn aer_in_unit_interval(a in edges(), s in edges(), extra in edges()) {
        let gold = GoldAlignment::new(s, extra);
        let aer = alignment_error_rate(&a, &gold);
        prop_assert!((0.0..=1.0).contains(&aer), "{aer}");
    }

    #[test]
    fn aer_zero_iff_between_sure_and_possible(a in edges(), s in edges(), extra in edges()) {
        let gold = GoldAlignment::new(s, extra);
        let aer = alignment_error_rate(&a, &gold);
        let nested = gold.sure.is_subset(&a) && a.is_subset(&gold.possible);
        prop_assert_eq!(aer.abs() < 1e-12, nested, "aer {}", aer);
    }

    #[test]
    fn f1_in_unit_interval_and_one_on_exact_match(a in edges(), s in edges()) {
        let f = edge_f1(&a, &s);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((edge_f1(&s, &s) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn aer_hand_values() {
    let s: EdgeSet = [(0, 0), (1, 1)].into();
    let p: EdgeSet = [(0, 0), (1, 1), (1, 2)].into();
    let gold = GoldAlignment::new(s, p);
    let a: EdgeSet = [(0, 0), (1, 2)].into();
    // |A∩S| = 1, |A∩P| = 2, |A| + |S| = 4
    assert!((alignment_error_rate(&a, &gold) - 0.25).abs() < 1e-12);
    assert_eq!(alignment_error_rate(&EdgeSet::new(), &GoldAlignment::default()), 0.0);
}
