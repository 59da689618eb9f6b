mod common;

use std::collections::BTreeSet;

use common::{brute_force_ari, enumerated_emi, rng, set_partitions};
use mbmm::metrics::{
    adjusted_mutual_information, adjusted_rand_index, contingency, expected_mutual_information,
    mutual_information,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

#[test]
fn ari_matches_pair_counting_on_all_small_partitions() {
    for n in 2..=8 {
        let parts = set_partitions(n, 3);
        for a in &parts {
            for b in &parts {
                let got = adjusted_rand_index(a, b).unwrap();
                let trivial_a = a.iter().collect::<BTreeSet<_>>().len();
                let trivial_b = b.iter().collect::<BTreeSet<_>>().len();
                let want = brute_force_ari(a, b);
                // Pair counting has a 0/0 form only when both sides are
                // all-one-block or all-singletons; those cases are fixed by convention.
                if (trivial_a == 1 || trivial_a == n) && (trivial_b == 1 || trivial_b == n) {
                    continue;
                }
                assert_eq!(got, want, "{a:?} {b:?}");
            }
        }
    }
}

#[test]
fn expected_mi_matches_table_enumeration() {
    for n in 2..=8 {
        let parts = set_partitions(n, 3);
        let mut seen = BTreeSet::new();
        for a in &parts {
            for b in &parts {
                let t = contingency(a, b).unwrap();
                let mut rows = t.row_sums().to_vec();
                let mut cols = t.col_sums().to_vec();
                rows.sort_unstable();
                cols.sort_unstable();
                if !seen.insert((rows.clone(), cols.clone())) {
                    continue;
                }
                let got = expected_mutual_information(&rows, &cols, n as u64);
                let want = enumerated_emi(&rows, &cols);
                assert!(
                    (got - want).abs() < 1e-10,
                    "{rows:?} {cols:?}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn expected_mi_matches_permutation_average() {
    let mut r = rng(301);
    for _ in 0..5 {
        let a: Vec<usize> = (0..8).map(|_| r.random_range(0..3)).collect();
        let mut b: Vec<usize> = (0..8).map(|_| r.random_range(0..3)).collect();
        let t = contingency(&a, &b).unwrap();
        let exact = expected_mutual_information(t.row_sums(), t.col_sums(), 8);
        let trials = 20_000;
        let mut total = 0.0;
        for _ in 0..trials {
            b.shuffle(&mut r);
            total += mutual_information(&contingency(&a, &b).unwrap());
        }
        assert!((total / trials as f64 - exact).abs() < 0.01);
    }
}

#[test]
fn random_labelings_score_near_zero() {
    let mut r = rng(302);
    let (mut ari, mut ami) = (0.0, 0.0);
    let trials = 1000;
    for _ in 0..trials {
        let a: Vec<u8> = (0..30).map(|_| r.random_range(0..3)).collect();
        let b: Vec<u8> = (0..30).map(|_| r.random_range(0..3)).collect();
        ari += adjusted_rand_index(&a, &b).unwrap();
        ami += adjusted_mutual_information(&a, &b).unwrap();
    }
    assert!((ari / trials as f64).abs() < 0.02);
    assert!((ami / trials as f64).abs() < 0.02);
}

#[test]
fn crossed_partition_matches_pair_count() {
    let a = [0, 0, 1, 1];
    let b = [0, 1, 0, 1];
    assert_eq!(
        adjusted_rand_index(&a, &b).unwrap(),
        brute_force_ari(&a, &b)
    );
}

proptest! {
    #[test]
    fn scores_are_symmetric(pairs in prop::collection::vec((0u8..4, 0u8..4), 2..40)) {
        let (a, b): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        prop_assert_eq!(adjusted_rand_index(&a, &b).unwrap(), adjusted_rand_index(&b, &a).unwrap());
        let (x, y) = (adjusted_mutual_information(&a, &b).unwrap(), adjusted_mutual_information(&b, &a).unwrap());
        prop_assert!((x - y).abs() < 1e-12);
    }

    #[test]
    fn scores_ignore_label_names(pairs in prop::collection::vec((0u8..4, 0u8..4), 2..40), shift in 1i64..100) {
        let (a, b): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        let renamed: Vec<i64> = b.iter().map(|&v| shift - 7 * v as i64).collect();
        prop_assert_eq!(adjusted_rand_index(&a, &b).unwrap(), adjusted_rand_index(&a, &renamed).unwrap());
        let (x, y) = (adjusted_mutual_information(&a, &b).unwrap(), adjusted_mutual_information(&a, &renamed).unwrap());
        prop_assert!((x - y).abs() < 1e-12);
    }

    #[test]
    fn scores_are_at_most_one(pairs in prop::collection::vec((0u8..5, 0u8..5), 2..60)) {
        let (a, b): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        prop_assert!(adjusted_rand_index(&a, &b).unwrap() <= 1.0);
        prop_assert!(adjusted_mutual_information(&a, &b).unwrap() <= 1.0 + 1e-12);
        prop_assert_eq!(adjusted_rand_index(&a, &a).unwrap(), 1.0);
    }
}
