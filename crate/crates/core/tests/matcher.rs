mod common;

use std::collections::HashSet;

use common::*;
use ontorient::matcher::{inject_noise, split_alignment};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matching_equals_exhaustive_search(
        ns in 1usize..80,
        nt in 1usize..80,
        d in 1usize..5,
        grid in 1i32..4,
        seed in any::<u64>(),
    ) {
        let mut rng = rng(seed);
        let mut rows = |n: usize| -> Vec<Vec<f64>> {
            (0..n).map(|_| (0..d).map(|_| rng.random_range(-grid..=grid) as f64).collect()).collect()
        };
        let (src, tgt) = (space("s", &rows(ns)), space("t", &rows(nt)));
        let (si, ti) = (ids("s", ns), ids("t", nt));
        prop_assert_eq!(matched_pairs(&src, &tgt, &si, &ti), brute_force_nearest(&src, &tgt, &si, &ti));
    }

    #[test]
    fn split_partitions_the_alignment(n in 2usize..300, alpha in 0.05f64..0.95, seed in any::<u64>()) {
        let a = identity_alignment("s", "t", n);
        let k = ((alpha * n as f64 + 1e-9).floor()) as usize;
        prop_assume!(k >= 1);
        let (train, test) = split_alignment(&a, alpha, seed).unwrap();
        prop_assert_eq!(train.len(), k);
        prop_assert_eq!(test.len(), n - k);
        let tr: HashSet<_> = train.iter().cloned().map(|c| (c.source, c.target)).collect();
        let te: HashSet<_> = test.iter().cloned().map(|c| (c.source, c.target)).collect();
        prop_assert!(tr.is_disjoint(&te));
        prop_assert_eq!(tr.len() + te.len(), n);
        let again = split_alignment(&a, alpha, seed).unwrap();
        prop_assert_eq!(again.0, train);
    }

    #[test]
    fn noise_changes_exactly_its_share(n in 1usize..200, rate in 0.0f64..=1.0, seed in any::<u64>()) {
        let train = identity_alignment("s", "t", n);
        let pool = ids("t", n + 3);
        let noisy = inject_noise(&train, rate, &pool, seed).unwrap();
        let expected = ((rate * n as f64 + 1e-9).floor() as usize).min(n);
        let changed = train.iter().zip(noisy.iter()).filter(|(a, b)| a.target != b.target).count();
        prop_assert_eq!(changed, expected);
        for (a, b) in train.iter().zip(noisy.iter()) {
            prop_assert_eq!(&a.source, &b.source);
        }
    }
}
