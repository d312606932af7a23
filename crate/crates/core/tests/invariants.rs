use fedgbt::data::{holdout_split, stratified_assignment};
use fedgbt::eval::{auc_roc, roc_curve};
use fedgbt::hpo::SearchSpace;
use fedgbt::phe::{keygen, FixedPointCodec};
use proptest::prelude::*;

fn labels_with_both(max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, 4..max).prop_filter("both classes", |v| v.contains(&0) && v.contains(&1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn folds_partition_rows_and_balance_classes(labels in labels_with_both(200), k in 2usize..6, seed in any::<u64>()) {
        let fold = stratified_assignment(&labels, k, seed);
        prop_assert_eq!(fold.len(), labels.len());
        prop_assert!(fold.iter().all(|&f| f < k));
        for class in 0..2u8 {
            let mut sizes = vec![0usize; k];
            for (f, _) in fold.iter().zip(&labels).filter(|(_, &y)| y == class) {
                sizes[*f] += 1;
            }
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1, "{:?}", sizes);
        }
        prop_assert_eq!(fold, stratified_assignment(&labels, k, seed));
    }

    #[test]
    fn holdout_is_a_disjoint_cover(labels in labels_with_both(120), seed in any::<u64>()) {
        let n0 = labels.iter().filter(|&&y| y == 0).count();
        prop_assume!(n0 >= 2 && labels.len() - n0 >= 2);
        let rows: Vec<usize> = (0..labels.len()).collect();
        let (fit, valid) = holdout_split(&rows, &labels, 0.3, seed).unwrap();
        let mut all: Vec<usize> = fit.iter().chain(&valid).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, rows);
        prop_assert!(!valid.is_empty() && !fit.is_empty());
    }

    #[test]
    fn auc_flips_with_scores(labels in labels_with_both(80), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        // Coarse scores so ties are common.
        let scores: Vec<f64> = labels.iter().map(|_| rng.gen_range(0..8) as f64 / 8.0).collect();
        let flipped: Vec<f64> = scores.iter().map(|s| 1.0 - s).collect();
        let a = auc_roc(&labels, &scores).unwrap();
        let b = auc_roc(&labels, &flipped).unwrap();
        prop_assert!((a + b - 1.0).abs() <= 1e-12);
        let curve = roc_curve(&labels, &scores).unwrap();
        prop_assert!(curve.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1));
    }

    #[test]
    fn unit_cube_roundtrips(u in prop::collection::vec(0.0f64..=1.0, 8)) {
        let space = SearchSpace::default();
        let x = space.from_unit(&u);
        prop_assert!(space.contains(&space.snap(&x)));
        let back = space.to_unit(&x);
        for (a, b) in u.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn fixed_point_roundtrip(x in -1.0e5f64..1.0e5) {
        let codec = FixedPointCodec::new(40, 16).unwrap();
        let n = keygen(128, 1).unwrap().public.n().clone();
        let back = codec.decode(&codec.encode(x, &n).unwrap(), &n);
        prop_assert!((back - x).abs() <= codec.resolution() / 2.0);
        prop_assert_eq!(codec.decode_wrapping(codec.encode_wrapping(x).unwrap()), back);
    }
}
