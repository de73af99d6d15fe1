use itertools::Itertools;
use kscc::datagen::{canonical, generate};
use kscc::{misclassification_rate, run_benchmark, BenchmarkReport, KernelSpec, KsccConfig};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Best agreement over every bijection, by brute force.
fn brute_force_rate(pred: &[usize], truth: &[usize], m: usize) -> f64 {
    let best = (0..m)
        .permutations(m)
        .map(|perm| pred.iter().zip(truth).filter(|(&p, &t)| perm[p] == t).count())
        .max()
        .unwrap();
    100.0 * (pred.len() - best) as f64 / pred.len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relabelling_predictions_does_not_change_the_rate(
        truth in prop::collection::vec(0usize..5, 1..80),
        pred_seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(pred_seed);
        let pred: Vec<usize> = truth.iter().map(|&t| if rand::Rng::random_bool(&mut rng, 0.7) { t } else { (t + 1) % 5 }).collect();
        let mut perm: Vec<usize> = (0..5).collect();
        perm.shuffle(&mut rng);
        let relabelled: Vec<usize> = pred.iter().map(|&p| perm[p] + 10).collect();
        let a = misclassification_rate(&pred, &truth).unwrap();
        let b = misclassification_rate(&relabelled, &truth).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!((0.0..=100.0).contains(&a));
        prop_assert_eq!(misclassification_rate(&truth, &truth).unwrap(), 0.0);
    }

    #[test]
    fn assignment_matches_brute_force_for_many_classes(
        truth in prop::collection::vec(0usize..8, 8..60),
        pred in prop::collection::vec(0usize..8, 60),
    ) {
        let pred = &pred[..truth.len()];
        // both use all 8 labels so the dense relabelling is the identity
        let mut t = truth.clone();
        let mut p = pred.to_vec();
        t[..8].copy_from_slice(&[0, 1, 2, 3, 4, 5, 6, 7]);
        p[..8].copy_from_slice(&[0, 1, 2, 3, 4, 5, 6, 7]);
        let got = misclassification_rate(&p, &t).unwrap();
        let want = brute_force_rate(&p, &t, 8);
        prop_assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn benchmark_rows_are_reproducible() {
    let data = generate(&canonical("two_circles").unwrap().with_points_per_surface(40)).unwrap();
    let cfg = KsccConfig::new(2, 2).with_seed(5);
    let a = run_benchmark("two", &data, KernelSpec::Spherical, &cfg, 3).unwrap();
    let b = run_benchmark("two", &data, KernelSpec::Spherical, &cfg, 3).unwrap();
    assert_eq!(a.errors, b.errors);
    assert_eq!(a.kls, b.kls);
    assert_eq!(a.runs, 3);
    let report = BenchmarkReport { rows: vec![a] };
    assert_eq!(report.to_csv().lines().count(), 2);
    assert!(report.to_text().starts_with("Seq."));
}
