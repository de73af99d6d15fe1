use kscc::nalgebra::DMatrix;
use kscc::spectral::spectral_cluster_with;
use kscc::{kmeans, spectral_cluster, WeightMatrix};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn partition(labels: &[usize]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut seen = std::collections::BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        let g = *seen.entry(l).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    groups.sort();
    groups
}

fn noisy_blocks(sizes: &[usize], seed: u64) -> (DMatrix<f64>, Vec<usize>) {
    let truth: Vec<usize> = sizes.iter().enumerate().flat_map(|(b, &s)| std::iter::repeat_n(b, s)).collect();
    let n = truth.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = if truth[i] == truth[j] { rng.random_range(0.8..1.0) } else { rng.random_range(0.0..0.02) };
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    (w, truth)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn permuting_points_permutes_the_partition(
        sizes in prop::collection::vec(3usize..12, 2..5),
        seed in any::<u64>(),
        cluster_seed in any::<u64>(),
    ) {
        let (w, truth) = noisy_blocks(&sizes, seed);
        let n = truth.len();
        let k = sizes.len();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let permuted = DMatrix::from_fn(n, n, |a, b| w[(perm[a], perm[b])]);

        let direct = spectral_cluster(&WeightMatrix::from_matrix(w).unwrap(), k, cluster_seed).unwrap();
        let shuffled = spectral_cluster(&WeightMatrix::from_matrix(permuted).unwrap(), k, cluster_seed).unwrap();
        let mut unpermuted = vec![0; n];
        for (a, &orig) in perm.iter().enumerate() {
            unpermuted[orig] = shuffled.labels()[a];
        }
        prop_assert_eq!(partition(direct.labels()), partition(&truth));
        prop_assert_eq!(partition(&unpermuted), partition(direct.labels()));
    }

    #[test]
    fn exact_blocks_recovered_for_any_seed(sizes in prop::collection::vec(2usize..9, 1..5), seed in any::<u64>()) {
        let truth: Vec<usize> = sizes.iter().enumerate().flat_map(|(b, &s)| std::iter::repeat_n(b, s)).collect();
        let n = truth.len();
        let w = DMatrix::from_fn(n, n, |i, j| if i != j && truth[i] == truth[j] { 1.0 } else { 0.0 });
        let c = spectral_cluster(&WeightMatrix::from_matrix(w).unwrap(), sizes.len(), seed).unwrap();
        prop_assert_eq!(partition(c.labels()), partition(&truth));
        prop_assert!(c.labels().iter().all(|&l| l < sizes.len()));
    }
}

#[test]
fn isolated_points_are_kept_and_reported() {
    let (mut w, _) = noisy_blocks(&[6, 6], 4);
    for j in 0..12 {
        w[(3, j)] = 0.0;
        w[(j, 3)] = 0.0;
    }
    let (c, diag) = spectral_cluster_with(&WeightMatrix::from_matrix(w).unwrap(), 2, 10, 0).unwrap();
    assert_eq!(c.n(), 12);
    assert_eq!(diag.isolated, vec![3]);
    assert!(c.labels()[3] < 2);
}

#[test]
fn many_isolated_points_and_tiny_weights() {
    // weights spanning hundreds of orders of magnitude with most rows empty
    let n = 60;
    let mut w = DMatrix::zeros(n, n);
    for i in 0..20 {
        for j in 0..20 {
            if i != j {
                let v = if (i < 10) == (j < 10) { 1.0 } else { 1e-150 };
                w[(i, j)] = v;
            }
        }
    }
    let (c, diag) = spectral_cluster_with(&WeightMatrix::from_matrix(w).unwrap(), 3, 10, 1).unwrap();
    assert_eq!(diag.isolated.len(), 40);
    assert_eq!(c.n(), n);
    assert!(diag.leading_eigenvalues.iter().all(|v| v.is_finite()));
}

#[test]
fn kmeans_restarts_are_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rows = DMatrix::from_fn(40, 3, |_, _| rng.random::<f64>());
    let a = kmeans(&rows, 4, 10, 77).unwrap();
    let b = kmeans(&rows, 4, 10, 77).unwrap();
    assert_eq!(a, b);
    let single = kmeans(&rows, 4, 1, 77).unwrap();
    assert!(a.wcss <= single.wcss);
}
