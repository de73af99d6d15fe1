//! The full clustering loop: tuple sampling, curvature columns, the sigma
//! sweep, kernel least-squares scoring and iterative resampling.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{curvature_column, CurvatureColumn, TupleIndex};
use crate::error::{KsccError, Result};
use crate::kernels::{build_kernel_matrix, center_kernel_block, KernelMatrix, KernelSpec};
use crate::spectral::{spectral_cluster_with, Clustering, DEFAULT_KMEANS_RESTARTS};
use crate::weights::{affinity_column, estimate_weights, sigma_sq_from_sweep, SortedCurvatures};

/// Sampled `(ell + 1)`-tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet(Vec<TupleIndex>);

impl SampleSet {
    pub fn tuples(&self) -> &[TupleIndex] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn draw_tuple(rng: &mut ChaCha8Rng, pool: &[usize], ell: usize, n: usize) -> Result<TupleIndex> {
    let picked = sample(rng, pool.len(), ell + 1);
    TupleIndex::new(picked.into_iter().map(|p| pool[p]).collect(), n)
}

fn uniform_with(n: usize, ell: usize, c: usize, rng: &mut ChaCha8Rng) -> Result<SampleSet> {
    if ell == 0 {
        return Err(KsccError::invalid("ell must be at least 1"));
    }
    if n < ell + 1 {
        return Err(KsccError::TooFewPoints { n, ell });
    }
    let all: Vec<usize> = (0..n).collect();
    (0..c).map(|_| draw_tuple(rng, &all, ell, n)).collect::<Result<_>>().map(SampleSet)
}

/// `c` tuples of `ell + 1` distinct indices drawn uniformly from `[0, n)`.
/// Tuples may repeat across the set.
pub fn sample_tuples_uniform(n: usize, ell: usize, c: usize, seed: u64) -> Result<SampleSet> {
    uniform_with(n, ell, c, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Per-cluster tuple quotas: `c / k` each, the remainder going one apiece to
/// the largest clusters (lower label first on ties).
pub fn cluster_quotas(sizes: &[usize], c: usize) -> Vec<usize> {
    let k = sizes.len();
    let mut quotas = vec![c / k; k];
    let mut by_size: Vec<usize> = (0..k).collect();
    by_size.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    for &cl in by_size.iter().take(c % k) {
        quotas[cl] += 1;
    }
    quotas
}

fn from_clusters_with(
    clustering: &Clustering,
    ell: usize,
    c: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SampleSet> {
    let n = clustering.n();
    if ell == 0 {
        return Err(KsccError::invalid("ell must be at least 1"));
    }
    if n < ell + 1 {
        return Err(KsccError::TooFewPoints { n, ell });
    }
    let members = clustering.members();
    let quotas = cluster_quotas(&clustering.sizes(), c);
    let all: Vec<usize> = (0..n).collect();
    let mut tuples = Vec::with_capacity(c);
    for (pool, quota) in members.iter().zip(quotas) {
        // too small to span a tuple: draw its share from the whole dataset
        let pool = if pool.len() > ell { pool } else { &all };
        for _ in 0..quota {
            tuples.push(draw_tuple(rng, pool, ell, n)?);
        }
    }
    Ok(SampleSet(tuples))
}

/// Tuples drawn within the clusters of a current partition; see
/// [`cluster_quotas`] for the split of `c`.
pub fn sample_tuples_from_clusters(
    clustering: &Clustering,
    ell: usize,
    c: usize,
    seed: u64,
) -> Result<SampleSet> {
    from_clusters_with(clustering, ell, c, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Total kernel least-squares error of a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct KlsError {
    /// `e_KLS^2`: sum over clusters of the centered-block eigenvalues past
    /// the `ell` largest.
    pub squared: f64,
    pub per_cluster: Vec<f64>,
}

impl KlsError {
    pub fn value(&self) -> f64 {
        self.squared.sqrt()
    }
}

/// Residual of the best `ell`-flat fit to every cluster, in feature space.
pub fn kls_error(k: &KernelMatrix, clustering: &Clustering, ell: usize) -> Result<KlsError> {
    if clustering.n() != k.n() {
        return Err(KsccError::invalid(format!(
            "clustering has {} labels for {} points",
            clustering.n(),
            k.n()
        )));
    }
    let per_cluster = clustering
        .members()
        .iter()
        .map(|members| {
            // an ell-flat interpolates up to ell + 1 points
            if members.len() <= ell + 1 {
                return Ok(0.0);
            }
            let centered = center_kernel_block(&k.block(members))?;
            let mut eig: Vec<f64> = centered.symmetric_eigenvalues().iter().copied().collect();
            if eig.iter().any(|v| !v.is_finite()) {
                return Err(KsccError::Numerical("non-finite eigenvalue in KLS error".into()));
            }
            eig.sort_by(|a, b| b.total_cmp(a));
            // eigenvalues at rounding level are zeros of an exactly flat cluster
            let floor = members.len() as f64 * f64::EPSILON * eig[0].abs();
            Ok(eig[ell..].iter().filter(|&&v| v > floor).sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(KlsError { squared: per_cluster.iter().sum(), per_cluster })
}

/// Parameters of a clustering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsccConfig {
    /// Flat dimension in feature space.
    pub ell: usize,
    /// Number of clusters.
    pub k: usize,
    /// Sampled tuples per iteration.
    pub c: usize,
    pub max_outer_iters: usize,
    /// Relative KLS improvement below which an iteration counts as stalled.
    pub kls_rel_tol: f64,
    /// Consecutive stalled iterations that end the loop.
    pub stall_iters: usize,
    /// Iterations allowed after the best partition without beating it.
    pub patience: usize,
    pub seed: u64,
    pub restarts_kmeans: usize,
    /// Re-tune sigma every iteration; when false the first iteration's
    /// sweep values are reused.
    pub resweep_sigma: bool,
    /// Independent full runs (seeded consecutively); the lowest KLS wins.
    pub outer_restarts: usize,
}

impl KsccConfig {
    pub fn new(ell: usize, k: usize) -> Self {
        KsccConfig {
            ell,
            k,
            c: 100 * k,
            max_outer_iters: 20,
            kls_rel_tol: 1e-3,
            stall_iters: 2,
            patience: 2,
            seed: 0,
            restarts_kmeans: DEFAULT_KMEANS_RESTARTS,
            resweep_sigma: true,
            outer_restarts: 1,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_c(mut self, c: usize) -> Self {
        self.c = c;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.ell == 0 {
            return Err(KsccError::invalid("ell must be at least 1"));
        }
        if self.k == 0 {
            return Err(KsccError::invalid("k must be at least 1"));
        }
        if self.c < self.k {
            return Err(KsccError::invalid(format!("c = {} must be at least k = {}", self.c, self.k)));
        }
        if self.max_outer_iters == 0 || self.restarts_kmeans == 0 || self.outer_restarts == 0 {
            return Err(KsccError::invalid("iteration and restart counts must be positive"));
        }
        if !(self.kls_rel_tol >= 0.0) {
            return Err(KsccError::invalid("kls_rel_tol must be nonnegative"));
        }
        if n <= self.ell + 1 {
            return Err(KsccError::TooFewPoints { n, ell: self.ell });
        }
        if n < self.k {
            return Err(KsccError::invalid(format!("cannot form {} clusters from {n} points", self.k)));
        }
        Ok(())
    }
}

/// Winning sweep step of one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaChoice {
    pub p: u32,
    pub sigma_sq: f64,
}

/// Outcome of [`run_kscc`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    /// Best partition seen (lowest KLS error).
    pub clustering: Clustering,
    /// `e_KLS` of the accepted partition of every iteration.
    pub kls_history: Vec<f64>,
    pub sigma_chosen: Vec<SigmaChoice>,
    pub iterations: usize,
    /// Iteration that produced `clustering`.
    pub best_iteration: usize,
    /// Points with zero total weight in the winning spectral step.
    pub isolated: Vec<usize>,
    pub wall_time: f64,
}

impl RunReport {
    pub fn kls(&self) -> f64 {
        self.kls_history[self.best_iteration]
    }
}

struct Candidate {
    clustering: Clustering,
    kls_sq: f64,
    choice: SigmaChoice,
    isolated: Vec<usize>,
}

/// Clusters the rows of `points` (an `N x D` matrix) into `cfg.k` groups
/// with the given kernel.
pub fn run_kscc(points: &DMatrix<f64>, spec: KernelSpec, cfg: &KsccConfig) -> Result<RunReport> {
    cfg.validate(points.nrows())?;
    let k = build_kernel_matrix(spec, points)?;
    run_kscc_with_kernel(&k, cfg)
}

/// Same as [`run_kscc`] on a precomputed kernel matrix.
pub fn run_kscc_with_kernel(k: &KernelMatrix, cfg: &KsccConfig) -> Result<RunReport> {
    let start = Instant::now();
    cfg.validate(k.n())?;
    let mut best: Option<RunReport> = None;
    for r in 0..cfg.outer_restarts {
        let mut report = single_run(k, cfg, cfg.seed.wrapping_add(r as u64))?;
        report.wall_time = start.elapsed().as_secs_f64();
        // strict comparison keeps the earliest restart on ties
        if best.as_ref().is_none_or(|b| report.kls() < b.kls()) {
            best = Some(report);
        }
    }
    let mut best = best.expect("outer_restarts >= 1");
    best.wall_time = start.elapsed().as_secs_f64();
    Ok(best)
}

fn single_run(k: &KernelMatrix, cfg: &KsccConfig, seed: u64) -> Result<RunReport> {
    let n = k.n();
    let ell = cfg.ell;
    let sweep_len = ell as u32 + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut kls_history = Vec::new();
    let mut sigma_chosen = Vec::new();
    let mut frozen_sigmas: Option<Vec<f64>> = None;
    let mut current: Option<Clustering> = None;
    let mut best: Option<(usize, f64, Clustering, Vec<usize>)> = None;
    let mut stalled = 0usize;
    let mut since_best = 0usize;

    for iter in 0..cfg.max_outer_iters {
        let samples = match &current {
            None => uniform_with(n, ell, cfg.c, &mut rng)?,
            Some(cl) => from_clusters_with(cl, ell, cfg.c, &mut rng)?,
        };
        let spectral_seeds: Vec<u64> = (0..sweep_len).map(|_| rng.next_u64()).collect();

        let columns: Vec<CurvatureColumn> = samples
            .tuples()
            .par_iter()
            .map(|t| curvature_column(k, t))
            .collect::<Result<_>>()?;

        let sigmas: Vec<f64> = match &frozen_sigmas {
            Some(s) if !cfg.resweep_sigma => s.clone(),
            _ => {
                let sorted = SortedCurvatures::from_columns(&columns)?;
                (1..=sweep_len)
                    .map(|p| sigma_sq_from_sweep(&sorted, n, cfg.c, cfg.k, p))
                    .collect::<Result<_>>()?
            }
        };
        frozen_sigmas.get_or_insert_with(|| sigmas.clone());

        let candidates: Vec<Candidate> = (0..sweep_len as usize)
            .into_par_iter()
            .map(|pi| {
                let sigma_sq = sigmas[pi];
                let aff: Vec<Vec<f64>> = columns
                    .iter()
                    .map(|c| affinity_column(c, sigma_sq))
                    .collect::<Result<_>>()?;
                let w = estimate_weights(&aff, n)?;
                drop(aff);
                let (clustering, diag) =
                    spectral_cluster_with(&w, cfg.k, cfg.restarts_kmeans, spectral_seeds[pi])?;
                let kls_sq = kls_error(k, &clustering, ell)?.squared;
                Ok(Candidate {
                    clustering,
                    kls_sq,
                    choice: SigmaChoice { p: pi as u32 + 1, sigma_sq },
                    isolated: diag.isolated,
                })
            })
            .collect::<Result<_>>()?;

        // lowest KLS, then lowest p
        let winner = candidates
            .into_iter()
            .min_by(|a, b| a.kls_sq.total_cmp(&b.kls_sq).then(a.choice.p.cmp(&b.choice.p)))
            .expect("sweep has at least one step");
        let kls = winner.kls_sq.sqrt();

        if let Some(&prev) = kls_history.last() {
            let rel: f64 = if prev > 0.0 { (prev - kls) / prev } else { 0.0 };
            if (0.0..cfg.kls_rel_tol).contains(&rel) {
                stalled += 1;
            } else {
                stalled = 0;
            }
        }
        kls_history.push(kls);
        sigma_chosen.push(winner.choice);

        if best.as_ref().is_none_or(|b| kls < b.1) {
            best = Some((iter, kls, winner.clustering.clone(), winner.isolated));
            since_best = 0;
        } else {
            since_best += 1;
        }
        current = Some(winner.clustering);

        if stalled >= cfg.stall_iters || since_best > cfg.patience {
            break;
        }
    }

    let (best_iteration, _, clustering, isolated) = best.expect("at least one iteration");
    Ok(RunReport {
        clustering,
        iterations: kls_history.len(),
        kls_history,
        sigma_chosen,
        best_iteration,
        isolated,
        wall_time: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn uniform_shape_and_determinism() {
        let s = sample_tuples_uniform(5, 1, 3, 17).unwrap();
        assert_eq!(s.len(), 3);
        for t in s.tuples() {
            assert_eq!(t.indices().len(), 2);
            assert!(t.indices().iter().all(|&i| i < 5));
            assert_ne!(t.indices()[0], t.indices()[1]);
        }
        assert_eq!(s, sample_tuples_uniform(5, 1, 3, 17).unwrap());
    }

    #[test]
    fn uniform_forced_full_tuples() {
        let s = sample_tuples_uniform(4, 3, 5, 1).unwrap();
        for t in s.tuples() {
            let mut idx = t.indices().to_vec();
            idx.sort();
            assert_eq!(idx, vec![0, 1, 2, 3]);
        }
        assert!(matches!(sample_tuples_uniform(3, 3, 5, 1), Err(KsccError::TooFewPoints { .. })));
    }

    #[test]
    fn cluster_sampling_stays_within_clusters() {
        let labels: Vec<usize> = (0..100).map(|i| i / 50).collect();
        let cl = Clustering::new(labels.clone(), 2).unwrap();
        let s = sample_tuples_from_clusters(&cl, 2, 200, 3).unwrap();
        assert_eq!(s.len(), 200);
        let mut per = [0usize; 2];
        for t in s.tuples() {
            let l = labels[t.indices()[0]];
            assert!(t.indices().iter().all(|&i| labels[i] == l));
            per[l] += 1;
        }
        assert_eq!(per, [100, 100]);
    }

    #[test]
    fn quotas_favour_large_clusters() {
        assert_eq!(cluster_quotas(&[10, 30, 20], 200), vec![66, 67, 67]);
        assert_eq!(cluster_quotas(&[5, 5], 3), vec![2, 1]);
    }

    #[test]
    fn small_cluster_falls_back_to_global_pool() {
        // cluster 1 has ell = 2 points, too few for a triple
        let labels = vec![0, 0, 0, 0, 0, 0, 1, 1];
        let cl = Clustering::new(labels.clone(), 2).unwrap();
        let s = sample_tuples_from_clusters(&cl, 2, 40, 9).unwrap();
        let (own, borrowed) = s.tuples().split_at(20);
        assert!(own.iter().all(|t| t.indices().iter().all(|&i| labels[i] == 0)));
        assert!(borrowed.iter().any(|t| t.indices().iter().any(|&i| labels[i] == 0)));
    }

    #[test]
    fn single_cluster_matches_uniform() {
        let cl = Clustering::new(vec![0; 30], 1).unwrap();
        assert_eq!(
            sample_tuples_from_clusters(&cl, 2, 50, 4).unwrap(),
            sample_tuples_uniform(30, 2, 50, 4).unwrap()
        );
    }

    #[test]
    fn kls_examples() {
        let k = build_kernel_matrix(KernelSpec::Linear, &dmatrix![0.0, 0.0; 1.0, 0.0; 0.0, 1.0])
            .unwrap();
        let one = Clustering::new(vec![0, 0, 0], 1).unwrap();
        let e = kls_error(&k, &one, 1).unwrap();
        assert!((e.squared - 1.0 / 3.0).abs() < 1e-12);
        assert!((e.value() - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        // size <= ell + 1 clusters contribute nothing
        let split = Clustering::new(vec![0, 1, 1], 2).unwrap();
        assert_eq!(kls_error(&k, &split, 1).unwrap().squared, 0.0);
    }

    #[test]
    fn kls_zero_for_flat_clusters() {
        // two lines, linear kernel, ell = 1
        let pts = DMatrix::from_fn(20, 2, |i, c| {
            let t = (i % 10) as f64 * 0.4 - 1.5;
            match (i < 10, c) {
                (true, 0) => t,
                (true, _) => 2.0 * t + 1.0,
                (false, 0) => t,
                (false, _) => -0.5 * t - 2.0,
            }
        });
        let k = build_kernel_matrix(KernelSpec::Linear, &pts).unwrap();
        let truth = Clustering::new((0..20).map(|i| i / 10).collect(), 2).unwrap();
        assert!(kls_error(&k, &truth, 1).unwrap().squared < 1e-10);
    }

    #[test]
    fn config_validation() {
        let cfg = KsccConfig::new(2, 2);
        assert_eq!(cfg.c, 200);
        assert!(matches!(cfg.validate(3), Err(KsccError::TooFewPoints { .. })));
        assert!(cfg.validate(4).is_ok());
        assert!(KsccConfig::new(2, 3).with_c(2).validate(50).is_err());
        assert!(KsccConfig::new(0, 3).validate(50).is_err());
    }
}
