//! Normalized spectral clustering of a weight matrix, with seeded k-means++
//! on the row-normalized leading eigenvectors.

use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{KsccError, Result};
use crate::weights::WeightMatrix;

/// Lloyd iterations per k-means run.
pub const KMEANS_MAX_ITERS: usize = 100;

/// Normalized affinities below this are dropped before the eigensolve.
const NEGLIGIBLE_ENTRY: f64 = f64::EPSILON * f64::EPSILON;

/// Assignment of `n` points to `k` clusters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clustering {
    labels: Vec<usize>,
    k: usize,
}

impl Clustering {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(KsccError::invalid("cluster count must be at least 1"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(KsccError::invalid(format!("label {bad} out of range for k = {k}")));
        }
        Ok(Clustering { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Point indices of each cluster, in increasing order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    /// Number of clusters that received no points.
    pub fn empty_clusters(&self) -> usize {
        self.sizes().iter().filter(|&&s| s == 0).count()
    }
}

/// Result of one k-means fit.
#[derive(Debug, Clone, PartialEq)]
pub struct KmeansFit {
    pub clustering: Clustering,
    /// Within-cluster sum of squares.
    pub wcss: f64,
    /// Index of the winning restart.
    pub restart: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn kmeans_pp_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..n)].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            // rounding may run past the end; take the last point with mass
            if d2[chosen] == 0.0 {
                chosen = d2.iter().rposition(|&d| d > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[pick].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    centers
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> (Vec<usize>, f64) {
    let n = points.len();
    let dim = points.first().map_or(0, Vec::len);
    let k = centers.len();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let (c, _) = nearest(p, &centers);
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            // an emptied cluster keeps its old center
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                centers[c] = sums[c].iter().map(|s| s * inv).collect();
            }
        }
    }
    let wcss = points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centers[l])).sum();
    (labels, wcss)
}

/// k-means on the rows of `rows`, keeping the lowest within-cluster sum of
/// squares over `restarts` k-means++ initializations.
///
/// Restart seeds are drawn sequentially from `seed`; ties in WCSS go to the
/// lower restart index, so parallel execution cannot change the answer.
pub fn kmeans(rows: &DMatrix<f64>, k: usize, restarts: usize, seed: u64) -> Result<KmeansFit> {
    let n = rows.nrows();
    if k == 0 || k > n {
        return Err(KsccError::invalid(format!("cannot form {k} clusters from {n} points")));
    }
    if restarts == 0 {
        return Err(KsccError::invalid("k-means needs at least one restart"));
    }
    let points: Vec<Vec<f64>> = rows.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..restarts).map(|_| master.next_u64()).collect();

    let fits: Vec<(Vec<usize>, f64)> = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let centers = kmeans_pp_init(&points, k, &mut rng);
            lloyd(&points, centers)
        })
        .collect();

    let (restart, (labels, wcss)) = fits
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.1.total_cmp(&b.1).then(ia.cmp(ib)))
        .expect("at least one restart");
    Ok(KmeansFit { clustering: Clustering { labels, k }, wcss, restart })
}

/// Diagnostics from one spectral clustering call.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDiagnostics {
    /// Points with zero total weight; they still receive a label.
    pub isolated: Vec<usize>,
    /// The `k` largest eigenvalues of the normalized affinity, descending.
    pub leading_eigenvalues: Vec<f64>,
    pub kmeans_wcss: f64,
}

/// Default number of k-means++ restarts.
pub const DEFAULT_KMEANS_RESTARTS: usize = 10;

/// Spectral clustering of `w` into `k` groups with the default number of
/// k-means restarts.
pub fn spectral_cluster(w: &WeightMatrix, k: usize, seed: u64) -> Result<Clustering> {
    spectral_cluster_with(w, k, DEFAULT_KMEANS_RESTARTS, seed).map(|(c, _)| c)
}

/// Spectral clustering with explicit restarts, returning diagnostics too.
///
/// Forms `D^-1/2 W D^-1/2` (zero rows and columns for zero-degree points),
/// takes its `k` leading eigenvectors, normalizes each row to unit length
/// (zero rows stay zero) and runs k-means on the rows.
pub fn spectral_cluster_with(
    w: &WeightMatrix,
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<(Clustering, SpectralDiagnostics)> {
    let n = w.n();
    if k == 0 || k > n {
        return Err(KsccError::invalid(format!("cannot form {k} clusters from {n} points")));
    }
    let wm = w.as_matrix();
    let degrees: Vec<f64> = (0..n).map(|i| wm.row(i).sum()).collect();
    let isolated: Vec<usize> = (0..n).filter(|&i| degrees[i] <= 0.0).collect();
    if k == 1 {
        let clustering = Clustering { labels: vec![0; n], k: 1 };
        let diag = SpectralDiagnostics { isolated, leading_eigenvalues: vec![], kmeans_wcss: 0.0 };
        return Ok((clustering, diag));
    }

    // isolated points have zero rows in the normalized matrix and cannot
    // carry weight in any leading eigenvector; leaving them out keeps the
    // eigensolver away from large zero blocks
    let active: Vec<usize> = (0..n).filter(|&i| degrees[i] > 0.0).collect();
    let m = active.len();
    let scale: Vec<f64> = active.iter().map(|&i| degrees[i].sqrt().recip()).collect();
    // The normalized matrix has spectral radius at most 1 and the solver's
    // backward error is of order eps, so entries below eps^2 are invisible
    // to it; dropping them keeps its rotations clear of underflow.
    let normalized = DMatrix::from_fn(m, m, |a, b| {
        let v = scale[a] * wm[(active[a], active[b])] * scale[b];
        if v.abs() < NEGLIGIBLE_ENTRY { 0.0 } else { v }
    });
    let eig = normalized.symmetric_eigen();
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(KsccError::Numerical("non-finite eigenvalue in spectral embedding".into()));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = &order[..k.min(m)];

    let mut embedding = DMatrix::zeros(n, k);
    for (a, &i) in active.iter().enumerate() {
        for (c, &t) in top.iter().enumerate() {
            embedding[(i, c)] = eig.eigenvectors[(a, t)];
        }
    }
    for mut row in embedding.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    let fit = kmeans(&embedding, k, restarts, seed)?;
    let diag = SpectralDiagnostics {
        isolated,
        leading_eigenvalues: top.iter().map(|&i| eig.eigenvalues[i]).collect(),
        kmeans_wcss: fit.wcss,
    };
    Ok((fit.clustering, diag))
}
