//! Misclassification scoring and repeated-run benchmarks.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use itertools::Itertools;
use rayon::prelude::*;

use crate::datagen::Dataset;
use crate::driver::{run_kscc, KsccConfig};
use crate::error::{KsccError, Result};
use crate::kernels::KernelSpec;

/// Largest class count scored by trying every bijection.
const EXHAUSTIVE_MAX_CLASSES: usize = 6;

fn dense_labels(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    for &l in labels {
        let next = ids.len();
        ids.entry(l).or_insert(next);
    }
    (labels.iter().map(|l| ids[l]).collect(), ids.len())
}

/// Percentage of points mislabelled under the best bijection between
/// predicted and true labels.
///
/// Label values are arbitrary; when the two labelings use different numbers
/// of classes the confusion matrix is padded with empty classes.
pub fn misclassification_rate(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(KsccError::invalid(format!(
            "{} predicted labels for {} true labels",
            pred.len(),
            truth.len()
        )));
    }
    let n = pred.len();
    if n == 0 {
        return Ok(0.0);
    }
    let (p, kp) = dense_labels(pred);
    let (t, kt) = dense_labels(truth);
    let m = kp.max(kt);
    let mut confusion = vec![vec![0i64; m]; m];
    for (&a, &b) in p.iter().zip(&t) {
        confusion[a][b] += 1;
    }
    let matched = if m <= EXHAUSTIVE_MAX_CLASSES {
        (0..m)
            .permutations(m)
            .map(|perm| perm.iter().enumerate().map(|(r, &c)| confusion[r][c]).sum::<i64>())
            .max()
            .unwrap_or(0)
    } else {
        max_assignment(&confusion)
    };
    Ok(100.0 * (n as i64 - matched) as f64 / n as f64)
}

/// Maximum-weight perfect matching on a square matrix (Hungarian method,
/// potentials form).
fn max_assignment(weights: &[Vec<i64>]) -> i64 {
    let n = weights.len();
    let top = weights.iter().flatten().copied().max().unwrap_or(0);
    // minimize top - w, 1-based with a dummy row/column 0
    let cost = |i: usize, j: usize| top - weights[i - 1][j - 1];
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| weights[owner[j] - 1][j - 1]).sum()
}

/// Aggregated results of repeated runs on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub name: String,
    pub n: usize,
    /// Mean misclassification rate, percent.
    pub e_mean: f64,
    /// Sample standard deviation of the rate, percent (0 for one run).
    pub e_std: f64,
    /// Mean wall time per run, seconds.
    pub t_mean: f64,
    pub runs: usize,
    pub errors: Vec<f64>,
    pub kls: Vec<f64>,
    pub times: Vec<f64>,
}

impl BenchmarkRow {
    pub fn from_runs(name: impl Into<String>, n: usize, errors: Vec<f64>, kls: Vec<f64>, times: Vec<f64>) -> Self {
        let runs = errors.len();
        let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
        let e_mean = mean(&errors);
        let e_std = if runs > 1 {
            (errors.iter().map(|e| (e - e_mean).powi(2)).sum::<f64>() / (runs - 1) as f64).sqrt()
        } else {
            0.0
        };
        BenchmarkRow { name: name.into(), n, e_mean, e_std, t_mean: mean(&times), runs, errors, kls, times }
    }

    /// Median misclassification rate over the runs.
    pub fn e_median(&self) -> f64 {
        let mut sorted = self.errors.clone();
        sorted.sort_by(f64::total_cmp);
        match sorted.len() {
            0 => 0.0,
            len if len % 2 == 1 => sorted[len / 2],
            len => 0.5 * (sorted[len / 2 - 1] + sorted[len / 2]),
        }
    }
}

/// Runs [`run_kscc`] `runs` times with seeds `cfg.seed, cfg.seed + 1, ...`
/// and scores every run against the dataset's labels.
///
/// Runs execute in parallel; results are ordered by run index.
pub fn run_benchmark(
    name: &str,
    data: &Dataset,
    spec: KernelSpec,
    cfg: &KsccConfig,
    runs: usize,
) -> Result<BenchmarkRow> {
    if runs == 0 {
        return Err(KsccError::invalid("a benchmark needs at least one run"));
    }
    if data.labels.len() != data.n() {
        return Err(KsccError::invalid("dataset labels do not match its points"));
    }
    let results: Vec<(f64, f64, f64)> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let cfg = cfg.clone().with_seed(cfg.seed.wrapping_add(r as u64));
            let report = run_kscc(&data.points, spec, &cfg)?;
            let err = misclassification_rate(report.clustering.labels(), &data.labels)?;
            Ok((err, report.kls(), report.wall_time))
        })
        .collect::<Result<_>>()?;
    let (errors, rest): (Vec<f64>, Vec<(f64, f64)>) = results.into_iter().map(|(e, k, t)| (e, (k, t))).unzip();
    let (kls, times) = rest.into_iter().unzip();
    Ok(BenchmarkRow::from_runs(name, data.n(), errors, kls, times))
}

/// A set of benchmark rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl BenchmarkReport {
    /// `name,n,runs,e_mean,e_std,t_mean` with rates in percent.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,n,runs,e_mean,e_std,t_mean\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.17e},{:.17e},{:.17e}",
                csv_field(&r.name),
                r.n,
                r.runs,
                r.e_mean,
                r.e_std,
                r.t_mean
            );
        }
        out
    }

    /// One line per run: `name,run,error,kls,time`.
    pub fn runs_csv(&self) -> String {
        let mut out = String::from("name,run,error,kls,time\n");
        for r in &self.rows {
            for i in 0..r.runs {
                let _ = writeln!(
                    out,
                    "{},{},{:.17e},{:.17e},{:.17e}",
                    csv_field(&r.name),
                    i,
                    r.errors[i],
                    r.kls[i],
                    r.times[i]
                );
            }
        }
        out
    }

    /// Aligned plain-text table: `Seq. | N | e_mean | e_std | t`.
    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
        let mut out = format!(
            "{:<width$}  {:>6}  {:>8}  {:>8}  {:>8}\n",
            "Seq.", "N", "e_mean", "e_std", "t"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>6}  {:>7.2}%  {:>7.2}%  {:>8.2}",
                r.name, r.n, r.e_mean, r.e_std, r.t_mean
            );
        }
        out
    }
}
