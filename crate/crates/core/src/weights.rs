//! Gaussian affinities over sampled tuples and the pairwise weight estimate
//! `W_ij = sum_r A(i, J_r) A(j, J_r)`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::curvature::CurvatureColumn;
use crate::error::{KsccError, Result};

/// Floor for sigma^2 when every sampled curvature is zero.
pub const SIGMA_SQ_FLOOR: f64 = 1e-12;

/// All sampled squared curvatures, sorted increasingly.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedCurvatures(Vec<f64>);

impl SortedCurvatures {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(KsccError::invalid(format!("invalid squared curvature {bad}")));
        }
        values.sort_by(f64::total_cmp);
        Ok(SortedCurvatures(values))
    }

    /// Pools the non-member entries of every column.
    pub fn from_columns(columns: &[CurvatureColumn]) -> Result<Self> {
        Self::new(columns.iter().flat_map(|c| c.included()).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// 1-based position `round(n * c / k^p)` clamped into `[1, len]`.
pub fn sweep_index(len: usize, n: usize, c: usize, k: usize, p: u32) -> usize {
    let target = n as f64 * c as f64 / (k as f64).powi(p as i32);
    // round half up
    let rounded = (target + 0.5).floor();
    if rounded < 1.0 {
        1
    } else if rounded >= len as f64 {
        len
    } else {
        rounded as usize
    }
}

/// sigma^2 for sweep step `p`: the `n * c / k^p`-th smallest sampled
/// squared curvature.
///
/// A zero pick falls back to the smallest positive curvature, or to
/// [`SIGMA_SQ_FLOOR`] when there is none.
pub fn sigma_sq_from_sweep(sorted: &SortedCurvatures, n: usize, c: usize, k: usize, p: u32) -> Result<f64> {
    if sorted.is_empty() {
        return Err(KsccError::invalid("no sampled curvatures to tune sigma from"));
    }
    if k == 0 || p == 0 {
        return Err(KsccError::invalid("sigma sweep needs k >= 1 and p >= 1"));
    }
    let idx = sweep_index(sorted.len(), n, c, k, p);
    let v = sorted.values()[idx - 1];
    if v > 0.0 {
        return Ok(v);
    }
    Ok(sorted.values().iter().copied().find(|&x| x > 0.0).unwrap_or(SIGMA_SQ_FLOOR))
}

/// `exp(-c_sq / (2 sigma_sq))`.
pub fn affinity(c_sq: f64, sigma_sq: f64) -> Result<f64> {
    if !(sigma_sq > 0.0) {
        return Err(KsccError::invalid(format!("sigma^2 must be positive, got {sigma_sq}")));
    }
    if !(c_sq >= 0.0) {
        return Err(KsccError::invalid(format!("squared curvature must be >= 0, got {c_sq}")));
    }
    Ok((-c_sq / (2.0 * sigma_sq)).exp())
}

/// Affinities of one sampled tuple against all points; members are 0.
pub fn affinity_column(column: &CurvatureColumn, sigma_sq: f64) -> Result<Vec<f64>> {
    column
        .values()
        .iter()
        .map(|v| match v {
            Some(c) => affinity(*c, sigma_sq),
            None => Ok(0.0),
        })
        .collect()
}

/// Symmetric, nonnegative pairwise weights with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(DMatrix<f64>);

impl WeightMatrix {
    pub fn from_matrix(w: DMatrix<f64>) -> Result<Self> {
        if !w.is_square() {
            return Err(KsccError::invalid("weight matrix must be square"));
        }
        let n = w.nrows();
        for i in 0..n {
            for j in 0..n {
                let v = w[(i, j)];
                if !v.is_finite() || v < 0.0 || v != w[(j, i)] {
                    return Err(KsccError::invalid(format!(
                        "weight matrix must be finite, nonnegative and symmetric (entry ({i}, {j}))"
                    )));
                }
            }
        }
        Ok(WeightMatrix(w))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }
}

/// Sums `a_r(i) * a_r(j)` over the affinity columns, in column order.
///
/// Columns hold zeros at their tuple's own members, so a tuple containing
/// `i` or `j` contributes nothing to `W_ij`. The diagonal is zeroed. Every
/// row is accumulated independently in the same fixed order, which keeps the
/// result bit-identical for any thread count.
pub fn estimate_weights(columns: &[Vec<f64>], n: usize) -> Result<WeightMatrix> {
    if let Some((r, col)) = columns.iter().enumerate().find(|(_, c)| c.len() != n) {
        return Err(KsccError::invalid(format!(
            "affinity column {r} has length {}, expected {n}",
            col.len()
        )));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0_f64; n];
            for col in columns {
                let ai = col[i];
                if ai == 0.0 {
                    continue;
                }
                for (w, &aj) in row.iter_mut().zip(col.iter()) {
                    *w += ai * aj;
                }
            }
            row[i] = 0.0;
            row
        })
        .collect();
    Ok(WeightMatrix(DMatrix::from_fn(n, n, |i, j| rows[i][j])))
}
