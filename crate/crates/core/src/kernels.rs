//! Closed-form kernels, Gram matrices and kernel-block centering.
//!
//! Every kernel here is an explicit dot product `<phi(x), phi(y)>` for a
//! finite-dimensional feature map `phi` under which a family of parametric
//! surfaces becomes a family of flats:
//!
//! | kernel           | `k(x, y)`                                   | `phi(x)`                                   |
//! |------------------|---------------------------------------------|--------------------------------------------|
//! | `linear`         | `<x,y>`                                     | `x`                                        |
//! | `spherical`      | `<x,y> + |x|^2 |y|^2`                       | `(x, |x|^2)`                               |
//! | `quad_standard`  | `<x,y> + <x.^2, y.^2>`                      | `(x, x.^2)`                                |
//! | `quad_full`      | `(1 + <x,y>)^2`                             | all monomials of degree <= 2, sqrt(2)-scaled |
//! | `lissajous_cheb` | `(1 + T1(x1)T1(y1) + T2(x2)T2(y2))^2`       | `quad_full` features of `(T1(x1), T2(x2))` |
//! | `two_view`       | `(x1u1 + y1v1 + 1)(x2u2 + y2v2 + 1)`        | `(x1, y1, 1) ⊗ (x2, y2, 1)`                |

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KsccError, Result};

/// Selector for one of the closed-form kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    Spherical,
    QuadStandard,
    QuadFull,
    LissajousCheb,
    TwoView,
}

impl KernelSpec {
    pub const ALL: [KernelSpec; 6] = [
        KernelSpec::Linear,
        KernelSpec::Spherical,
        KernelSpec::QuadStandard,
        KernelSpec::QuadFull,
        KernelSpec::LissajousCheb,
        KernelSpec::TwoView,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Spherical => "spherical",
            KernelSpec::QuadStandard => "quad_standard",
            KernelSpec::QuadFull => "quad_full",
            KernelSpec::LissajousCheb => "lissajous_cheb",
            KernelSpec::TwoView => "two_view",
        }
    }

    /// Input dimension the kernel requires, or `None` if any dimension works.
    pub fn input_dim(&self) -> Option<usize> {
        match self {
            KernelSpec::LissajousCheb => Some(2),
            KernelSpec::TwoView => Some(4),
            _ => None,
        }
    }

    /// Dimension of the flats that the kernel's target surfaces map onto,
    /// for data in `R^dim`.
    ///
    /// This is one less than the number of affinely independent feature
    /// coordinates, i.e. the dimension of a hypersurface of the feature
    /// image.
    pub fn default_ell(&self, dim: usize) -> usize {
        let ell = match self {
            KernelSpec::Linear => dim.saturating_sub(1),
            KernelSpec::Spherical => dim,
            KernelSpec::QuadStandard => 2 * dim - 1,
            // dim linear terms plus dim * (dim + 1) / 2 quadratic ones
            KernelSpec::QuadFull => dim + dim * (dim + 1) / 2 - 1,
            KernelSpec::LissajousCheb => 4,
            KernelSpec::TwoView => 7,
        };
        ell.max(1)
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self.input_dim() {
            Some(expected) if expected != dim => {
                Err(KsccError::DimensionMismatch { expected, got: dim })
            }
            _ if dim == 0 => Err(KsccError::invalid("points must have at least one coordinate")),
            _ => Ok(()),
        }
    }

    /// Kernel value without dimension checks. Both slices must have the
    /// same length, matching [`KernelSpec::input_dim`].
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            KernelSpec::Linear => dot(x, y),
            KernelSpec::Spherical => dot(x, y) + dot(x, x) * dot(y, y),
            KernelSpec::QuadStandard => {
                x.iter().zip(y).map(|(a, b)| a * b + (a * a) * (b * b)).sum()
            }
            KernelSpec::QuadFull => {
                let s = 1.0 + dot(x, y);
                s * s
            }
            KernelSpec::LissajousCheb => {
                let s = 1.0 + x[0] * y[0] + cheb2(x[1]) * cheb2(y[1]);
                s * s
            }
            KernelSpec::TwoView => {
                (x[0] * y[0] + x[1] * y[1] + 1.0) * (x[2] * y[2] + x[3] * y[3] + 1.0)
            }
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelSpec {
    type Err = KsccError;

    fn from_str(s: &str) -> Result<Self> {
        KernelSpec::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| KsccError::invalid(format!("unknown kernel `{s}`")))
    }
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Chebyshev polynomial of degree 2.
#[inline]
fn cheb2(t: f64) -> f64 {
    2.0 * t * t - 1.0
}

/// Evaluates `k(x, y)` for the given kernel.
pub fn eval_kernel(spec: KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(KsccError::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    spec.check_dim(x.len())?;
    Ok(spec.eval_unchecked(x, y))
}

/// Dense symmetric Gram matrix of a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    entries: DMatrix<f64>,
    max_diag: f64,
}

impl KernelMatrix {
    /// Wraps an existing symmetric matrix. Only squareness and symmetry are
    /// checked; positive semidefiniteness is the caller's responsibility.
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(KsccError::invalid("kernel matrix must be square"));
        }
        let n = entries.nrows();
        for i in 0..n {
            for j in 0..i {
                if entries[(i, j)] != entries[(j, i)] {
                    return Err(KsccError::invalid(format!(
                        "kernel matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let max_diag = entries.diagonal().iter().fold(0.0_f64, |m, &v| m.max(v));
        Ok(KernelMatrix { entries, max_diag })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    /// Largest diagonal entry, i.e. the largest squared feature norm.
    pub fn max_diag(&self) -> f64 {
        self.max_diag
    }

    /// Squared feature-space distance `K_ii + K_jj - 2 K_ij`.
    #[inline]
    pub fn sq_dist(&self, i: usize, j: usize) -> f64 {
        self.get(i, i) + self.get(j, j) - 2.0 * self.get(i, j)
    }

    /// The principal submatrix on `indices` (in the given order).
    pub fn block(&self, indices: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(indices.len(), indices.len(), |a, b| self.get(indices[a], indices[b]))
    }
}

/// Builds the Gram matrix of the rows of `points` (an `N x D` matrix).
///
/// Each unordered pair is evaluated exactly once and mirrored, so the result
/// is exactly symmetric and does not depend on the rayon thread count.
pub fn build_kernel_matrix(spec: KernelSpec, points: &DMatrix<f64>) -> Result<KernelMatrix> {
    let n = points.nrows();
    if n == 0 {
        return Err(KsccError::invalid("cannot build a kernel matrix of zero points"));
    }
    spec.check_dim(points.ncols())?;
    let rows: Vec<Vec<f64>> = points.row_iter().map(|r| r.iter().copied().collect()).collect();

    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| spec.eval_unchecked(&rows[i], &rows[j])).collect())
        .collect();

    let mut entries = DMatrix::zeros(n, n);
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    let max_diag = entries.diagonal().iter().fold(0.0_f64, |m, &v| m.max(v));
    Ok(KernelMatrix { entries, max_diag })
}

/// Double-centers a Gram block: `B - 1B - B1 + 1B1` with `1` the constant
/// matrix of entries `1/m`.
///
/// The result is the Gram matrix of the same feature vectors after
/// subtracting their centroid.
pub fn center_kernel_block(block: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !block.is_square() {
        return Err(KsccError::invalid(format!(
            "cannot center a {}x{} block",
            block.nrows(),
            block.ncols()
        )));
    }
    let m = block.nrows();
    if m == 0 {
        return Ok(block.clone());
    }
    let inv = 1.0 / m as f64;
    let row_means: Vec<f64> = (0..m).map(|i| block.row(i).sum() * inv).collect();
    let col_means: Vec<f64> = (0..m).map(|j| block.column(j).sum() * inv).collect();
    let grand = row_means.iter().sum::<f64>() * inv;
    let mut out = DMatrix::from_fn(m, m, |i, j| {
        block[(i, j)] - row_means[i] - col_means[j] + grand
    });
    // symmetrize away the last-bit asymmetry of the two mean vectors
    for i in 0..m {
        for j in 0..i {
            let v = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn closed_form_examples() {
        assert_eq!(eval_kernel(KernelSpec::Spherical, &[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(eval_kernel(KernelSpec::QuadFull, &[0.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(eval_kernel(KernelSpec::LissajousCheb, &[0.0, 0.0], &[0.0, 0.0]).unwrap(), 4.0);
        assert_eq!(
            eval_kernel(KernelSpec::TwoView, &[1.0, 0.0, 0.0, 1.0], &[0.0, 1.0, 1.0, 0.0]).unwrap(),
            1.0
        );
    }

    #[test]
    fn dimension_guards() {
        assert!(matches!(
            eval_kernel(KernelSpec::LissajousCheb, &[0.0; 3], &[0.0; 3]),
            Err(KsccError::DimensionMismatch { expected: 2, got: 3 })
        ));
        assert!(eval_kernel(KernelSpec::TwoView, &[0.0; 2], &[0.0; 2]).is_err());
        assert!(eval_kernel(KernelSpec::Linear, &[0.0; 2], &[0.0; 3]).is_err());
        let pts = DMatrix::<f64>::zeros(4, 3);
        assert!(build_kernel_matrix(KernelSpec::LissajousCheb, &pts).is_err());
    }

    #[test]
    fn default_flat_dimensions() {
        assert_eq!(KernelSpec::Spherical.default_ell(2), 2);
        assert_eq!(KernelSpec::Spherical.default_ell(3), 3);
        assert_eq!(KernelSpec::QuadFull.default_ell(2), 4);
        assert_eq!(KernelSpec::QuadFull.default_ell(3), 8);
        assert_eq!(KernelSpec::QuadStandard.default_ell(3), 5);
        assert_eq!(KernelSpec::LissajousCheb.default_ell(2), 4);
        assert_eq!(KernelSpec::TwoView.default_ell(4), 7);
    }

    #[test]
    fn names_round_trip() {
        for k in KernelSpec::ALL {
            assert_eq!(k.name().parse::<KernelSpec>().unwrap(), k);
        }
        assert!("gaussian".parse::<KernelSpec>().is_err());
    }

    #[test]
    fn gram_examples() {
        let k = build_kernel_matrix(KernelSpec::Spherical, &dmatrix![1.0, 0.0; 0.0, 1.0]).unwrap();
        assert_eq!(k.as_matrix(), &dmatrix![2.0, 1.0; 1.0, 2.0]);

        let k = build_kernel_matrix(KernelSpec::Linear, &dmatrix![0.0, 0.0; 1.0, 0.0; 0.0, 1.0])
            .unwrap();
        assert_eq!(k.as_matrix(), &DMatrix::from_diagonal(&nalgebra::dvector![0.0, 1.0, 1.0]));

        let k = build_kernel_matrix(KernelSpec::QuadFull, &dmatrix![0.3, -0.7]).unwrap();
        assert_eq!(k.n(), 1);
        assert!(k.get(0, 0) >= 0.0);
    }

    #[test]
    fn centering_examples() {
        assert_eq!(center_kernel_block(&dmatrix![5.0]).unwrap(), dmatrix![0.0]);

        let block = dmatrix![0.0, 0.0, 0.0; 0.0, 1.0, 0.0; 0.0, 0.0, 1.0];
        let centered = center_kernel_block(&block).unwrap();
        let mut ev: Vec<f64> = centered.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((ev[0] - 1.0).abs() < 1e-12);
        assert!((ev[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!(ev[2].abs() < 1e-12);

        // points 0 and 1 coincide
        let pts = dmatrix![0.5, 1.0; 0.5, 1.0; -2.0, 0.25];
        let k = build_kernel_matrix(KernelSpec::Spherical, &pts).unwrap();
        let c = center_kernel_block(k.as_matrix()).unwrap();
        for j in 0..3 {
            assert!((c[(0, j)] - c[(1, j)]).abs() < 1e-12);
        }
        assert!((c[(0, 0)] - c[(1, 1)]).abs() < 1e-12);
        assert!((c[(0, 0)] - c[(0, 1)]).abs() < 1e-12);

        assert!(center_kernel_block(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn from_matrix_rejects_asymmetry() {
        assert!(KernelMatrix::from_matrix(dmatrix![1.0, 2.0; 2.1, 1.0]).is_err());
        assert!(KernelMatrix::from_matrix(DMatrix::zeros(2, 3)).is_err());
        let k = KernelMatrix::from_matrix(dmatrix![1.0, 0.5; 0.5, 3.0]).unwrap();
        assert_eq!(k.max_diag(), 3.0);
        assert_eq!(k.sq_dist(0, 1), 3.0);
    }
}
