//! Independent reference computations shared by the integration tests.
//!
//! Everything here works on explicit feature vectors rather than on kernel
//! matrices, so it checks the library without reusing its arithmetic.
#![allow(dead_code)]

use kscc::nalgebra::{DMatrix, SymmetricEigen};
use kscc::KernelSpec;
use rand::Rng;

/// Explicit feature map of each kernel.
pub fn feature_map(spec: KernelSpec, x: &[f64]) -> Vec<f64> {
    let sq: f64 = x.iter().map(|v| v * v).sum();
    match spec {
        KernelSpec::Linear => x.to_vec(),
        KernelSpec::Spherical => {
            let mut f = x.to_vec();
            f.push(sq);
            f
        }
        KernelSpec::QuadStandard => x.iter().copied().chain(x.iter().map(|v| v * v)).collect(),
        KernelSpec::QuadFull => quad_full_features(x),
        KernelSpec::LissajousCheb => quad_full_features(&[x[0], 2.0 * x[1] * x[1] - 1.0]),
        KernelSpec::TwoView => {
            let a = [x[0], x[1], 1.0];
            let b = [x[2], x[3], 1.0];
            a.iter().flat_map(|u| b.iter().map(move |v| u * v)).collect()
        }
    }
}

/// `(1, sqrt2 x_i, x_i^2, sqrt2 x_i x_j for i < j)`: `(1 + <x,y>)^2` as a dot product.
pub fn quad_full_features(x: &[f64]) -> Vec<f64> {
    let r2 = std::f64::consts::SQRT_2;
    let mut f = vec![1.0];
    f.extend(x.iter().map(|v| r2 * v));
    f.extend(x.iter().map(|v| v * v));
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            f.push(r2 * x[i] * x[j]);
        }
    }
    f
}

pub fn features(spec: KernelSpec, points: &DMatrix<f64>) -> Vec<Vec<f64>> {
    points
        .row_iter()
        .map(|r| feature_map(spec, &r.iter().copied().collect::<Vec<_>>()))
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            d = -d;
        }
        d *= m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    d
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// Squared volume of the simplex on `verts` from the Cayley-Menger determinant.
pub fn cayley_menger_volume_sq(verts: &[Vec<f64>]) -> f64 {
    let m = verts.len();
    let dim = m - 1;
    let mut cm = vec![vec![1.0; m + 1]; m + 1];
    cm[0][0] = 0.0;
    for i in 0..m {
        for j in 0..m {
            cm[i + 1][j + 1] = sq_dist(&verts[i], &verts[j]);
        }
    }
    let sign = if (dim + 1) % 2 == 0 { 1.0 } else { -1.0 };
    sign * det(cm) / (2f64.powi(dim as i32) * factorial(dim).powi(2))
}

/// Squared polar curvature of a simplex: squared diameter times the mean
/// squared polar sine over its vertices.
pub fn polar_curvature_sq_oracle(verts: &[Vec<f64>]) -> f64 {
    let m = verts.len();
    let vol_sq = cayley_menger_volume_sq(verts).max(0.0);
    let scaled = factorial(m - 1).powi(2) * vol_sq;
    let mut diam_sq: f64 = 0.0;
    let mut mean_psin_sq = 0.0;
    for v in 0..m {
        let mut edges = 1.0;
        for w in 0..m {
            if w != v {
                let d = sq_dist(&verts[v], &verts[w]);
                diam_sq = diam_sq.max(d);
                edges *= d;
            }
        }
        mean_psin_sq += scaled / edges / m as f64;
    }
    diam_sq * mean_psin_sq
}

pub fn min_pairwise_dist(verts: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..verts.len() {
        for j in i + 1..verts.len() {
            best = best.min(sq_dist(&verts[i], &verts[j]).sqrt());
        }
    }
    best
}

/// Total squared distance of `verts` to their best-fitting `ell`-flat,
/// from the eigenvalues of the scatter matrix of the centered coordinates.
pub fn flat_residual(verts: &[Vec<f64>], ell: usize) -> f64 {
    let m = verts.len();
    if m == 0 {
        return 0.0;
    }
    let p = verts[0].len();
    let mean: Vec<f64> = (0..p).map(|c| verts.iter().map(|v| v[c]).sum::<f64>() / m as f64).collect();
    let centered = DMatrix::from_fn(m, p, |r, c| verts[r][c] - mean[c]);
    let scatter = centered.transpose() * &centered;
    let mut eig: Vec<f64> = SymmetricEigen::new(scatter).eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig.iter().skip(ell).map(|v| v.max(0.0)).sum()
}

/// Every ordered tuple of `len` distinct indices below `n`, lexicographically.
pub fn ordered_tuples(n: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    fn rec(n: usize, len: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            if !cur.contains(&i) {
                cur.push(i);
                rec(n, len, cur, out);
                cur.pop();
            }
        }
    }
    rec(n, len, &mut cur, &mut out);
    out
}

/// Pairwise weights summed over every tuple in `tuples`:
/// `W_ij = sum_J a(i, J) a(j, J)` over tuples containing neither `i` nor `j`,
/// with a zero diagonal.
pub fn exhaustive_weights(n: usize, tuples: &[Vec<usize>], aff: impl Fn(usize, &[usize]) -> f64) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(n, n);
    for t in tuples {
        let a: Vec<Option<f64>> = (0..n).map(|i| (!t.contains(&i)).then(|| aff(i, t))).collect();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if let (Some(ai), Some(aj)) = (a[i], a[j]) {
                    w[(i, j)] += ai * aj;
                }
            }
        }
    }
    w
}

pub fn random_points<R: Rng>(rng: &mut R, n: usize, dim: usize, half_width: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, dim, |_, _| rng.random_range(-half_width..half_width))
}

/// Relative difference scaled by the larger magnitude (absolute below 1).
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Strict relative difference, for values that may be small.
pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
