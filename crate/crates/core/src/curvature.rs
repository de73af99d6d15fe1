//! Squared polar curvature of `ell + 2` feature points, computed from the
//! kernel matrix alone.
//!
//! For an index set `I` of `ell + 2` points with squared feature distances
//! `d_ij = K_ii + K_jj - 2 K_ij`,
//!
//! ```text
//! c_p^2(I) = max_ij d_ij / (ell + 2) * sum_i det(K_II + 1) / prod_{j != i} d_ij
//! ```
//!
//! where `K_II + 1` adds one to every entry. The determinant is taken on the
//! kernel re-centered at a member `a` of the set,
//! `K'_uv = K_uv - K_ua - K_va + K_aa`. That makes the feature-space origin
//! a vertex of the simplex, so `det(K'_II + 1)` is exactly
//! `((ell + 1)! * Vol)^2`, independent of where the simplex sits relative to
//! the (implicit) origin. Eliminating the anchor's zero row reduces it to
//! the Gram determinant of the edge vectors from the anchor, which is what
//! gets factored: adding one to entries of order `d_ij` would discard the
//! low digits of short edges.

use nalgebra::DMatrix;

use crate::dd::Dd;
use crate::error::{KsccError, Result};
use crate::kernels::KernelMatrix;

/// Relative threshold (of the largest squared feature norm) below which two
/// feature points count as coinciding.
pub const DUPLICATE_REL_TOL: f64 = 1e-12;

/// Negative determinants down to `-NEGATIVE_DET_REL_TOL * scale` are
/// rounding noise and clamp to zero; anything below that means `K` is not
/// positive semidefinite. See [`det_scale`].
pub const NEGATIVE_DET_REL_TOL: f64 = 1e-9;

/// Below this magnitude the adjugate is built from explicit cofactors instead
/// of `det(A) * A^-1`.
const ADJUGATE_DET_FLOOR: f64 = 1e-300;

/// `ell + 1` distinct point indices spanning a candidate flat.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TupleIndex(Vec<usize>);

impl TupleIndex {
    /// Validates that `indices` are distinct, in `[0, n)` and that there are
    /// at least two of them.
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.len() < 2 {
            return Err(KsccError::invalid("a tuple needs at least 2 indices (ell >= 1)"));
        }
        check_indices(&indices, n)?;
        Ok(TupleIndex(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    /// Flat dimension spanned by the tuple.
    pub fn ell(&self) -> usize {
        self.0.len() - 1
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(&i)
    }
}

fn check_indices(indices: &[usize], n: usize) -> Result<()> {
    for (pos, &i) in indices.iter().enumerate() {
        if i >= n {
            return Err(KsccError::invalid(format!("index {i} out of range for {n} points")));
        }
        if indices[..pos].contains(&i) {
            return Err(KsccError::invalid(format!("index {i} repeated in tuple")));
        }
    }
    Ok(())
}

/// Squared curvatures of one sampled tuple against every other point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureColumn {
    tuple: TupleIndex,
    /// `None` at the tuple's own members.
    values: Vec<Option<f64>>,
}

impl CurvatureColumn {
    pub fn tuple(&self) -> &TupleIndex {
        &self.tuple
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.values[i]
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    /// The `N - ell - 1` curvatures of non-member points.
    pub fn included(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().filter_map(|v| *v)
    }
}

/// `K'_uv` in double-double.
///
/// Kernel entries can be far larger than the result when points sit close
/// together away from the feature-space origin, and the volume determinant
/// of a nearly flat simplex amplifies whatever is lost here.
fn re_centered(k: &KernelMatrix, u: usize, v: usize, anchor: usize) -> Dd {
    Dd::sum4(k.get(u, v), k.get(anchor, anchor), k.get(u, anchor), k.get(v, anchor))
}

/// Determinant by Gaussian elimination with partial pivoting.
fn lu_determinant(mut a: Vec<Vec<Dd>>) -> Dd {
    let n = a.len();
    let mut det = Dd::from(1.0);
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().hi.total_cmp(&a[y][c].abs().hi)).unwrap_or(c);
        if a[p][c].hi == 0.0 {
            return Dd::ZERO;
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        let pivot_row = a[c].clone();
        det = det * pivot_row[c];
        for row in &mut a[c + 1..] {
            let f = row[c] / pivot_row[c];
            for (x, &p) in row[c + 1..].iter_mut().zip(&pivot_row[c + 1..]) {
                *x = *x - f * p;
            }
        }
    }
    det
}

/// Lower Cholesky factor, or `None` unless the matrix is numerically
/// positive definite.
fn cholesky(a: &[Vec<Dd>]) -> Option<Vec<Vec<Dd>>> {
    let n = a.len();
    let mut l = vec![vec![Dd::ZERO; n]; n];
    for r in 0..n {
        for c in 0..=r {
            let acc = (0..c).fold(a[r][c], |acc, t| acc - l[r][t] * l[c][t]);
            if r == c {
                if acc.hi <= 0.0 {
                    return None;
                }
                l[r][r] = dd_sqrt(acc);
            } else {
                l[r][c] = acc / l[c][c];
            }
        }
    }
    Some(l)
}

fn dd_sqrt(x: Dd) -> Dd {
    // one Newton step from the double-precision root
    let y = Dd::from(x.hi.sqrt());
    y + (x - y * y) / (Dd::from(2.0) * y)
}

/// Magnitude against which a volume determinant's sign is judged: the
/// larger of the Hadamard bound (product of the edge lengths squared at the
/// anchor) and the change a unit-relative perturbation of `K` causes,
/// `max K_ii * diam^(2 ell)`.
fn det_scale(hadamard: f64, max_diag: f64, diam_sq: f64, ell: usize) -> f64 {
    hadamard.max(max_diag * diam_sq.powi(ell as i32))
}

/// Clamps a slightly negative volume determinant to zero, or reports a
/// kernel matrix that is not positive semidefinite.
fn clamp_det(det: f64, scale: f64) -> Result<f64> {
    if det >= 0.0 {
        Ok(det)
    } else if -det <= NEGATIVE_DET_REL_TOL * scale {
        Ok(0.0)
    } else {
        Err(KsccError::Numerical(format!(
            "simplex volume determinant {det:e} is negative beyond rounding \
             (scale {scale:e}); the kernel matrix is not positive semidefinite"
        )))
    }
}

/// Squared polar curvature of the feature points indexed by `indices`
/// (`ell + 2` of them).
///
/// Returns 0 when two of the points coincide in feature space.
pub fn polar_curvature_sq(k: &KernelMatrix, indices: &[usize]) -> Result<f64> {
    let m = indices.len();
    if m < 3 {
        return Err(KsccError::invalid("polar curvature needs at least 3 points (ell >= 1)"));
    }
    check_indices(indices, k.n())?;
    let eps = DUPLICATE_REL_TOL * k.max_diag();

    let mut dist = DMatrix::<f64>::zeros(m, m);
    let mut diam = 0.0_f64;
    for a in 0..m {
        for b in 0..a {
            let d = k.sq_dist(indices[a], indices[b]);
            if d <= eps {
                return Ok(0.0);
            }
            dist[(a, b)] = d;
            dist[(b, a)] = d;
            diam = diam.max(d);
        }
    }

    let anchor = indices[0];
    let edges = &indices[1..];
    let gram: Vec<Vec<Dd>> =
        edges.iter().map(|&u| edges.iter().map(|&v| re_centered(k, u, v, anchor)).collect()).collect();
    let hadamard: f64 = (1..m).map(|b| dist[(0, b)]).product();
    let scale = det_scale(hadamard, k.max_diag(), diam, m - 2);
    let det = clamp_det(lu_determinant(gram).to_f64(), scale)?;
    if det == 0.0 {
        return Ok(0.0);
    }

    let sum: f64 = (0..m)
        .map(|a| {
            let denom: f64 = (0..m).filter(|&b| b != a).map(|b| dist[(a, b)]).product();
            det / denom
        })
        .sum();
    Ok(diam * sum / m as f64)
}

/// Determinant and adjugate of a small square matrix.
///
/// Uses `adj(A) = det(A) A^-1` when the determinant is comfortably
/// representable, explicit cofactors otherwise.
pub(crate) fn det_and_adjugate(a: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
    let n = a.nrows();
    let lu = a.clone().lu();
    let det = lu.determinant();
    if det.abs() >= ADJUGATE_DET_FLOOR {
        if let Some(inv) = lu.try_inverse() {
            return (det, inv * det);
        }
    }
    if n == 1 {
        return (det, DMatrix::from_element(1, 1, 1.0));
    }
    let mut adj = DMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let minor = a.clone().remove_row(r).remove_column(c);
            let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
            // adj is the transposed cofactor matrix
            adj[(c, r)] = sign * minor.lu().determinant();
        }
    }
    (det, adj)
}

/// Squared polar curvature of `{i} ∪ J` for every point `i` outside `J`.
///
/// Factors the edge Gram matrix of `J` once, so each point costs a single
/// `O(ell^2)` triangular solve (or cofactor expansion when the tuple itself
/// is degenerate).
pub fn curvature_column(k: &KernelMatrix, tuple: &TupleIndex) -> Result<CurvatureColumn> {
    let n = k.n();
    let j = tuple.indices();
    let m = j.len();
    if n <= m {
        return Err(KsccError::TooFewPoints { n, ell: tuple.ell() });
    }
    check_indices(j, n)?;
    let eps = DUPLICATE_REL_TOL * k.max_diag();
    let anchor = j[0];

    let mut values: Vec<Option<f64>> = vec![Some(0.0); n];
    for &u in j {
        values[u] = None;
    }

    let mut diam_j = 0.0_f64;
    let mut prod_j = vec![1.0_f64; m];
    let mut coincide = false;
    for a in 0..m {
        for b in 0..a {
            let d = k.sq_dist(j[a], j[b]);
            coincide |= d <= eps;
            diam_j = diam_j.max(d);
            prod_j[a] *= d;
            prod_j[b] *= d;
        }
    }
    if coincide {
        return Ok(CurvatureColumn { tuple: tuple.clone(), values });
    }

    let edges = &j[1..];
    let core: Vec<Vec<Dd>> =
        edges.iter().map(|&u| edges.iter().map(|&v| re_centered(k, u, v, anchor)).collect()).collect();
    // A well-posed tuple has a positive definite edge Gram block; then each
    // point's determinant is det_J times its squared distance to the flat,
    // read off a triangular solve. The adjugate expansion is the fallback for
    // singular blocks.
    let factor = cholesky(&core);
    let (det_j, adj_j) = match &factor {
        Some(l) => ((0..m - 1).fold(Dd::from(1.0), |acc, a| acc * l[a][a] * l[a][a]), DMatrix::zeros(0, 0)),
        None => {
            let (det, adj) = det_and_adjugate(&DMatrix::from_fn(m - 1, m - 1, |a, b| core[a][b].to_f64()));
            (Dd::from(det), adj)
        }
    };
    let inv_diag: Vec<Dd> = factor.iter().flat_map(|l| (0..m - 1).map(|a| l[a][a].recip())).collect();
    let mut proj = vec![Dd::ZERO; m - 1];

    let mut d_i = vec![0.0_f64; m];
    let mut border = vec![Dd::ZERO; m - 1];
    let k_aa = k.get(anchor, anchor);
    // the point-independent half of each border entry
    let offset: Vec<Dd> = edges.iter().map(|&u| Dd::diff(k_aa, k.get(u, anchor))).collect();
    for (i, slot) in values.iter_mut().enumerate() {
        if slot.is_none() {
            continue;
        }
        let k_ia = k.get(i, anchor);
        let mut dup = false;
        let mut diam = diam_j;
        for a in 0..m {
            let u = j[a];
            let d = k.sq_dist(i, u);
            dup |= d <= eps;
            diam = diam.max(d);
            d_i[a] = d;
            if a > 0 {
                border[a - 1] = Dd::diff(k.get(i, u), k_ia) + offset[a - 1];
            }
        }
        if dup {
            continue;
        }

        let corner = Dd::diff(k.get(i, i), k_ia) + Dd::diff(k_aa, k_ia);
        let raw = match &factor {
            Some(l) => {
                let mut dist_sq = corner;
                for a in 0..m - 1 {
                    let mut acc = border[a];
                    for b in 0..a {
                        acc = acc - l[a][b] * proj[b];
                    }
                    proj[a] = acc * inv_diag[a];
                    dist_sq = dist_sq - proj[a] * proj[a];
                }
                (det_j * dist_sq).to_f64()
            }
            None => {
                let mut quad = 0.0;
                for a in 0..m - 1 {
                    let mut row = 0.0;
                    for b in 0..m - 1 {
                        row += adj_j[(a, b)] * border[b].to_f64();
                    }
                    quad += border[a].to_f64() * row;
                }
                corner.to_f64() * det_j.hi - quad
            }
        };
        // Hadamard bound with the anchor as apex: d(i, a) * prod_{u != a} d(a, u)
        let hadamard = d_i[0] * prod_j[0];
        let scale = det_scale(hadamard, k.max_diag(), diam, m - 1);
        let det = clamp_det(raw, scale)?;
        if det == 0.0 {
            continue;
        }

        let mut inv_sum = 1.0 / d_i.iter().product::<f64>();
        for a in 0..m {
            inv_sum += 1.0 / (d_i[a] * prod_j[a]);
        }
        *slot = Some(diam * det * inv_sum / (m + 1) as f64);
    }
    Ok(CurvatureColumn { tuple: tuple.clone(), values })
}
