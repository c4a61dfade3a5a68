use std::ops::{Index, IndexMut, Mul};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::vec3::Vec3;

/// Pivot threshold on the row/column-equilibrated matrix below which an
/// inversion is reported singular. Equilibration makes the test independent of
/// the length unit the caller works in.
pub const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("leading block is singular")]
    SingularBlock,
}

/// Dense row-major matrix with dimensions fixed at compile time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat<const R: usize, const C: usize> {
    pub data: [[f64; C]; R],
}

pub type Mat3 = Mat<3, 3>;
pub type Mat6 = Mat<6, 6>;

impl<const R: usize, const C: usize> Default for Mat<R, C> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const R: usize, const C: usize> Mat<R, C> {
    pub const fn zeros() -> Self {
        Self { data: [[0.0; C]; R] }
    }

    pub const fn from_rows(data: [[f64; C]; R]) -> Self {
        Self { data }
    }

    pub const fn rows(&self) -> usize {
        R
    }

    pub const fn cols(&self) -> usize {
        C
    }

    pub fn row(&self, i: usize) -> [f64; C] {
        self.data[i]
    }

    pub fn col(&self, j: usize) -> [f64; R] {
        std::array::from_fn(|i| self.data[i][j])
    }

    pub fn transpose(&self) -> Mat<C, R> {
        let mut t = Mat::<C, R>::zeros();
        for i in 0..R {
            for j in 0..C {
                t.data[j][i] = self.data[i][j];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        for row in out.data.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut out = *self;
        for i in 0..R {
            for j in 0..C {
                out.data[i][j] -= o.data[i][j];
            }
        }
        out
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.data
            .iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().flatten().all(|v| v.is_finite())
    }

    pub fn mul_vec(&self, x: &[f64; C]) -> [f64; R] {
        std::array::from_fn(|i| self.data[i].iter().zip(x).map(|(a, b)| a * b).sum())
    }

    /// Copies the `BR x BC` block whose top-left corner is at `(r0, c0)`.
    pub fn block<const BR: usize, const BC: usize>(&self, r0: usize, c0: usize) -> Mat<BR, BC> {
        let mut b = Mat::<BR, BC>::zeros();
        for i in 0..BR {
            for j in 0..BC {
                b.data[i][j] = self.data[r0 + i][c0 + j];
            }
        }
        b
    }

    pub fn set_block<const BR: usize, const BC: usize>(
        &mut self,
        r0: usize,
        c0: usize,
        b: &Mat<BR, BC>,
    ) {
        for i in 0..BR {
            for j in 0..BC {
                self.data[r0 + i][c0 + j] = b.data[i][j];
            }
        }
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.data.iter().map(|r| r.to_vec()).collect()
    }
}

impl<const N: usize> Mat<N, N> {
    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.data[i][i] = 1.0;
        }
        m
    }

    pub fn diag(d: [f64; N]) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.data[i][i] = d[i];
        }
        m
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting on the
    /// row- and column-equilibrated matrix.
    pub fn try_inverse(&self) -> Result<Self, LinalgError> {
        if !self.is_finite() {
            return Err(LinalgError::SingularMatrix);
        }
        let mut a = self.data;
        let mut row_scale = [1.0; N];
        for i in 0..N {
            let m = a[i].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if m == 0.0 {
                return Err(LinalgError::SingularMatrix);
            }
            row_scale[i] = 1.0 / m;
            for v in a[i].iter_mut() {
                *v *= row_scale[i];
            }
        }
        let mut col_scale = [1.0; N];
        for j in 0..N {
            let m = (0..N).fold(0.0_f64, |m, i| m.max(a[i][j].abs()));
            if m == 0.0 {
                return Err(LinalgError::SingularMatrix);
            }
            col_scale[j] = 1.0 / m;
            for row in a.iter_mut() {
                row[j] *= col_scale[j];
            }
        }

        let mut inv = Self::identity().data;
        for k in 0..N {
            let p = (k..N)
                .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
                .unwrap_or(k);
            if a[p][k].abs() < PIVOT_TOL {
                return Err(LinalgError::SingularMatrix);
            }
            a.swap(k, p);
            inv.swap(k, p);
            let piv = a[k][k];
            for j in 0..N {
                a[k][j] /= piv;
                inv[k][j] /= piv;
            }
            for i in 0..N {
                if i == k {
                    continue;
                }
                let f = a[i][k];
                if f == 0.0 {
                    continue;
                }
                for j in 0..N {
                    a[i][j] -= f * a[k][j];
                    inv[i][j] -= f * inv[k][j];
                }
            }
        }
        // A = Dr^-1 A'' Dc^-1  =>  A^-1 = Dc A''^-1 Dr
        for i in 0..N {
            for j in 0..N {
                inv[i][j] *= col_scale[i] * row_scale[j];
            }
        }
        Ok(Self { data: inv })
    }
}

impl<const R: usize, const K: usize, const C: usize> Mul<&Mat<K, C>> for &Mat<R, K> {
    type Output = Mat<R, C>;
    fn mul(self, o: &Mat<K, C>) -> Mat<R, C> {
        let mut out = Mat::<R, C>::zeros();
        for i in 0..R {
            for k in 0..K {
                let a = self.data[i][k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..C {
                    out.data[i][j] += a * o.data[k][j];
                }
            }
        }
        out
    }
}

impl<const R: usize, const K: usize, const C: usize> Mul<Mat<K, C>> for Mat<R, K> {
    type Output = Mat<R, C>;
    fn mul(self, o: Mat<K, C>) -> Mat<R, C> {
        &self * &o
    }
}

impl<const R: usize, const C: usize> Index<(usize, usize)> for Mat<R, C> {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i][j]
    }
}

impl<const R: usize, const C: usize> IndexMut<(usize, usize)> for Mat<R, C> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i][j]
    }
}

impl<const R: usize, const C: usize> Serialize for Mat<R, C> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_vecs().serialize(s)
    }
}

impl<'de, const R: usize, const C: usize> Deserialize<'de> for Mat<R, C> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        if rows.len() != R || rows.iter().any(|r| r.len() != C) {
            return Err(serde::de::Error::custom(format!(
                "expected a {R}x{C} matrix"
            )));
        }
        let mut m = Mat::<R, C>::zeros();
        for (i, r) in rows.iter().enumerate() {
            m.data[i].copy_from_slice(r);
        }
        Ok(m)
    }
}

impl Mat3 {
    pub fn from_cols(a: Vec3, b: Vec3, c: Vec3) -> Self {
        Self::from_rows([[a.x, b.x, c.x], [a.y, b.y, c.y], [a.z, b.z, c.z]])
    }

    pub fn mul_v(&self, v: Vec3) -> Vec3 {
        Vec3::from_array(self.mul_vec(&v.to_array()))
    }

    pub fn rot_x(a: f64) -> Self {
        let (s, c) = a.sin_cos();
        Self::from_rows([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    }

    pub fn rot_y(a: f64) -> Self {
        let (s, c) = a.sin_cos();
        Self::from_rows([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    }

    pub fn rot_z(a: f64) -> Self {
        let (s, c) = a.sin_cos();
        Self::from_rows([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Adjugate (transposed cofactor matrix): `M · adj(M) = det(M) I`.
    pub fn adjugate(&self) -> Self {
        let m = &self.data;
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        Self::from_rows([
            [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
            [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
            [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
        ])
    }
}

/// Skew-symmetric cross-product matrix: `skew(a) * b == a × b`.
pub fn skew(a: Vec3) -> Mat3 {
    Mat3::from_rows([[0.0, -a.z, a.y], [a.z, 0.0, -a.x], [-a.y, a.x, 0.0]])
}

pub fn det3(m: &Mat3) -> f64 {
    let d = &m.data;
    d[0][0] * (d[1][1] * d[2][2] - d[1][2] * d[2][1]) - d[0][1] * (d[1][0] * d[2][2] - d[1][2] * d[2][0])
        + d[0][2] * (d[1][0] * d[2][1] - d[1][1] * d[2][0])
}

/// Inverse of a 6x6 matrix; the constraint-embedded forward Jacobian when
/// applied to an inverse Jacobian.
pub fn invert6(gt: &Mat6) -> Result<Mat6, LinalgError> {
    gt.try_inverse()
}

/// Result of the 2x2 block inversion of a 6x6 matrix partitioned into 3x3
/// blocks `[[A, B], [C, D]]` with `A` nonsingular.
#[derive(Debug, Clone, Copy)]
pub struct BlockInverse {
    pub full: Mat6,
}

impl BlockInverse {
    /// Upper-left block of the inverse (maps actuated rates to linear velocity).
    pub fn ja1(&self) -> Mat3 {
        self.full.block::<3, 3>(0, 0)
    }

    /// Lower-left block of the inverse (maps actuated rates to angular velocity).
    pub fn ja2(&self) -> Mat3 {
        self.full.block::<3, 3>(3, 0)
    }
}

/// Inverse through the Schur complement of the leading 3x3 block.
pub fn block_invert(gt: &Mat6) -> Result<BlockInverse, LinalgError> {
    let a = gt.block::<3, 3>(0, 0);
    let b = gt.block::<3, 3>(0, 3);
    let c = gt.block::<3, 3>(3, 0);
    let d = gt.block::<3, 3>(3, 3);
    let a_inv = a.try_inverse().map_err(|_| LinalgError::SingularBlock)?;
    let ca = &c * &a_inv;
    let schur = d.sub(&(&ca * &b));
    let schur_inv = schur.try_inverse().map_err(|_| LinalgError::SingularMatrix)?;
    let ab = &a_inv * &b;
    let lower_left = (&schur_inv * &ca).scale(-1.0);
    let upper_left = {
        let mut ul = a_inv;
        let corr = &ab * &(&schur_inv * &ca);
        for i in 0..3 {
            for j in 0..3 {
                ul.data[i][j] += corr.data[i][j];
            }
        }
        ul
    };
    let upper_right = (&ab * &schur_inv).scale(-1.0);
    let mut full = Mat6::zeros();
    full.set_block(0, 0, &upper_left);
    full.set_block(0, 3, &upper_right);
    full.set_block(3, 0, &lower_left);
    full.set_block(3, 3, &schur_inv);
    Ok(BlockInverse { full })
}

/// Largest eigenvalue of a symmetric 3x3 matrix (trigonometric cubic roots).
fn sym3_max_eigenvalue(a: &Mat3) -> f64 {
    let d = &a.data;
    let p1 = d[0][1] * d[0][1] + d[0][2] * d[0][2] + d[1][2] * d[1][2];
    let q = (d[0][0] + d[1][1] + d[2][2]) / 3.0;
    let p2 = (d[0][0] - q).powi(2) + (d[1][1] - q).powi(2) + (d[2][2] - q).powi(2) + 2.0 * p1;
    if p2 == 0.0 {
        return q;
    }
    let p = (p2 / 6.0).sqrt();
    let mut b = *a;
    for i in 0..3 {
        b.data[i][i] -= q;
    }
    let r = (det3(&b) / (p * p * p) / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    q + 2.0 * p * phi.cos()
}

fn sym2_max_eigenvalue(a: &Mat<2, 2>) -> f64 {
    let d = &a.data;
    let m = 0.5 * (d[0][0] + d[1][1]);
    let h = 0.5 * (d[0][0] - d[1][1]);
    m + (h * h + d[0][1] * d[1][0]).max(0.0).sqrt()
}

/// Square matrices whose 2-norm condition number is supported.
pub trait Cond2 {
    fn cond2(&self) -> f64;
}

fn finish_cond(smax: f64, smax_adj: f64, det: f64) -> f64 {
    if !det.is_finite() || det == 0.0 || !smax.is_finite() || smax_adj == 0.0 {
        return f64::INFINITY;
    }
    // sigma_min = |det| / sigma_max(adj)
    let smin = det.abs() / smax_adj;
    if smin < 1e-300 {
        return f64::INFINITY;
    }
    (smax / smin).max(1.0)
}

impl Cond2 for Mat3 {
    fn cond2(&self) -> f64 {
        if !self.is_finite() {
            return f64::INFINITY;
        }
        let smax = sym3_max_eigenvalue(&(&self.transpose() * self)).max(0.0).sqrt();
        let adj = self.adjugate();
        let smax_adj = sym3_max_eigenvalue(&(&adj.transpose() * &adj)).max(0.0).sqrt();
        finish_cond(smax, smax_adj, det3(self))
    }
}

impl Cond2 for Mat<2, 2> {
    fn cond2(&self) -> f64 {
        if !self.is_finite() {
            return f64::INFINITY;
        }
        let d = &self.data;
        let smax = sym2_max_eigenvalue(&(&self.transpose() * self)).max(0.0).sqrt();
        let adj = Mat::<2, 2>::from_rows([[d[1][1], -d[0][1]], [-d[1][0], d[0][0]]]);
        let smax_adj = sym2_max_eigenvalue(&(&adj.transpose() * &adj)).max(0.0).sqrt();
        finish_cond(smax, smax_adj, d[0][0] * d[1][1] - d[0][1] * d[1][0])
    }
}

/// Ratio of the largest to the smallest singular value; `+inf` when the
/// smallest singular value vanishes.
pub fn cond2<M: Cond2>(m: &M) -> f64 {
    m.cond2()
}

/// Orthonormal basis of `{x : A x = 0}` for a system of at most six rows.
///
/// Column-pivoted Gauss-Jordan reduction with pivot tolerance
/// `1e-10 * ||A||_inf`, followed by two passes of modified Gram-Schmidt.
pub fn nullspace_small(rows: &[[f64; 6]]) -> Vec<[f64; 6]> {
    assert!(rows.len() <= 6, "nullspace_small supports at most six rows");
    let mut a: Vec<[f64; 6]> = rows.to_vec();
    let norm = a
        .iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let tol = 1e-10 * norm;
    let m = a.len();
    let mut perm: [usize; 6] = [0, 1, 2, 3, 4, 5];
    let mut rank = 0;
    while rank < m {
        // full pivot search over the remaining submatrix
        let mut best = (rank, rank, 0.0_f64);
        for (i, row) in a.iter().enumerate().skip(rank) {
            for (j, v) in row.iter().enumerate().skip(rank) {
                if v.abs() > best.2 {
                    best = (i, j, v.abs());
                }
            }
        }
        if best.2 <= tol {
            break;
        }
        a.swap(rank, best.0);
        if best.1 != rank {
            for row in a.iter_mut() {
                row.swap(rank, best.1);
            }
            perm.swap(rank, best.1);
        }
        let piv = a[rank][rank];
        for v in a[rank].iter_mut() {
            *v /= piv;
        }
        let pivot_row = a[rank];
        for (i, row) in a.iter_mut().enumerate() {
            if i == rank {
                continue;
            }
            let f = row[rank];
            if f != 0.0 {
                for j in 0..6 {
                    row[j] -= f * pivot_row[j];
                }
            }
        }
        rank += 1;
    }

    let mut basis: Vec<[f64; 6]> = Vec::with_capacity(6 - rank);
    for free in rank..6 {
        let mut y = [0.0; 6];
        y[free] = 1.0;
        for (i, row) in a.iter().enumerate().take(rank) {
            y[i] = -row[free];
        }
        let mut x = [0.0; 6];
        for k in 0..6 {
            x[perm[k]] = y[k];
        }
        basis.push(x);
    }

    let dot = |u: &[f64; 6], v: &[f64; 6]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    for _pass in 0..2 {
        for i in 0..basis.len() {
            for j in 0..i {
                let p = dot(&basis[i], &basis[j]);
                let bj = basis[j];
                for k in 0..6 {
                    basis[i][k] -= p * bj[k];
                }
            }
            let n = dot(&basis[i], &basis[i]).sqrt();
            for v in basis[i].iter_mut() {
                *v /= n;
            }
        }
    }
    basis
}
