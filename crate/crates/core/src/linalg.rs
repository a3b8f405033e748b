// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

//! Small dense linear algebra.
//!
//! Every matrix in this crate is tiny (a dozen rows at most), so the routines
//! favour robustness over speed: singular values come from one-sided Jacobi,
//! which is accurate for small singular values and fully deterministic.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

#[cfg(not(feature = "std"))]
use crate::math::FloatFuncs;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from rows; all rows must have the same length.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix { rows: rows.len(), cols, data }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|r| dot(self.row(r), v)).collect()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }

    /// Copy with every nonzero row scaled to unit Euclidean norm.
    pub fn row_normalized(&self) -> Matrix {
        let mut out = self.clone();
        for r in 0..out.rows {
            let n = norm(out.row(r));
            if n > 0.0 {
                out.row_mut(r).iter_mut().for_each(|v| *v /= n);
            }
        }
        out
    }

    /// Appends a row, growing the matrix.
    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn svd(&self) -> Svd {
        Svd::new(self)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    // scaled to avoid overflow on the far-away kite points
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let s: f64 = a.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * s.sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d)
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add_scaled(a: &[f64], scale: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + scale * y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Cross product in R^3.
pub fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Singular value decomposition `A = U diag(s) V^T` with `k = min(m, n)`
/// singular values in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

const JACOBI_SWEEPS: usize = 60;

impl Svd {
    pub fn new(a: &Matrix) -> Svd {
        if a.rows >= a.cols {
            let (u, s, v) = one_sided_jacobi(a);
            Svd { u, singular_values: s, v }
        } else {
            let (u, s, v) = one_sided_jacobi(&a.transpose());
            Svd { u: v, singular_values: s, v: u }
        }
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn sigma_min(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }

    /// Pseudo-inverse applied to `b`, dropping singular values below
    /// `rcond * sigma_max`. Gives the least-squares solution for tall systems
    /// and the minimum-norm solution for wide ones.
    pub fn solve(&self, b: &[f64], rcond: f64) -> Vec<f64> {
        let cutoff = rcond * self.sigma_max();
        let n = self.v.rows;
        let mut x = vec![0.0; n];
        for (k, &s) in self.singular_values.iter().enumerate() {
            if s <= cutoff || s == 0.0 {
                continue;
            }
            let coeff: f64 = (0..self.u.rows).map(|r| self.u[(r, k)] * b[r]).sum::<f64>() / s;
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += coeff * self.v[(i, k)];
            }
        }
        x
    }

    pub fn condition_number(&self) -> f64 {
        let min = self.sigma_min();
        if min == 0.0 {
            f64::INFINITY
        } else {
            self.sigma_max() / min
        }
    }
}

/// One-sided Jacobi on a tall matrix. Returns `(U, s, V)` sorted descending.
fn one_sided_jacobi(a: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let (m, n) = (a.rows, a.cols);
    debug_assert!(m >= n);
    // work column-major for cache-friendly column rotations
    let mut cols: Vec<Vec<f64>> = (0..n).map(|c| a.column(c)).collect();
    let mut v = Matrix::identity(n);

    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let alpha = dot(&cols[i], &cols[i]);
                let beta = dot(&cols[j], &cols[j]);
                let gamma = dot(&cols[i], &cols[j]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(j);
                for (p, q) in left[i].iter_mut().zip(right[0].iter_mut()) {
                    let (ai, aj) = (*p, *q);
                    *p = c * ai - s * aj;
                    *q = s * ai + c * aj;
                }
                for r in 0..n {
                    let vi = v[(r, i)];
                    let vj = v[(r, j)];
                    v[(r, i)] = c * vi - s * vj;
                    v[(r, j)] = s * vi + c * vj;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sigmas: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    order.sort_by(|&a, &b| sigmas[b].total_cmp(&sigmas[a]).then(a.cmp(&b)));

    let mut u = Matrix::zeros(m, n);
    let mut vs = Matrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (k, &idx) in order.iter().enumerate() {
        let sigma = sigmas[idx];
        s.push(sigma);
        for r in 0..m {
            u[(r, k)] = if sigma > 0.0 { cols[idx][r] / sigma } else { 0.0 };
        }
        for r in 0..n {
            vs[(r, k)] = v[(r, idx)];
        }
    }
    (u, s, vs)
}

/// Smallest singular value, `min(m, n)`-th in descending order.
pub fn smallest_singular_value(a: &Matrix) -> f64 {
    if a.rows == 0 || a.cols == 0 {
        return 0.0;
    }
    a.svd().sigma_min()
}

/// A unit vector spanning the null space of a full-row-rank `(u-1) x u`
/// matrix. The sign is not normalized.
pub fn null_vector(a: &Matrix) -> Vec<f64> {
    let n = a.cols;
    // orthonormal basis of the row space via the SVD of A^T
    let svd = a.svd();
    let basis: Vec<Vec<f64>> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > 0.0)
        .map(|k| svd.v.column(k))
        .collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for e in 0..n {
        let mut w = vec![0.0; n];
        w[e] = 1.0;
        for b in &basis {
            let p = b[e];
            for i in 0..n {
                w[i] -= p * b[i];
            }
        }
        let len = norm(&w);
        if best.as_ref().map_or(true, |(l, _)| len > *l) {
            best = Some((len, w));
        }
    }
    let (len, mut w) = best.expect("matrix has columns");
    // one re-orthogonalization pass for accuracy
    for b in &basis {
        let p = dot(b, &w);
        for i in 0..n {
            w[i] -= p * b[i];
        }
    }
    let len2 = norm(&w);
    let l = if len2 > 0.0 { len2 } else { len };
    w.iter_mut().for_each(|x| *x /= l);
    w
}

/// Cholesky factor `L` with `A = L L^T`, or `None` if `A` is not positive definite.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.rows;
    if a.cols != n {
        return None;
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Inverse of a symmetric positive definite matrix from its Cholesky factor.
pub fn spd_inverse(a: &Matrix) -> Option<Matrix> {
    let l = cholesky(a)?;
    let n = a.rows;
    let mut inv = Matrix::zeros(n, n);
    for col in 0..n {
        // forward solve L y = e_col
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        // back solve L^T x = y
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        for i in 0..n {
            inv[(i, col)] = x[i];
        }
    }
    // symmetrize away rounding
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            inv[(i, j)] = m;
            inv[(j, i)] = m;
        }
    }
    Some(inv)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues ascending; eigenvectors are the matching columns.
pub fn symmetric_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows;
    assert_eq!(n, a.cols);
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    for _ in 0..JACOBI_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        if off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[(a, a)].total_cmp(&m[(b, b)]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, k)] = v[(r, i)];
        }
    }
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn identity_sigma_min() {
        assert_eq!(smallest_singular_value(&Matrix::identity(3)), 1.0);
    }

    #[test]
    fn rank_deficient_diagonal() {
        let m = Matrix::from_diagonal(&[2.0, 1.0, 0.0]);
        assert_eq!(smallest_singular_value(&m), 0.0);
    }

    #[test]
    fn svd_reconstructs() {
        let a = Matrix::from_rows(&[&[1.0, 2.0, 0.5], &[-0.3, 4.0, 1.0]]);
        let svd = a.svd();
        for r in 0..2 {
            for c in 0..3 {
                let mut acc = 0.0;
                for k in 0..2 {
                    acc += svd.u[(r, k)] * svd.singular_values[k] * svd.v[(c, k)];
                }
                assert!(approx(acc, a[(r, c)], 1e-13));
            }
        }
    }

    #[test]
    fn least_squares_and_min_norm() {
        // x + y = 2 has min-norm solution (1, 1)
        let a = Matrix::from_rows(&[&[1.0, 1.0]]);
        let x = a.svd().solve(&[2.0], 1e-14);
        assert!(approx(x[0], 1.0, 1e-14) && approx(x[1], 1.0, 1e-14));
        // overdetermined: fit of y = c through 1, 3 gives 2
        let a = Matrix::from_rows(&[&[1.0], &[1.0]]);
        let x = a.svd().solve(&[1.0, 3.0], 1e-14);
        assert!(approx(x[0], 2.0, 1e-14));
    }

    #[test]
    fn null_vector_of_row() {
        let a = Matrix::from_rows(&[&[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0]]);
        let v = null_vector(&a);
        assert!(a.mul_vec(&v).iter().all(|r| r.abs() < 1e-14));
        assert!(approx(norm(&v), 1.0, 1e-14));
    }

    #[test]
    fn spd_inverse_and_cholesky() {
        let q = Matrix::from_rows(&[&[4.0, 1.0], &[1.0, 3.0]]);
        let inv = spd_inverse(&q).unwrap();
        let id = q.mul(&inv);
        for i in 0..2 {
            for j in 0..2 {
                assert!(approx(id[(i, j)], if i == j { 1.0 } else { 0.0 }, 1e-14));
            }
        }
        assert!(cholesky(&Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]])).is_none());
    }

    #[test]
    fn symmetric_eigen_2x2() {
        let a = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let (vals, vecs) = symmetric_eigen(&a);
        assert!(approx(vals[0], 1.0, 1e-14) && approx(vals[1], 3.0, 1e-14));
        let v0 = vecs.column(0);
        assert!(approx(v0[0].abs(), v0[1].abs(), 1e-14));
    }
}
