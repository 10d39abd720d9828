// SPDX-License-Identifier: MIT OR Apache-2.0

//! Minimal dense and sparse matrix types used by the feature pipeline and the
//! classifiers. Dense matrices are row-major; sparse matrices are CSR with no
//! explicitly stored zeros.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(DenseMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `self * other`
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: other.rows,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                axpy(a, other.row(k), out_row);
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    pub fn empty(n_cols: usize) -> Self {
        CsrMatrix {
            n_rows: 0,
            n_cols,
            indptr: vec![0],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    /// Builds a matrix from per-row `(column, value)` lists. Entries are sorted by
    /// column, duplicates summed, and zeros dropped.
    pub fn from_row_entries(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut m = CsrMatrix::empty(n_cols);
        for row in rows {
            m.push_row(row)?;
        }
        Ok(m)
    }

    pub fn from_dense(d: &DenseMatrix) -> Self {
        let mut m = CsrMatrix::empty(d.cols());
        for i in 0..d.rows() {
            for (j, &v) in d.row(i).iter().enumerate() {
                if v != 0.0 {
                    m.indices.push(j);
                    m.data.push(v);
                }
            }
            m.indptr.push(m.indices.len());
            m.n_rows += 1;
        }
        m
    }

    pub fn push_row(&mut self, mut entries: Vec<(usize, f64)>) -> Result<()> {
        entries.sort_by_key(|&(c, _)| c);
        let mut last: Option<usize> = None;
        let start = self.indices.len();
        for (c, v) in entries {
            if c >= self.n_cols {
                return Err(Error::DimensionMismatch {
                    expected: self.n_cols,
                    actual: c + 1,
                });
            }
            if last == Some(c) {
                *self.data.last_mut().expect("entry present") += v;
            } else {
                self.indices.push(c);
                self.data.push(v);
                last = Some(c);
            }
        }
        // drop zeros produced by cancellation or given explicitly
        let mut w = start;
        for r in start..self.indices.len() {
            if self.data[r] != 0.0 {
                self.indices[w] = self.indices[r];
                self.data[w] = self.data[r];
                w += 1;
            }
        }
        self.indices.truncate(w);
        self.data.truncate(w);
        self.indptr.push(w);
        self.n_rows += 1;
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.data[a..b])
    }

    pub fn row_entries(&self, i: usize) -> Vec<(usize, f64)> {
        let (idx, val) = self.row(i);
        idx.iter().copied().zip(val.iter().copied()).collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, val) = self.row(i);
        match idx.binary_search(&j) {
            Ok(p) => val[p],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                d.set(i, j, v);
            }
        }
        d
    }

    /// Returns a new matrix with each row's values transformed by `f`, which
    /// receives the row's column indices and values.
    pub fn map_rows(&self, mut f: impl FnMut(&[usize], &[f64]) -> Vec<f64>) -> CsrMatrix {
        let mut out = CsrMatrix::empty(self.n_cols);
        for i in 0..self.n_rows {
            let (idx, val) = self.row(i);
            let new_vals = f(idx, val);
            for (&j, v) in idx.iter().zip(new_vals) {
                if v != 0.0 {
                    out.indices.push(j);
                    out.data.push(v);
                }
            }
            out.indptr.push(out.indices.len());
            out.n_rows += 1;
        }
        out
    }

    pub fn select_rows(&self, rows: &[usize]) -> CsrMatrix {
        let mut out = CsrMatrix::empty(self.n_cols);
        for &i in rows {
            let (idx, val) = self.row(i);
            out.indices.extend_from_slice(idx);
            out.data.extend_from_slice(val);
            out.indptr.push(out.indices.len());
            out.n_rows += 1;
        }
        out
    }

    /// `self * x` for a dense `x` of shape `n_cols × k`.
    pub fn mul_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.rows() != self.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                actual: x.rows(),
            });
        }
        let mut out = DenseMatrix::zeros(self.n_rows, x.cols());
        for i in 0..self.n_rows {
            let (idx, val) = self.row(i);
            let out_row = out.row_mut(i);
            for (&j, &v) in idx.iter().zip(val) {
                axpy(v, x.row(j), out_row);
            }
        }
        Ok(out)
    }

    /// `selfᵀ * x` for a dense `x` of shape `n_rows × k`.
    pub fn t_mul_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.rows() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                actual: x.rows(),
            });
        }
        let mut out = DenseMatrix::zeros(self.n_cols, x.cols());
        for i in 0..self.n_rows {
            let (idx, val) = self.row(i);
            let xr = x.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                axpy(v, xr, out.row_mut(j));
            }
        }
        Ok(out)
    }
}

/// Feature matrix handed to classifiers: sparse for the tf-idf pipelines and
/// dense after dimensionality reduction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Features {
    Sparse(CsrMatrix),
    Dense(DenseMatrix),
}

impl Features {
    pub fn n_rows(&self) -> usize {
        match self {
            Features::Sparse(m) => m.n_rows(),
            Features::Dense(m) => m.rows(),
        }
    }

    pub fn n_cols(&self) -> usize {
        match self {
            Features::Sparse(m) => m.n_cols(),
            Features::Dense(m) => m.cols(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Features::Sparse(m) => m.get(i, j),
            Features::Dense(m) => m.get(i, j),
        }
    }

    /// Calls `f(column, value)` for every stored entry of row `i`.
    pub fn for_each_in_row(&self, i: usize, mut f: impl FnMut(usize, f64)) {
        match self {
            Features::Sparse(m) => {
                let (idx, val) = m.row(i);
                for (&j, &v) in idx.iter().zip(val) {
                    f(j, v);
                }
            }
            Features::Dense(m) => {
                for (j, &v) in m.row(i).iter().enumerate() {
                    if v != 0.0 {
                        f(j, v);
                    }
                }
            }
        }
    }

    pub fn row_dot(&self, i: usize, w: &[f64]) -> f64 {
        let mut s = 0.0;
        self.for_each_in_row(i, |j, v| s += v * w[j]);
        s
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        match self {
            Features::Dense(m) => m.row(i).to_vec(),
            Features::Sparse(m) => {
                let mut out = vec![0.0; m.n_cols()];
                let (idx, val) = m.row(i);
                for (&j, &v) in idx.iter().zip(val) {
                    out[j] = v;
                }
                out
            }
        }
    }

    pub fn row_sq_norm(&self, i: usize) -> f64 {
        let mut s = 0.0;
        self.for_each_in_row(i, |_, v| s += v * v);
        s
    }

    pub fn select_rows(&self, rows: &[usize]) -> Features {
        match self {
            Features::Sparse(m) => Features::Sparse(m.select_rows(rows)),
            Features::Dense(m) => {
                let mut out = DenseMatrix::zeros(rows.len(), m.cols());
                for (o, &i) in rows.iter().enumerate() {
                    out.row_mut(o).copy_from_slice(m.row(i));
                }
                Features::Dense(out)
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        match self {
            Features::Sparse(m) => m.data.iter().all(|v| v.is_finite()),
            Features::Dense(m) => m.data.iter().all(|v| v.is_finite()),
        }
    }
}

#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthonormalizes the columns of `a` in place with modified Gram-Schmidt,
/// applied twice. Columns that collapse numerically are set to zero.
pub fn orthonormalize_columns(a: &mut DenseMatrix) {
    let (m, n) = (a.rows(), a.cols());
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| a.get(i, j)).collect()).collect();
    let mut accepted: Vec<usize> = Vec::with_capacity(n);
    for j in 0..n {
        let original = norm2(&cols[j]);
        for _ in 0..2 {
            for &p in &accepted {
                let (left, right) = cols.split_at_mut(j);
                let proj = dot(&left[p], &right[0]);
                axpy(-proj, &left[p], &mut right[0]);
            }
        }
        let nrm = norm2(&cols[j]);
        if original > 0.0 && nrm > 1e-10 * original {
            cols[j].iter_mut().for_each(|v| *v /= nrm);
            accepted.push(j);
        } else {
            cols[j].iter_mut().for_each(|v| *v = 0.0);
        }
    }
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            a.set(i, j, v);
        }
    }
}

/// Thin singular value decomposition of a dense matrix by one-sided Jacobi
/// rotations (Hestenes). Returns `(u, s, vt)` with `s` sorted descending,
/// `u` of shape `m × r`, `vt` of shape `r × n`, `r = min(m, n)`.
///
/// Left singular vectors for numerically zero singular values are left as
/// zero columns; callers that need a complete basis fill them in.
pub fn jacobi_svd(a: &DenseMatrix) -> (DenseMatrix, Vec<f64>, DenseMatrix) {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        let (u, s, vt) = jacobi_svd(&a.transpose());
        return (vt.transpose(), s, u.transpose());
    }
    // m >= n: orthogonalize the n columns of a.
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| a.get(i, j)).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    const EPS: f64 = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == 0.0 || gamma.abs() <= EPS * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma: Vec<(f64, usize)> = w.iter().enumerate().map(|(j, c)| (norm2(c), j)).collect();
    sigma.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let smax = sigma.first().map_or(0.0, |s| s.0);
    let mut u = DenseMatrix::zeros(m, n);
    let mut vt = DenseMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (r, &(sv, j)) in sigma.iter().enumerate() {
        s.push(sv);
        if sv > 0.0 && sv > smax * 1e-13 {
            for (i, &x) in w[j].iter().enumerate().take(m) {
                u.set(i, r, x / sv);
            }
        }
        for (k, &x) in v[j].iter().enumerate().take(n) {
            vt.set(r, k, x);
        }
    }
    (u, s, vt)
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_drops_zeros_and_sums_duplicates() {
        let m = CsrMatrix::from_row_entries(3, vec![vec![(2, 1.0), (0, 0.0), (2, 2.0)], vec![]]).unwrap();
        assert_eq!(m.row_entries(0), vec![(2, 3.0)]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.row(1).0.len(), 0);
    }

    #[test]
    fn csr_products_match_dense() {
        let m = CsrMatrix::from_row_entries(3, vec![vec![(0, 1.0), (2, 2.0)], vec![(1, -1.0)]]).unwrap();
        let x = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let y = m.mul_dense(&x).unwrap();
        assert_eq!(y.to_rows(), vec![vec![11.0, 14.0], vec![-3.0, -4.0]]);
        let z = m.t_mul_dense(&y).unwrap();
        let dense = m.to_dense().transpose().matmul(&y).unwrap();
        assert_eq!(z, dense);
    }

    #[test]
    fn jacobi_reconstructs() {
        let a = DenseMatrix::from_rows(&[
            vec![3.0, 1.0, 0.5],
            vec![-1.0, 2.0, 4.0],
            vec![0.0, 0.0, 1.0],
            vec![2.0, -2.0, 0.0],
        ])
        .unwrap();
        for m in [a.clone(), a.transpose()] {
            let (u, s, vt) = jacobi_svd(&m);
            assert!(s.windows(2).all(|w| w[0] >= w[1]));
            let mut us = u.clone();
            for i in 0..us.rows() {
                for (j, &sv) in s.iter().enumerate() {
                    us.set(i, j, u.get(i, j) * sv);
                }
            }
            let rec = us.matmul(&vt).unwrap();
            for (x, y) in rec.data().iter().zip(m.data()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gram_schmidt_zeroes_dependent_columns() {
        let mut a = DenseMatrix::from_rows(&[vec![1.0, 2.0, 0.0], vec![1.0, 2.0, 1.0]]).unwrap();
        orthonormalize_columns(&mut a);
        assert!((a.get(0, 0) - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.get(0, 1), 0.0);
        let c2 = [a.get(0, 2), a.get(1, 2)];
        assert!((norm2(&c2) - 1.0).abs() < 1e-12);
    }
}
