// SPDX-License-Identifier: MIT OR Apache-2.0

//! Randomized truncated SVD: Gaussian range finder with power iterations,
//! followed by an exact SVD of the small projected matrix.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, jacobi_svd, norm2, orthonormalize_columns, CsrMatrix, DenseMatrix};

const POWER_ITERATIONS: usize = 4;
const OVERSAMPLES: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvdModel {
    /// `k × n_terms`, orthonormal rows.
    pub components: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub k: usize,
}

pub fn fit_truncated_svd(m: &CsrMatrix, k: usize, seed: u64) -> Result<SvdModel> {
    if k < 1 {
        return Err(Error::invalid("SVD target dimension must be at least 1"));
    }
    let (rows, cols) = (m.n_rows(), m.n_cols());
    let k = k.min(rows).min(cols);
    if k == 0 {
        return Err(Error::EmptyInput("cannot fit SVD on an empty matrix".into()));
    }
    let l = (k + OVERSAMPLES).min(rows.min(cols));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut omega = DenseMatrix::zeros(cols, l);
    for i in 0..cols {
        for v in omega.row_mut(i) {
            *v = StandardNormal.sample(&mut rng);
        }
    }
    let mut q = m.mul_dense(&omega)?;
    orthonormalize_columns(&mut q);
    for _ in 0..POWER_ITERATIONS {
        let mut z = m.t_mul_dense(&q)?;
        orthonormalize_columns(&mut z);
        q = m.mul_dense(&z)?;
        orthonormalize_columns(&mut q);
    }
    // B = Qᵀ A, computed as (Aᵀ Q)ᵀ
    let b = m.t_mul_dense(&q)?.transpose();
    let (_, s, vt) = jacobi_svd(&b);

    let mut components = DenseMatrix::zeros(k, cols);
    for r in 0..k {
        components.row_mut(r).copy_from_slice(vt.row(r));
    }
    complete_orthonormal_rows(&mut components, &mut rng);
    Ok(SvdModel {
        components,
        singular_values: s[..k].to_vec(),
        k,
    })
}

/// Replaces zero rows (directions with vanishing singular value) by random
/// unit vectors orthogonal to all other rows.
fn complete_orthonormal_rows(c: &mut DenseMatrix, rng: &mut ChaCha8Rng) {
    let k = c.rows();
    let missing: Vec<usize> = (0..k).filter(|&r| norm2(c.row(r)) < 0.5).collect();
    if missing.is_empty() {
        return;
    }
    let mut basis: Vec<Vec<f64>> = (0..k)
        .filter(|r| !missing.contains(r))
        .map(|r| c.row(r).to_vec())
        .collect();
    for r in missing {
        loop {
            let mut v: Vec<f64> = (0..c.cols()).map(|_| StandardNormal.sample(rng)).collect();
            for _ in 0..2 {
                for b in &basis {
                    let p = dot(b, &v);
                    axpy(-p, b, &mut v);
                }
            }
            let n = norm2(&v);
            if n > 1e-8 {
                v.iter_mut().for_each(|x| *x /= n);
                c.row_mut(r).copy_from_slice(&v);
                basis.push(v);
                break;
            }
        }
    }
}

/// Projects rows onto the fitted components (`samples × k`).
pub fn svd_transform(m: &CsrMatrix, model: &SvdModel) -> Result<DenseMatrix> {
    if m.n_cols() != model.components.cols() {
        return Err(Error::DimensionMismatch {
            expected: model.components.cols(),
            actual: m.n_cols(),
        });
    }
    m.mul_dense(&model.components.transpose())
}
