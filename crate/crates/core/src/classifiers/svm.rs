// SPDX-License-Identifier: MIT OR Apache-2.0

//! One-vs-rest hinge-loss SVMs solved by dual coordinate descent. The bias
//! is folded into the kernel as a constant `+1` term. Probabilities are the
//! softmax of the per-class decision values.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{softmax_in_place, Kernel, SvmParams};
use crate::error::Result;
use crate::linalg::{DenseMatrix, Features};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SvmModel {
    Linear {
        n_classes: usize,
        /// `n_features × n_classes`, feature-major.
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
    Rbf {
        n_classes: usize,
        gamma: f64,
        support: Vec<Vec<(usize, f64)>>,
        support_sq_norms: Vec<f64>,
        /// `support × n_classes`: `α·y` per class.
        coef: Vec<f64>,
    },
}

fn sparse_rows(x: &Features) -> Vec<Vec<(usize, f64)>> {
    (0..x.n_rows())
        .map(|i| {
            let mut r = Vec::new();
            x.for_each_in_row(i, |j, v| r.push((j, v)));
            r
        })
        .collect()
}

fn sparse_dot(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

fn sq_norm(a: &[(usize, f64)]) -> f64 {
    a.iter().map(|(_, v)| v * v).sum()
}

fn rbf(gamma: f64, a: &[(usize, f64)], na: f64, b: &[(usize, f64)], nb: f64) -> f64 {
    (-gamma * (na + nb - 2.0 * sparse_dot(a, b)).max(0.0)).exp()
}

/// Projected-gradient bookkeeping shared by both kernels.
struct Violation {
    max: f64,
    min: f64,
}

impl Violation {
    fn new() -> Self {
        Violation {
            max: f64::NEG_INFINITY,
            min: f64::INFINITY,
        }
    }

    fn record(&mut self, alpha: f64, c: f64, g: f64) {
        let pg = if alpha <= 0.0 {
            g.min(0.0)
        } else if alpha >= c {
            g.max(0.0)
        } else {
            g
        };
        self.max = self.max.max(pg);
        self.min = self.min.min(pg);
    }

    fn converged(&self, tol: f64) -> bool {
        self.max - self.min <= tol
    }
}

/// Running decision values of one binary problem under dual updates.
trait DualState {
    /// `Σ_j α_j y_j (K_ij + 1)`
    fn margin(&self, i: usize) -> f64;
    /// Adds `s` times the kernel column of sample `i`.
    fn update(&mut self, i: usize, s: f64);
}

struct LinearState<'a> {
    rows: &'a [Vec<(usize, f64)>],
    w: Vec<f64>,
    b: f64,
}

impl DualState for LinearState<'_> {
    fn margin(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|&(j, v)| self.w[j] * v).sum::<f64>() + self.b
    }

    fn update(&mut self, i: usize, s: f64) {
        for &(j, v) in &self.rows[i] {
            self.w[j] += s * v;
        }
        self.b += s;
    }
}

struct KernelState<'a> {
    gram: &'a [f64],
    f: Vec<f64>,
}

impl DualState for KernelState<'_> {
    fn margin(&self, i: usize) -> f64 {
        self.f[i]
    }

    fn update(&mut self, i: usize, s: f64) {
        let n = self.f.len();
        crate::linalg::axpy(s, &self.gram[i * n..(i + 1) * n], &mut self.f);
    }
}

fn solve_binary(
    p: &SvmParams,
    q_diag: &[f64],
    signs: &[f64],
    rng: &mut ChaCha8Rng,
    state: &mut impl DualState,
) -> Vec<f64> {
    let n = signs.len();
    let mut alpha = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..p.max_iter {
        order.shuffle(rng);
        let mut v = Violation::new();
        for &i in &order {
            let g = signs[i] * state.margin(i) - 1.0;
            v.record(alpha[i], p.c, g);
            let new = (alpha[i] - g / q_diag[i]).clamp(0.0, p.c);
            let delta = new - alpha[i];
            if delta != 0.0 {
                alpha[i] = new;
                state.update(i, delta * signs[i]);
            }
        }
        if v.converged(p.tol) {
            break;
        }
    }
    alpha
}

fn one_vs_rest(y: &[usize], c: usize) -> Vec<f64> {
    y.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect()
}

pub(crate) fn fit(p: &SvmParams, x: &Features, y: &[usize], k: usize, seed: u64) -> Result<SvmModel> {
    let n = y.len();
    let rows = sparse_rows(x);
    let norms: Vec<f64> = rows.iter().map(|r| sq_norm(r)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match p.kernel {
        Kernel::Linear => {
            let d = x.n_cols();
            let q_diag: Vec<f64> = norms.iter().map(|s| s + 1.0).collect();
            let mut weights = vec![0.0; d * k];
            let mut bias = vec![0.0; k];
            for c in 0..k {
                let mut state = LinearState {
                    rows: &rows,
                    w: vec![0.0; d],
                    b: 0.0,
                };
                solve_binary(p, &q_diag, &one_vs_rest(y, c), &mut rng, &mut state);
                for (j, w) in state.w.iter().enumerate() {
                    weights[j * k + c] = *w;
                }
                bias[c] = state.b;
            }
            Ok(SvmModel::Linear {
                n_classes: k,
                weights,
                bias,
            })
        }
        Kernel::Rbf => {
            let mut gram = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let v = rbf(p.gamma, &rows[i], norms[i], &rows[j], norms[j]) + 1.0;
                    gram[i * n + j] = v;
                    gram[j * n + i] = v;
                }
            }
            let q_diag: Vec<f64> = (0..n).map(|i| gram[i * n + i]).collect();
            let mut alphas = Vec::with_capacity(k);
            for c in 0..k {
                let signs = one_vs_rest(y, c);
                let mut state = KernelState {
                    gram: &gram,
                    f: vec![0.0; n],
                };
                let a = solve_binary(p, &q_diag, &signs, &mut rng, &mut state);
                alphas.push(a.iter().zip(&signs).map(|(a, s)| a * s).collect::<Vec<f64>>());
            }
            let keep: Vec<usize> = (0..n).filter(|&i| alphas.iter().any(|a| a[i] != 0.0)).collect();
            let mut coef = Vec::with_capacity(keep.len() * k);
            for &i in &keep {
                coef.extend(alphas.iter().map(|a| a[i]));
            }
            Ok(SvmModel::Rbf {
                n_classes: k,
                gamma: p.gamma,
                support: keep.iter().map(|&i| rows[i].clone()).collect(),
                support_sq_norms: keep.iter().map(|&i| norms[i]).collect(),
                coef,
            })
        }
    }
}

impl SvmModel {
    pub fn decision_values(&self, x: &Features) -> DenseMatrix {
        match self {
            SvmModel::Linear {
                n_classes,
                weights,
                bias,
            } => {
                let k = *n_classes;
                let mut out = DenseMatrix::zeros(x.n_rows(), k);
                for i in 0..x.n_rows() {
                    let row = out.row_mut(i);
                    row.copy_from_slice(bias);
                    x.for_each_in_row(i, |j, v| crate::linalg::axpy(v, &weights[j * k..(j + 1) * k], row));
                }
                out
            }
            SvmModel::Rbf {
                n_classes,
                gamma,
                support,
                support_sq_norms,
                coef,
            } => {
                let k = *n_classes;
                let rows = sparse_rows(x);
                let mut out = DenseMatrix::zeros(x.n_rows(), k);
                for (i, r) in rows.iter().enumerate() {
                    let nr = sq_norm(r);
                    let row = out.row_mut(i);
                    for (s, (sv, &ns)) in support.iter().zip(support_sq_norms).enumerate() {
                        let kv = rbf(*gamma, sv, ns, r, nr) + 1.0;
                        crate::linalg::axpy(kv, &coef[s * k..(s + 1) * k], row);
                    }
                }
                out
            }
        }
    }

    pub fn predict_proba(&self, x: &Features) -> DenseMatrix {
        let mut out = self.decision_values(x);
        for i in 0..out.rows() {
            softmax_in_place(out.row_mut(i));
        }
        out
    }
}
