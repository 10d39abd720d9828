// SPDX-License-Identifier: MIT OR Apache-2.0

//! Multinomial logistic regression.
//!
//! Minimizes `mean cross-entropy + R(W) / (C·n)` with an unpenalized
//! intercept. The smooth part is handled by gradient steps with step halving
//! and momentum; the L1 part by soft thresholding. Training stops once the
//! largest entry of the proximal gradient falls below `tol`.

use serde::{Deserialize, Serialize};

use super::{softmax_in_place, LogisticParams, Penalty};
use crate::error::Result;
use crate::linalg::{DenseMatrix, Features};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub n_features: usize,
    pub n_classes: usize,
    /// `n_features × n_classes`, feature-major.
    pub weights: Vec<f64>,
    pub intercept: Vec<f64>,
    pub iterations: usize,
}

struct Problem<'a> {
    x: &'a Features,
    y: &'a [usize],
    k: usize,
    l1: f64,
    l2: f64,
}

impl Problem<'_> {
    fn logits(&self, w: &[f64], b: &[f64], i: usize) -> Vec<f64> {
        let mut z = b.to_vec();
        self.x.for_each_in_row(i, |j, v| {
            crate::linalg::axpy(v, &w[j * self.k..(j + 1) * self.k], &mut z);
        });
        z
    }

    /// Smooth objective and, when `grad` is given, its gradient.
    fn smooth(&self, w: &[f64], b: &[f64], mut grad: Option<(&mut [f64], &mut [f64])>) -> f64 {
        let n = self.y.len() as f64;
        if let Some((gw, gb)) = grad.as_mut() {
            gw.iter_mut().for_each(|g| *g = 0.0);
            gb.iter_mut().for_each(|g| *g = 0.0);
        }
        let mut loss = 0.0;
        for (i, &yi) in self.y.iter().enumerate() {
            let mut z = self.logits(w, b, i);
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            loss += lse - z[yi];
            if let Some((gw, gb)) = grad.as_mut() {
                softmax_in_place(&mut z);
                z[yi] -= 1.0;
                z.iter_mut().for_each(|v| *v /= n);
                self.x.for_each_in_row(i, |j, v| {
                    crate::linalg::axpy(v, &z, &mut gw[j * self.k..(j + 1) * self.k]);
                });
                crate::linalg::axpy(1.0, &z, gb);
            }
        }
        let mut f = loss / n + 0.5 * self.l2 * crate::linalg::dot(w, w);
        if let Some((gw, _)) = grad {
            crate::linalg::axpy(self.l2, w, gw);
        }
        if !f.is_finite() {
            f = f64::INFINITY;
        }
        f
    }

    fn nonsmooth(&self, w: &[f64]) -> f64 {
        self.l1 * w.iter().map(|v| v.abs()).sum::<f64>()
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

pub(crate) fn fit(p: &LogisticParams, x: &Features, y: &[usize], k: usize) -> Result<LogisticModel> {
    let n = y.len() as f64;
    let d = x.n_cols();
    let lambda = 1.0 / (p.c * n);
    let (l1, l2) = match p.penalty {
        Penalty::None => (0.0, 0.0),
        Penalty::L1 => (lambda, 0.0),
        Penalty::L2 => (0.0, lambda),
        Penalty::ElasticNet => (lambda * p.l1_ratio, lambda * (1.0 - p.l1_ratio)),
    };
    let prob = Problem { x, y, k, l1, l2 };

    let mut w = vec![0.0; d * k];
    let mut b = vec![0.0; k];
    let mut f_x = prob.smooth(&w, &b, None) + prob.nonsmooth(&w);
    let (mut yw, mut yb) = (w.clone(), b.clone());
    let mut momentum = 1.0f64;
    let mut step = 1.0f64;
    let mut gw = vec![0.0; d * k];
    let mut gb = vec![0.0; k];
    let mut iterations = 0;

    while iterations < p.max_iter {
        iterations += 1;
        let f_y = prob.smooth(&yw, &yb, Some((&mut gw, &mut gb)));
        let (mut nw, mut nb);
        loop {
            nw = yw
                .iter()
                .zip(&gw)
                .map(|(v, g)| soft_threshold(v - step * g, step * l1))
                .collect::<Vec<_>>();
            nb = yb.iter().zip(&gb).map(|(v, g)| v - step * g).collect::<Vec<_>>();
            let mut lin = 0.0;
            let mut sq = 0.0;
            for ((a, c), g) in nw.iter().zip(&yw).zip(&gw).chain(nb.iter().zip(&yb).zip(&gb)) {
                lin += g * (a - c);
                sq += (a - c) * (a - c);
            }
            let f_new = prob.smooth(&nw, &nb, None);
            if f_new <= f_y + lin + sq / (2.0 * step) + 1e-12 * f_y.abs() || step < 1e-20 {
                break;
            }
            step *= 0.5;
        }
        let mapping = nw
            .iter()
            .zip(&yw)
            .chain(nb.iter().zip(&yb))
            .map(|(a, c)| ((c - a) / step).abs())
            .fold(0.0, f64::max);
        let f_new = prob.smooth(&nw, &nb, None) + prob.nonsmooth(&nw);
        if f_new > f_x {
            // momentum overshot; restart from the last accepted point
            yw.clone_from(&w);
            yb.clone_from(&b);
            momentum = 1.0;
            continue;
        }
        let next = (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) / 2.0;
        let beta = (momentum - 1.0) / next;
        for j in 0..w.len() {
            yw[j] = nw[j] + beta * (nw[j] - w[j]);
        }
        for j in 0..k {
            yb[j] = nb[j] + beta * (nb[j] - b[j]);
        }
        momentum = next;
        w = nw;
        b = nb;
        f_x = f_new;
        step *= 2.0;
        if mapping <= p.tol {
            break;
        }
    }
    log::debug!("logistic regression stopped after {iterations} iterations, objective {f_x:.6}");
    Ok(LogisticModel {
        n_features: d,
        n_classes: k,
        weights: w,
        intercept: b,
        iterations,
    })
}

impl LogisticModel {
    pub fn decision_row(&self, x: &Features, i: usize) -> Vec<f64> {
        let mut z = self.intercept.clone();
        let k = self.n_classes;
        x.for_each_in_row(i, |j, v| {
            crate::linalg::axpy(v, &self.weights[j * k..(j + 1) * k], &mut z);
        });
        z
    }

    pub fn predict_proba(&self, x: &Features) -> DenseMatrix {
        let k = self.n_classes;
        let mut out = DenseMatrix::zeros(x.n_rows(), k);
        for i in 0..x.n_rows() {
            let mut z = self.decision_row(x, i);
            softmax_in_place(&mut z);
            out.row_mut(i).copy_from_slice(&z);
        }
        out
    }
}
