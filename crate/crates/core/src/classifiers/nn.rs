// SPDX-License-Identifier: MIT OR Apache-2.0

//! Building blocks shared by the feed-forward network and the SVAE: fully
//! connected layers over a flat parameter vector, activations, Adam and the
//! tolerance/patience stopping rule.

use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::Features;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Logistic,
    Tanh,
    Relu,
    /// Same function as `Logistic`; kept as its own option for the SVAE.
    Sigmoid,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Logistic | Activation::Sigmoid => {
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                }
            }
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `a`.
    pub fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Logistic | Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "logistic" => Ok(Activation::Logistic),
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            _ => Err(Error::invalid(format!("unknown activation {s:?}"))),
        }
    }
}

/// Fully connected layer stored in a shared parameter vector: an
/// `n_in × n_out` weight block (input-major) followed by `n_out` biases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Linear {
    pub n_in: usize,
    pub n_out: usize,
    pub offset: usize,
}

impl Linear {
    pub fn n_params(&self) -> usize {
        self.n_in * self.n_out + self.n_out
    }

    fn weights<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.offset..self.offset + self.n_in * self.n_out]
    }

    fn bias<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        let s = self.offset + self.n_in * self.n_out;
        &p[s..s + self.n_out]
    }

    pub fn init(&self, p: &mut [f64], rng: &mut ChaCha8Rng) {
        let bound = 1.0 / (self.n_in as f64).sqrt();
        for w in &mut p[self.offset..self.offset + self.n_in * self.n_out] {
            *w = rng.random_range(-bound..bound);
        }
        let s = self.offset + self.n_in * self.n_out;
        p[s..s + self.n_out].iter_mut().for_each(|b| *b = 0.0);
    }

    pub fn forward(&self, p: &[f64], x: &[f64]) -> Vec<f64> {
        let w = self.weights(p);
        let mut out = self.bias(p).to_vec();
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                crate::linalg::axpy(xj, &w[j * self.n_out..(j + 1) * self.n_out], &mut out);
            }
        }
        out
    }

    /// Forward pass for row `i` of a feature matrix, using only stored entries.
    pub fn forward_row(&self, p: &[f64], x: &Features, i: usize) -> Vec<f64> {
        let w = self.weights(p);
        let mut out = self.bias(p).to_vec();
        x.for_each_in_row(i, |j, v| {
            crate::linalg::axpy(v, &w[j * self.n_out..(j + 1) * self.n_out], &mut out);
        });
        out
    }

    /// Adds `∂L/∂W`, `∂L/∂b` for output gradient `delta` into `grad` and
    /// returns `∂L/∂x`.
    pub fn backward(&self, p: &[f64], x: &[f64], delta: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let w = self.weights(p);
        let mut dx = vec![0.0; self.n_in];
        for (j, &xj) in x.iter().enumerate() {
            let wj = &w[j * self.n_out..(j + 1) * self.n_out];
            dx[j] = crate::linalg::dot(wj, delta);
            if xj != 0.0 {
                let g = &mut grad[self.offset + j * self.n_out..self.offset + (j + 1) * self.n_out];
                crate::linalg::axpy(xj, delta, g);
            }
        }
        self.add_bias_grad(delta, grad);
        dx
    }

    /// Parameter gradient only, for a layer fed by row `i` of a feature matrix.
    pub fn backward_row(&self, x: &Features, i: usize, delta: &[f64], grad: &mut [f64]) {
        x.for_each_in_row(i, |j, v| {
            let g = &mut grad[self.offset + j * self.n_out..self.offset + (j + 1) * self.n_out];
            crate::linalg::axpy(v, delta, g);
        });
        self.add_bias_grad(delta, grad);
    }

    fn add_bias_grad(&self, delta: &[f64], grad: &mut [f64]) {
        let s = self.offset + self.n_in * self.n_out;
        for (g, d) in grad[s..s + self.n_out].iter_mut().zip(delta) {
            *g += d;
        }
    }
}

/// Lays out consecutive layers; returns them and the total parameter count.
pub fn layout(dims: &[(usize, usize)], start: usize) -> (Vec<Linear>, usize) {
    let mut offset = start;
    let layers = dims
        .iter()
        .map(|&(n_in, n_out)| {
            let l = Linear { n_in, n_out, offset };
            offset += l.n_params();
            l
        })
        .collect();
    (layers, offset)
}

pub fn activate(v: &mut [f64], act: Activation) {
    v.iter_mut().for_each(|z| *z = act.apply(*z));
}

/// Multiplies an upstream gradient by the activation derivative in place.
pub fn activation_backward(delta: &mut [f64], outputs: &[f64], act: Activation) {
    for (d, &a) in delta.iter_mut().zip(outputs) {
        *d *= act.derivative_from_output(a);
    }
}

pub struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(n: usize, lr: f64) -> Self {
        Adam {
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        let step = self.lr * c2.sqrt() / c1;
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            params[i] -= step * self.m[i] / (self.v[i].sqrt() + Self::EPS);
        }
    }
}

/// Stops after `patience` consecutive epochs whose loss fails to beat the
/// best loss so far by more than `tol`.
pub struct EarlyStopping {
    tol: f64,
    patience: usize,
    best: f64,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(tol: f64, patience: usize) -> Self {
        EarlyStopping {
            tol,
            patience,
            best: f64::INFINITY,
            stale: 0,
        }
    }

    /// Records an epoch loss; returns `true` when training should stop.
    pub fn update(&mut self, loss: f64) -> bool {
        if loss > self.best - self.tol {
            self.stale += 1;
        } else {
            self.stale = 0;
        }
        if loss < self.best {
            self.best = loss;
        }
        self.stale >= self.patience
    }
}
