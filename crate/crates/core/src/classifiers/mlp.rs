// SPDX-License-Identifier: MIT OR Apache-2.0

//! Feed-forward network with a softmax output trained on cross-entropy.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::nn::{activate, activation_backward, layout, Activation, Adam, EarlyStopping, Linear};
use super::{softmax_in_place, MlpParams};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Features};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<Linear>,
    pub activation: Activation,
    pub params: Vec<f64>,
    pub epochs: usize,
}

impl MlpModel {
    /// Randomly initialized network `n_in → hidden… → n_classes`.
    pub fn new(n_in: usize, hidden: &[usize], n_classes: usize, activation: Activation, seed: u64) -> Self {
        let mut dims = Vec::new();
        let mut prev = n_in;
        for &h in hidden {
            dims.push((prev, h));
            prev = h;
        }
        dims.push((prev, n_classes));
        let (layers, total) = layout(&dims, 0);
        let mut params = vec![0.0; total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in &layers {
            l.init(&mut params, &mut rng);
        }
        MlpModel {
            layers,
            activation,
            params,
            epochs: 0,
        }
    }

    /// Hidden activations followed by the output probabilities.
    fn forward(&self, p: &[f64], x: &Features, i: usize) -> Vec<Vec<f64>> {
        let last = self.layers.len() - 1;
        let mut outs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = match outs.last() {
                None => layer.forward_row(p, x, i),
                Some(prev) => layer.forward(p, prev),
            };
            if l == last {
                softmax_in_place(&mut z);
            } else {
                activate(&mut z, self.activation);
            }
            outs.push(z);
        }
        outs
    }

    /// Mean cross-entropy over `rows` and its gradient with respect to
    /// `params`.
    pub fn loss_and_gradient(&self, params: &[f64], x: &Features, rows: &[usize], y: &[usize]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; params.len()];
        let mut loss = 0.0;
        let scale = 1.0 / rows.len() as f64;
        for &i in rows {
            let outs = self.forward(params, x, i);
            let probs = outs.last().expect("output layer");
            loss -= probs[y[i]].max(f64::MIN_POSITIVE).ln();
            let mut delta: Vec<f64> = probs.iter().map(|p| p * scale).collect();
            delta[y[i]] -= scale;
            for l in (0..self.layers.len()).rev() {
                if l == 0 {
                    self.layers[0].backward_row(x, i, &delta, &mut grad);
                } else {
                    let mut d = self.layers[l].backward(params, &outs[l - 1], &delta, &mut grad);
                    activation_backward(&mut d, &outs[l - 1], self.activation);
                    delta = d;
                }
            }
        }
        (loss * scale, grad)
    }

    pub fn predict_proba(&self, x: &Features) -> DenseMatrix {
        let k = self.layers.last().expect("output layer").n_out;
        let mut out = DenseMatrix::zeros(x.n_rows(), k);
        for i in 0..x.n_rows() {
            let outs = self.forward(&self.params, x, i);
            out.row_mut(i).copy_from_slice(outs.last().expect("output layer"));
        }
        out
    }
}

pub(crate) fn fit(p: &MlpParams, x: &Features, y: &[usize], k: usize, seed: u64) -> Result<MlpModel> {
    let mut model = MlpModel::new(x.n_cols(), &p.hidden, k, p.activation, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x05ee_d0fb_a7c4);
    let mut adam = Adam::new(model.params.len(), p.learning_rate);
    let mut stop = EarlyStopping::new(p.tol, p.patience);
    let mut order: Vec<usize> = (0..y.len()).collect();
    for epoch in 0..p.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(p.batch_size) {
            let (loss, grad) = model.loss_and_gradient(&model.params, x, batch, y);
            epoch_loss += loss * batch.len() as f64;
            adam.step(&mut model.params, &grad);
        }
        epoch_loss /= y.len() as f64;
        model.epochs = epoch + 1;
        if !epoch_loss.is_finite() {
            return Err(Error::Training(format!("network loss diverged at epoch {}", epoch + 1)));
        }
        if stop.update(epoch_loss) {
            break;
        }
    }
    log::debug!("network stopped after {} epochs", model.epochs);
    Ok(model)
}
