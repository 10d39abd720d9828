// SPDX-License-Identifier: MIT OR Apache-2.0

//! Supervised variational autoencoder: a Gaussian VAE whose latent mean also
//! feeds a softmax classifier. Per sample the loss is
//! `w_vae·(‖x̂ − x‖² + KL) + w_clf·CE`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::nn::{activate, activation_backward, layout, Activation, Adam, EarlyStopping, Linear};
use super::{softmax_in_place, SvaeParams};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Features};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvaeModel {
    pub encoder: Vec<Linear>,
    pub mu: Linear,
    pub logvar: Linear,
    pub decoder: Vec<Linear>,
    pub classifier: Linear,
    pub activation: Activation,
    pub weight_vae: f64,
    pub weight_clf: f64,
    pub params: Vec<f64>,
    /// Mean KL term of every training epoch.
    pub kl_per_epoch: Vec<f64>,
}

/// Batch-mean loss terms (unweighted) and the weighted total.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SvaeLoss {
    pub total: f64,
    pub reconstruction: f64,
    pub kl: f64,
    pub cross_entropy: f64,
}

struct Pass {
    enc: Vec<Vec<f64>>,
    mu: Vec<f64>,
    logvar: Vec<f64>,
    z: Vec<f64>,
    dec: Vec<Vec<f64>>,
    recon: Vec<f64>,
    probs: Vec<f64>,
}

impl SvaeModel {
    pub fn new(n_in: usize, p: &SvaeParams, n_classes: usize, seed: u64) -> Self {
        let sizes = p.encoder_sizes();
        let latent = p.latent_dim();
        let mut enc_dims = Vec::new();
        let mut prev = n_in;
        for &h in &sizes {
            enc_dims.push((prev, h));
            prev = h;
        }
        let (encoder, off) = layout(&enc_dims, 0);
        let (heads, off) = layout(&[(prev, latent), (prev, latent)], off);
        let mut dec_dims = Vec::new();
        let mut prev = latent;
        for &h in sizes.iter().rev() {
            dec_dims.push((prev, h));
            prev = h;
        }
        dec_dims.push((prev, n_in));
        let (decoder, off) = layout(&dec_dims, off);
        let (clf, total) = layout(&[(latent, n_classes)], off);
        let mut params = vec![0.0; total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in encoder.iter().chain(&heads).chain(&decoder).chain(&clf) {
            l.init(&mut params, &mut rng);
        }
        SvaeModel {
            encoder,
            mu: heads[0],
            logvar: heads[1],
            decoder,
            classifier: clf[0],
            activation: p.activation,
            weight_vae: p.weight_vae,
            weight_clf: p.weight_clf,
            params,
            kl_per_epoch: Vec::new(),
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.mu.n_out
    }

    fn encode(&self, p: &[f64], x: &Features, i: usize) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
        let mut enc: Vec<Vec<f64>> = Vec::with_capacity(self.encoder.len());
        for layer in &self.encoder {
            let mut a = match enc.last() {
                None => layer.forward_row(p, x, i),
                Some(prev) => layer.forward(p, prev),
            };
            activate(&mut a, self.activation);
            enc.push(a);
        }
        let top = enc.last().expect("encoder layer");
        let mu = self.mu.forward(p, top);
        let logvar = self.logvar.forward(p, top);
        (enc, mu, logvar)
    }

    fn pass(&self, p: &[f64], x: &Features, i: usize, eps: &[f64]) -> Pass {
        let (enc, mu, logvar) = self.encode(p, x, i);
        let z: Vec<f64> = mu
            .iter()
            .zip(&logvar)
            .zip(eps)
            .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
            .collect();
        let mut dec: Vec<Vec<f64>> = Vec::with_capacity(self.decoder.len() - 1);
        let last = self.decoder.len() - 1;
        let mut recon = Vec::new();
        for (l, layer) in self.decoder.iter().enumerate() {
            let input = dec.last().unwrap_or(&z);
            let mut a = layer.forward(p, input);
            if l == last {
                recon = a;
            } else {
                activate(&mut a, self.activation);
                dec.push(a);
            }
        }
        let mut probs = self.classifier.forward(p, &mu);
        softmax_in_place(&mut probs);
        Pass {
            enc,
            mu,
            logvar,
            z,
            dec,
            recon,
            probs,
        }
    }

    /// Batch-mean loss and gradient for fixed reparameterization noise
    /// (`eps[b]` belongs to `rows[b]`).
    pub fn loss_and_gradient(
        &self,
        params: &[f64],
        x: &Features,
        rows: &[usize],
        y: &[usize],
        eps: &[Vec<f64>],
    ) -> (SvaeLoss, Vec<f64>) {
        let mut grad = vec![0.0; params.len()];
        let mut acc = SvaeLoss::default();
        let scale = 1.0 / rows.len() as f64;
        let (wv, wc) = (self.weight_vae, self.weight_clf);
        for (b, &i) in rows.iter().enumerate() {
            let s = self.pass(params, x, i, &eps[b]);
            let target = x.dense_row(i);
            let mut d_recon = vec![0.0; target.len()];
            let mut rec = 0.0;
            for ((d, &r), &t) in d_recon.iter_mut().zip(&s.recon).zip(&target) {
                rec += (r - t) * (r - t);
                *d = wv * scale * 2.0 * (r - t);
            }
            let kl: f64 = s
                .mu
                .iter()
                .zip(&s.logvar)
                .map(|(m, lv)| -0.5 * (1.0 + lv - m * m - lv.exp()))
                .sum();
            let ce = -s.probs[y[i]].max(f64::MIN_POSITIVE).ln();
            acc.reconstruction += rec * scale;
            acc.kl += kl * scale;
            acc.cross_entropy += ce * scale;

            // decoder, top to bottom
            let mut delta = d_recon;
            for l in (0..self.decoder.len()).rev() {
                let input = if l == 0 { &s.z } else { &s.dec[l - 1] };
                let mut d = self.decoder[l].backward(params, input, &delta, &mut grad);
                if l > 0 {
                    activation_backward(&mut d, &s.dec[l - 1], self.activation);
                }
                delta = d;
            }
            let dz = delta;

            let mut d_logits = s.probs.clone();
            d_logits[y[i]] -= 1.0;
            d_logits.iter_mut().for_each(|v| *v *= wc * scale);
            let d_mu_clf = self.classifier.backward(params, &s.mu, &d_logits, &mut grad);

            let n_lat = s.mu.len();
            let mut d_mu = vec![0.0; n_lat];
            let mut d_lv = vec![0.0; n_lat];
            for j in 0..n_lat {
                let sigma = (0.5 * s.logvar[j]).exp();
                d_mu[j] = dz[j] + d_mu_clf[j] + wv * scale * s.mu[j];
                d_lv[j] = dz[j] * eps[b][j] * 0.5 * sigma + wv * scale * 0.5 * (s.logvar[j].exp() - 1.0);
            }
            let top = s.enc.last().expect("encoder layer");
            let mut d_top = self.mu.backward(params, top, &d_mu, &mut grad);
            let d_top_lv = self.logvar.backward(params, top, &d_lv, &mut grad);
            crate::linalg::axpy(1.0, &d_top_lv, &mut d_top);

            let mut delta = d_top;
            for l in (0..self.encoder.len()).rev() {
                activation_backward(&mut delta, &s.enc[l], self.activation);
                if l == 0 {
                    self.encoder[0].backward_row(x, i, &delta, &mut grad);
                } else {
                    delta = self.encoder[l].backward(params, &s.enc[l - 1], &delta, &mut grad);
                }
            }
        }
        acc.total = wv * (acc.reconstruction + acc.kl) + wc * acc.cross_entropy;
        (acc, grad)
    }

    /// Classifier output on the latent mean.
    pub fn predict_proba(&self, x: &Features) -> DenseMatrix {
        let k = self.classifier.n_out;
        let mut out = DenseMatrix::zeros(x.n_rows(), k);
        for i in 0..x.n_rows() {
            let (_, mu, _) = self.encode(&self.params, x, i);
            let mut p = self.classifier.forward(&self.params, &mu);
            softmax_in_place(&mut p);
            out.row_mut(i).copy_from_slice(&p);
        }
        out
    }

    /// Latent means of all rows.
    pub fn encode_mean(&self, x: &Features) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(x.n_rows(), self.latent_dim());
        for i in 0..x.n_rows() {
            out.row_mut(i).copy_from_slice(&self.encode(&self.params, x, i).1);
        }
        out
    }
}

pub(crate) fn fit(p: &SvaeParams, x: &Features, y: &[usize], k: usize, seed: u64) -> Result<SvaeModel> {
    let mut model = SvaeModel::new(x.n_cols(), p, k, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005a_e0fb_a7c4);
    let mut adam = Adam::new(model.params.len(), p.learning_rate);
    let mut stop = EarlyStopping::new(p.tol, p.patience);
    let mut order: Vec<usize> = (0..y.len()).collect();
    let latent = model.latent_dim();
    for epoch in 0..p.max_epochs {
        order.shuffle(&mut rng);
        let (mut total, mut kl) = (0.0, 0.0);
        for batch in order.chunks(p.batch_size) {
            let eps: Vec<Vec<f64>> = batch
                .iter()
                .map(|_| (0..latent).map(|_| StandardNormal.sample(&mut rng)).collect())
                .collect();
            let (loss, grad) = model.loss_and_gradient(&model.params, x, batch, y, &eps);
            let w = batch.len() as f64;
            total += loss.total * w;
            kl += loss.kl * w;
            adam.step(&mut model.params, &grad);
        }
        let n = y.len() as f64;
        total /= n;
        model.kl_per_epoch.push(kl / n);
        if !total.is_finite() || model.params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Training(format!("SVAE loss diverged at epoch {}", epoch + 1)));
        }
        if stop.update(total) {
            break;
        }
    }
    log::debug!("SVAE stopped after {} epochs", model.kl_per_epoch.len());
    Ok(model)
}
