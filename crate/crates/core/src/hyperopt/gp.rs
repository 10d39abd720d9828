// SPDX-License-Identifier: MIT OR Apache-2.0

//! Gaussian-process surrogate with a squared-exponential kernel, fixed
//! observation noise and a median-heuristic length-scale.

use crate::error::{Error, Result};

pub const NOISE: f64 = 1e-6;

pub struct GaussianProcess {
    x: Vec<Vec<f64>>,
    chol: Vec<f64>,
    alpha: Vec<f64>,
    length_scale: f64,
    y_mean: f64,
    y_std: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median of the pairwise distances; 1 when undefined or zero.
pub fn median_length_scale(x: &[Vec<f64>]) -> f64 {
    let mut d: Vec<f64> = Vec::new();
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            d.push(sq_dist(&x[i], &x[j]).sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d.len() / 2;
    let med = if d.len() % 2 == 1 { d[m] } else { 0.5 * (d[m - 1] + d[m]) };
    if med > 0.0 {
        med
    } else {
        1.0
    }
}

/// Lower Cholesky factor of a row-major `n × n` matrix.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            if i == j {
                let v = a[i * n + i] - s;
                if v <= 0.0 || !v.is_finite() {
                    return None;
                }
                l[i * n + i] = v.sqrt();
            } else {
                l[i * n + j] = (a[i * n + j] - s) / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn forward_sub(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * x[k]).sum();
        x[i] = (b[i] - s) / l[i * n + i];
    }
    x
}

fn backward_sub_t(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (b[i] - s) / l[i * n + i];
    }
    x
}

impl GaussianProcess {
    pub fn fit(x: Vec<Vec<f64>>, y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n == 0 || y.len() != n {
            return Err(Error::EmptyInput("surrogate needs observations".into()));
        }
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let var = y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum::<f64>() / n as f64;
        let y_std = if var > 0.0 { var.sqrt() } else { 1.0 };
        let yn: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_std).collect();
        let length_scale = median_length_scale(&x);
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                k[i * n + j] = (-sq_dist(&x[i], &x[j]) / (2.0 * length_scale * length_scale)).exp();
            }
        }
        // duplicates make the kernel singular; grow the jitter until it factors
        let mut jitter = NOISE;
        let chol = loop {
            let mut kj = k.clone();
            for i in 0..n {
                kj[i * n + i] += jitter;
            }
            if let Some(l) = cholesky(&kj, n) {
                break l;
            }
            jitter *= 10.0;
            if jitter > 1.0 {
                return Err(Error::Training("surrogate kernel is not positive definite".into()));
            }
        };
        let alpha = backward_sub_t(&chol, n, &forward_sub(&chol, n, &yn));
        Ok(GaussianProcess {
            x,
            chol,
            alpha,
            length_scale,
            y_mean,
            y_std,
        })
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    /// Posterior mean and standard deviation in the original target units.
    pub fn predict(&self, u: &[f64]) -> (f64, f64) {
        let n = self.x.len();
        let ks: Vec<f64> = self
            .x
            .iter()
            .map(|xi| (-sq_dist(xi, u) / (2.0 * self.length_scale * self.length_scale)).exp())
            .collect();
        let mean = crate::linalg::dot(&ks, &self.alpha);
        let v = forward_sub(&self.chol, n, &ks);
        let var = (1.0 - crate::linalg::dot(&v, &v)).max(0.0);
        (self.y_mean + self.y_std * mean, self.y_std * var.sqrt())
    }
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Expected improvement over `best` for a maximization problem.
pub fn expected_improvement(mean: f64, sd: f64, best: f64) -> f64 {
    if sd <= 1e-12 {
        return (mean - best).max(0.0);
    }
    let z = (mean - best) / sd;
    (mean - best) * normal_cdf(z) + sd * normal_pdf(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_observations() {
        let x = vec![vec![0.0], vec![0.5], vec![1.0]];
        let y = [1.0, 3.0, 2.0];
        let gp = GaussianProcess::fit(x.clone(), &y).unwrap();
        for (xi, yi) in x.iter().zip(y) {
            let (m, s) = gp.predict(xi);
            assert!((m - yi).abs() < 1e-3, "{m} vs {yi}");
            assert!(s < 1e-2);
        }
        let (_, far) = gp.predict(&[10.0]);
        assert!(far > 0.5);
    }

    #[test]
    fn ei_properties() {
        assert!(expected_improvement(0.0, 1.0, 0.0) > 0.39);
        assert_eq!(expected_improvement(1.0, 0.0, 0.5), 0.5);
        assert!(expected_improvement(-5.0, 0.1, 0.0) < 1e-10);
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cholesky_small() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let l = cholesky(&a, 2).unwrap();
        assert!((l[0] - 2.0).abs() < 1e-12 && (l[2] - 1.0).abs() < 1e-12 && (l[3] - 2f64.sqrt()).abs() < 1e-12);
        assert!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_none());
    }

    #[test]
    fn duplicate_points_still_factor() {
        let gp = GaussianProcess::fit(vec![vec![0.3], vec![0.3]], &[1.0, 1.0]).unwrap();
        assert!(gp.predict(&[0.3]).0.is_finite());
    }
}
