// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Accuracy plus support-weighted precision, recall and F1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_class: Vec<ClassMetrics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// `classes[i]` names label index `i`. Zero denominators yield 0 and a
/// warning.
pub fn compute_metrics(y_true: &[usize], y_pred: &[usize], classes: &[String]) -> Result<MetricsReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::EmptyInput("no predictions to score".into()));
    }
    let k = classes.len();
    if let Some(&bad) = y_true.iter().chain(y_pred).find(|&&c| c >= k) {
        return Err(Error::invalid(format!("label index {bad} outside {k} classes")));
    }
    let mut tp = vec![0usize; k];
    let mut predicted = vec![0usize; k];
    let mut support = vec![0usize; k];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        support[t] += 1;
        predicted[p] += 1;
        if t == p {
            tp[t] += 1;
        }
    }
    let n = y_true.len() as f64;
    let mut warnings = Vec::new();
    let mut per_class = Vec::with_capacity(k);
    let (mut wp, mut wr, mut wf) = (0.0, 0.0, 0.0);
    for c in 0..k {
        let precision = if predicted[c] == 0 {
            if support[c] > 0 {
                warnings.push(format!("precision of {:?} undefined (no predictions); set to 0", classes[c]));
            }
            0.0
        } else {
            tp[c] as f64 / predicted[c] as f64
        };
        let recall = if support[c] == 0 {
            0.0
        } else {
            tp[c] as f64 / support[c] as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        let w = support[c] as f64 / n;
        wp += w * precision;
        wr += w * recall;
        wf += w * f1;
        per_class.push(ClassMetrics {
            label: classes[c].clone(),
            precision,
            recall,
            f1,
            support: support[c],
        });
    }
    Ok(MetricsReport {
        accuracy: tp.iter().sum::<usize>() as f64 / n,
        precision: wp,
        recall: wr,
        f1: wf,
        per_class,
        warnings,
    })
}
