// SPDX-License-Identifier: MIT OR Apache-2.0

//! Document decisions from segment probability rows.
//!
//! * `MS`: argmax of the summed probabilities.
//! * `MWA`: argmax of the weight-averaged probabilities (weights default to
//!   segment character lengths).
//! * `RMS`: argmax of the summed probabilities over the classes that win at
//!   least one segment.
//!
//! Ties resolve to the lowest class index.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AggregationMethod {
    #[serde(rename = "MS")]
    MaxSum,
    #[serde(rename = "MWA")]
    MaxWeightedAverage,
    #[serde(rename = "RMS")]
    RestrictedMaxSum,
}

impl AggregationMethod {
    pub const ALL: [AggregationMethod; 3] = [
        AggregationMethod::MaxSum,
        AggregationMethod::MaxWeightedAverage,
        AggregationMethod::RestrictedMaxSum,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            AggregationMethod::MaxSum => "MS",
            AggregationMethod::MaxWeightedAverage => "MWA",
            AggregationMethod::RestrictedMaxSum => "RMS",
        }
    }
}

impl fmt::Display for AggregationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for AggregationMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MS" => Ok(AggregationMethod::MaxSum),
            "MWA" => Ok(AggregationMethod::MaxWeightedAverage),
            "RMS" => Ok(AggregationMethod::RestrictedMaxSum),
            _ => Err(Error::invalid(format!("unknown aggregation method {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentGroup {
    pub doc_id: String,
    /// segments × classes
    pub probs: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SegmentGroup {
    pub fn validate(&self) -> Result<()> {
        if self.probs.is_empty() {
            return Err(Error::EmptyInput(format!("document {:?} has no segments", self.doc_id)));
        }
        if self.weights.len() != self.probs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.probs.len(),
                actual: self.weights.len(),
            });
        }
        let c = self.probs[0].len();
        for row in &self.probs {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    actual: row.len(),
                });
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::invalid(format!("probability row of {:?} does not sum to 1", self.doc_id)));
            }
        }
        if self.weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::invalid(format!("segment weights of {:?} must be positive", self.doc_id)));
        }
        Ok(())
    }

    fn n_classes(&self) -> usize {
        self.probs[0].len()
    }

    fn column_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n_classes()];
        for row in &self.probs {
            for (a, p) in s.iter_mut().zip(row) {
                *a += p;
            }
        }
        s
    }
}

/// Index of the maximum; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn aggregate(g: &SegmentGroup, method: AggregationMethod) -> Result<usize> {
    g.validate()?;
    Ok(match method {
        AggregationMethod::MaxSum => argmax(&g.column_sums()),
        AggregationMethod::MaxWeightedAverage => {
            let total: f64 = g.weights.iter().sum();
            let mut s = vec![0.0; g.n_classes()];
            for (row, &w) in g.probs.iter().zip(&g.weights) {
                for (a, p) in s.iter_mut().zip(row) {
                    *a += w * p;
                }
            }
            s.iter_mut().for_each(|v| *v /= total);
            argmax(&s)
        }
        AggregationMethod::RestrictedMaxSum => {
            let mut allowed = vec![false; g.n_classes()];
            for row in &g.probs {
                allowed[argmax(row)] = true;
            }
            let sums = g.column_sums();
            let mut best: Option<usize> = None;
            for (c, &ok) in allowed.iter().enumerate() {
                if ok && best.is_none_or(|b| sums[c] > sums[b]) {
                    best = Some(c);
                }
            }
            best.expect("at least one row")
        }
    })
}

pub fn aggregate_corpus(groups: &[SegmentGroup], method: AggregationMethod) -> Result<Vec<usize>> {
    if groups.is_empty() {
        return Err(Error::EmptyInput("no documents to aggregate".into()));
    }
    groups.iter().map(|g| aggregate(g, method)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use AggregationMethod::*;

    fn group(probs: &[&[f64]], weights: &[f64]) -> SegmentGroup {
        SegmentGroup {
            doc_id: "d".into(),
            probs: probs.iter().map(|r| r.to_vec()).collect(),
            weights: weights.to_vec(),
        }
    }

    #[test]
    fn max_sum_example() {
        let g = group(&[&[0.6, 0.4], &[0.3, 0.7]], &[1.0, 1.0]);
        assert_eq!(aggregate(&g, MaxSum).unwrap(), 1);
    }

    #[test]
    fn weighted_average_differs_from_max_sum() {
        let g = group(&[&[0.6, 0.4], &[0.3, 0.7]], &[2048.0, 904.0]);
        // 0.6·2048 + 0.3·904 = 1500.0 ; 0.4·2048 + 0.7·904 = 1452.0
        assert_eq!(aggregate(&g, MaxWeightedAverage).unwrap(), 0);
        assert_eq!(aggregate(&g, MaxSum).unwrap(), 1);
    }

    #[test]
    fn single_segment_all_methods_agree() {
        let g = group(&[&[0.2, 0.5, 0.3]], &[10.0]);
        for m in AggregationMethod::ALL {
            assert_eq!(aggregate(&g, m).unwrap(), 1);
        }
    }

    #[test]
    fn restricted_excludes_classes_that_never_win() {
        // class 2 has the largest sum but wins no segment
        let g = group(&[&[0.5, 0.05, 0.45], &[0.05, 0.5, 0.45]], &[1.0, 1.0]);
        assert_eq!(aggregate(&g, MaxSum).unwrap(), 2);
        assert_eq!(aggregate(&g, RestrictedMaxSum).unwrap(), 0);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let g = group(&[&[0.5, 0.5]], &[1.0]);
        for m in AggregationMethod::ALL {
            assert_eq!(aggregate(&g, m).unwrap(), 0);
        }
    }

    #[test]
    fn invalid_groups() {
        assert!(aggregate(&group(&[], &[]), MaxSum).is_err());
        assert!(aggregate(&group(&[&[0.5, 0.6]], &[1.0]), MaxSum).is_err());
        assert!(aggregate(&group(&[&[0.5, 0.5]], &[0.0]), MaxSum).is_err());
        assert!(aggregate_corpus(&[], MaxSum).is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!("mwa".parse::<AggregationMethod>().unwrap(), MaxWeightedAverage);
        assert!("xx".parse::<AggregationMethod>().is_err());
    }
}
