// SPDX-License-Identifier: MIT OR Apache-2.0

//! Bag-of-words features: vocabulary, term counts, row normalization, idf
//! weighting and truncated SVD.

mod svd;

use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use svd::{fit_truncated_svd, svd_transform, SvdModel};

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::segmentation::terms;

/// Sorted distinct terms with a term→column map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(mut terms: Vec<String>) -> Self {
        terms.sort();
        terms.dedup();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary { terms, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.terms
    }
}

impl Vocabulary {
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }
}

pub fn fit_vocabulary<S: AsRef<str>>(texts: &[S]) -> Result<Vocabulary> {
    let set: BTreeSet<&str> = texts.iter().flat_map(|t| terms(t.as_ref())).collect();
    if set.is_empty() {
        return Err(Error::EmptyInput("no terms to build a vocabulary from".into()));
    }
    Ok(Vocabulary::from(set.into_iter().map(str::to_string).collect::<Vec<_>>()))
}

/// Term counts per text; terms outside the vocabulary are ignored.
pub fn count_vectorize<S: AsRef<str>>(texts: &[S], vocab: &Vocabulary) -> CsrMatrix {
    let mut m = CsrMatrix::empty(vocab.len());
    for t in texts {
        let mut counts: HashMap<usize, f64> = HashMap::new();
        for term in terms(t.as_ref()) {
            if let Some(j) = vocab.index_of(term) {
                *counts.entry(j).or_default() += 1.0;
            }
        }
        m.push_row(counts.into_iter().collect()).expect("columns come from the vocabulary");
    }
    m
}

pub fn l1_normalize(m: &CsrMatrix) -> CsrMatrix {
    m.map_rows(|_, vals| {
        let norm: f64 = vals.iter().map(|v| v.abs()).sum();
        if norm == 0.0 {
            vals.to_vec()
        } else {
            vals.iter().map(|v| v / norm).collect()
        }
    })
}

pub fn l2_normalize(m: &CsrMatrix) -> CsrMatrix {
    m.map_rows(|_, vals| {
        let norm = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            vals.to_vec()
        } else {
            vals.iter().map(|v| v / norm).collect()
        }
    })
}

pub fn l2_normalize_dense(m: &mut crate::linalg::DenseMatrix) {
    for i in 0..m.rows() {
        let row = m.row_mut(i);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
}

/// Inverse document frequencies `ln(N / df)`; unseen terms get weight 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdfModel {
    pub idf: Vec<f64>,
    pub document_frequency: Vec<usize>,
    pub n_rows: usize,
}

pub fn fit_idf(m: &CsrMatrix) -> Result<IdfModel> {
    if m.n_rows() == 0 {
        return Err(Error::EmptyInput("cannot fit idf on an empty matrix".into()));
    }
    let mut df = vec![0usize; m.n_cols()];
    for i in 0..m.n_rows() {
        for &j in m.row(i).0 {
            df[j] += 1;
        }
    }
    let n = m.n_rows() as f64;
    let idf = df
        .iter()
        .map(|&d| if d == 0 { 0.0 } else { (n / d as f64).ln() })
        .collect();
    Ok(IdfModel {
        idf,
        document_frequency: df,
        n_rows: m.n_rows(),
    })
}

pub fn apply_idf(m: &CsrMatrix, model: &IdfModel) -> Result<CsrMatrix> {
    if m.n_cols() != model.idf.len() {
        return Err(Error::DimensionMismatch {
            expected: model.idf.len(),
            actual: m.n_cols(),
        });
    }
    Ok(m.map_rows(|idx, vals| idx.iter().zip(vals).map(|(&j, v)| v * model.idf[j]).collect()))
}

/// Writes `row col value` triplets (0-based) for debugging.
pub fn write_triplets(m: &CsrMatrix, out: &mut impl Write) -> std::io::Result<()> {
    for i in 0..m.n_rows() {
        let (idx, val) = m.row(i);
        for (&j, &v) in idx.iter().zip(val) {
            writeln!(out, "{i} {j} {v}")?;
        }
    }
    Ok(())
}
