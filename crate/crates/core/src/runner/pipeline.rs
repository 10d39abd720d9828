// SPDX-License-Identifier: MIT OR Apache-2.0

//! The four feature pipelines. All share count → L1 → oversample → tf-idf;
//! P1 adds SVD and L2, P2 SVD only, P3 L2 only.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{fit_truncated_svd, svd_transform, SvdModel};
use crate::features::{
    apply_idf, count_vectorize, fit_idf, fit_vocabulary, l1_normalize, l2_normalize, l2_normalize_dense, IdfModel,
    Vocabulary,
};
use crate::linalg::Features;
use crate::resampling::{smote, OversamplePolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PipelineId {
    P1,
    P2,
    P3,
    P4,
}

impl PipelineId {
    pub const ALL: [PipelineId; 4] = [PipelineId::P1, PipelineId::P2, PipelineId::P3, PipelineId::P4];

    pub fn number(self) -> usize {
        match self {
            PipelineId::P1 => 1,
            PipelineId::P2 => 2,
            PipelineId::P3 => 3,
            PipelineId::P4 => 4,
        }
    }

    pub fn from_number(n: usize) -> Result<Self> {
        match n {
            1 => Ok(PipelineId::P1),
            2 => Ok(PipelineId::P2),
            3 => Ok(PipelineId::P3),
            4 => Ok(PipelineId::P4),
            _ => Err(Error::invalid(format!("pipeline must be 1-4, got {n}"))),
        }
    }

    pub fn has_svd(self) -> bool {
        matches!(self, PipelineId::P1 | PipelineId::P2)
    }

    pub fn has_l2(self) -> bool {
        matches!(self, PipelineId::P1 | PipelineId::P3)
    }
}

impl fmt::Display for PipelineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.number())
    }
}

impl FromStr for PipelineId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches(['P', 'p']);
        t.parse::<usize>()
            .map_err(|_| Error::invalid(format!("unknown pipeline {s:?}")))
            .and_then(PipelineId::from_number)
    }
}

/// Transforms fitted on training rows, applied unchanged to test rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub pipeline: PipelineId,
    pub vocabulary: Vocabulary,
    pub idf: IdfModel,
    pub svd: Option<SvdModel>,
}

/// Classifier input built from the training rows, synthetic rows appended.
#[derive(Clone, Debug)]
pub struct TrainingMatrix {
    pub features: Features,
    pub labels: Vec<usize>,
    pub original_rows: usize,
    pub synthetic_rows: usize,
    pub synthetic_share: f64,
    pub k_used: BTreeMap<usize, usize>,
}

fn finish(pipeline: PipelineId, tfidf: crate::linalg::CsrMatrix, svd: Option<&SvdModel>) -> Result<Features> {
    Ok(match (pipeline, svd) {
        (PipelineId::P1, Some(m)) => {
            let mut d = svd_transform(&tfidf, m)?;
            l2_normalize_dense(&mut d);
            Features::Dense(d)
        }
        (PipelineId::P2, Some(m)) => Features::Dense(svd_transform(&tfidf, m)?),
        (PipelineId::P3, _) => Features::Sparse(l2_normalize(&tfidf)),
        (PipelineId::P4, _) => Features::Sparse(tfidf),
        (p, None) => return Err(Error::invalid(format!("{p} needs a fitted SVD"))),
    })
}

/// Fits every transform of `pipeline` on the training texts.
pub fn fit_pipeline<S: AsRef<str>>(
    pipeline: PipelineId,
    texts: &[S],
    labels: &[usize],
    svd_dim: Option<usize>,
    policy: &OversamplePolicy,
    seed: u64,
) -> Result<(FittedPipeline, TrainingMatrix)> {
    if texts.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: texts.len(),
            actual: labels.len(),
        });
    }
    let vocabulary = fit_vocabulary(texts)?;
    let l1 = l1_normalize(&count_vectorize(texts, &vocabulary));
    let over = smote(&l1, labels, policy)?;
    let idf = fit_idf(&over.matrix)?;
    let tfidf = apply_idf(&over.matrix, &idf)?;
    let svd = if pipeline.has_svd() {
        let k = svd_dim.ok_or_else(|| Error::invalid(format!("{pipeline} needs an SVD dimension")))?;
        Some(fit_truncated_svd(&tfidf, k, seed)?)
    } else {
        None
    };
    let features = finish(pipeline, tfidf, svd.as_ref())?;
    let synthetic_rows = over.synthetic.iter().filter(|&&s| s).count();
    let training = TrainingMatrix {
        features,
        original_rows: over.labels.len() - synthetic_rows,
        synthetic_rows,
        synthetic_share: over.synthetic_share(),
        labels: over.labels,
        k_used: over.k_used,
    };
    Ok((
        FittedPipeline {
            pipeline,
            vocabulary,
            idf,
            svd,
        },
        training,
    ))
}

impl FittedPipeline {
    /// Effective SVD dimension, if the pipeline has one.
    pub fn svd_dim(&self) -> Option<usize> {
        self.svd.as_ref().map(|s| s.k)
    }

    pub fn transform<S: AsRef<str>>(&self, texts: &[S]) -> Result<Features> {
        let l1 = l1_normalize(&count_vectorize(texts, &self.vocabulary));
        let tfidf = apply_idf(&l1, &self.idf)?;
        finish(self.pipeline, tfidf, self.svd.as_ref())
    }
}
