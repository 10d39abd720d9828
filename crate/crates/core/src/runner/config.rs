// SPDX-License-Identifier: MIT OR Apache-2.0

//! TOML experiment configuration.
//!
//! ```toml
//! corpus = "prepped.jsonl"
//! base = "segment"
//! pipeline = "P4"
//! aggregation = ["MS", "MWA", "RMS"]
//! seed = 7
//! min_class_segments = 10
//!
//! [classifier]
//! preset = "seg-p4-lr"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::pipeline::PipelineId;
use super::presets::load_preset;
use super::Base;
use crate::aggregation::AggregationMethod;
use crate::classifiers::ClassifierSpec;
use crate::error::{Error, Result};
use crate::resampling::{OversampleMode, OversamplePolicy};
use crate::segmentation::{EliminationTargets, DEFAULT_WIDTH};

pub const DEFAULT_SVD_DIM: usize = 800;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassifierChoice {
    Preset { preset: String },
    Spec(ClassifierSpec),
}

impl ClassifierChoice {
    pub fn resolve(&self) -> Result<ClassifierSpec> {
        let spec = match self {
            ClassifierChoice::Preset { preset } => load_preset(preset)?,
            ClassifierChoice::Spec(s) => s.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OversampleConfig {
    #[serde(flatten)]
    pub mode: OversampleMode,
    pub k_neighbors: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Corpus file; preprocessed term strings unless `preprocess` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[serde(default)]
    pub preprocess: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resources: Option<PathBuf>,
    /// Ready segment file; when given, segmentation settings are ignored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folds_file: Option<PathBuf>,
    pub base: Base,
    pub pipeline: PipelineId,
    pub classifier: ClassifierChoice,
    #[serde(default)]
    pub aggregation: Vec<AggregationMethod>,
    #[serde(default = "default_folds")]
    pub n_folds: usize,
    #[serde(default)]
    pub seed: u64,
    /// Only valid for pipelines with an SVD step; defaults to 800 there.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svd_dim: Option<usize>,
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_min_class_segments")]
    pub min_class_segments: usize,
    /// Elimination preset name or path of a JSON `{class: target}` file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eliminate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oversample: Option<OversampleConfig>,
    /// Directory that receives the run record.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_folds() -> usize {
    5
}

fn default_width() -> usize {
    DEFAULT_WIDTH
}

fn default_min_class_segments() -> usize {
    100
}

impl ExperimentConfig {
    pub fn new(base: Base, pipeline: PipelineId, classifier: ClassifierChoice) -> Self {
        ExperimentConfig {
            name: None,
            corpus: None,
            preprocess: false,
            resources: None,
            segments: None,
            folds_file: None,
            base,
            pipeline,
            classifier,
            aggregation: Vec::new(),
            n_folds: default_folds(),
            seed: 0,
            svd_dim: None,
            width: default_width(),
            min_class_segments: default_min_class_segments(),
            eliminate: None,
            oversample: None,
            output: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut cfg = Self::from_toml(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.corpus,
            &mut cfg.resources,
            &mut cfg.segments,
            &mut cfg.folds_file,
            &mut cfg.output,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Fills base-dependent defaults and rejects inconsistent settings.
    pub fn resolved(&self) -> Result<ExperimentConfig> {
        let mut c = self.clone();
        if c.n_folds < 2 {
            return Err(Error::Config("at least two folds are required".into()));
        }
        if c.width == 0 {
            return Err(Error::Config("segment width must be positive".into()));
        }
        match c.base {
            Base::Segment => {
                if c.aggregation.is_empty() {
                    c.aggregation = AggregationMethod::ALL.to_vec();
                }
            }
            Base::Document => {
                if !c.aggregation.is_empty() {
                    return Err(Error::Config("aggregation applies to the segment base only".into()));
                }
            }
        }
        if c.pipeline.has_svd() {
            let k = c.svd_dim.unwrap_or(DEFAULT_SVD_DIM);
            if k == 0 {
                return Err(Error::Config("svd_dim must be positive".into()));
            }
            c.svd_dim = Some(k);
        } else if c.svd_dim.is_some() {
            return Err(Error::Infeasible(format!("{} has no SVD step; remove svd_dim", c.pipeline)));
        }
        if c.oversample.is_none() {
            let p = self.default_policy();
            c.oversample = Some(OversampleConfig {
                mode: p.mode,
                k_neighbors: p.k_neighbors,
            });
        }
        if c.corpus.is_none() && c.segments.is_none() {
            return Err(Error::Config("either corpus or segments must be given".into()));
        }
        c.classifier.resolve()?;
        c.oversample_policy().validate()?;
        Ok(c)
    }

    fn default_policy(&self) -> OversamplePolicy {
        match self.base {
            Base::Segment => OversamplePolicy::segments(self.seed),
            Base::Document => OversamplePolicy::documents(self.seed),
        }
    }

    pub fn oversample_policy(&self) -> OversamplePolicy {
        match self.oversample {
            Some(o) => OversamplePolicy {
                mode: o.mode,
                k_neighbors: o.k_neighbors,
                seed: self.seed,
            },
            None => self.default_policy(),
        }
    }

    pub fn elimination_targets(&self) -> Result<Option<EliminationTargets>> {
        let Some(e) = &self.eliminate else {
            return Ok(None);
        };
        if let Some(t) = EliminationTargets::preset(e) {
            return Ok(Some(t));
        }
        load_elimination_file(Path::new(e)).map(Some)
    }

    /// Cell name: explicit name or `<seg|doc>-p<n>-<classifier>`.
    pub fn cell_name(&self) -> Result<String> {
        if let Some(n) = &self.name {
            return Ok(n.clone());
        }
        let spec = self.classifier.resolve()?;
        Ok(super::presets::preset_name(self.base, self.pipeline, spec.kind()))
    }
}

/// Per-class targets from a JSON object, or a cap from `{"cap": n}`.
pub fn load_elimination_file(path: &Path) -> Result<EliminationTargets> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let map: BTreeMap<String, usize> = serde_json::from_str(&text)?;
    if map.len() == 1 {
        if let Some(&cap) = map.get("cap") {
            return Ok(EliminationTargets::Cap(cap));
        }
    }
    Ok(EliminationTargets::PerClass(map))
}
