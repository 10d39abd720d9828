// SPDX-License-Identifier: MIT OR Apache-2.0

//! Five classifiers behind one train / predict-probability interface:
//! multinomial logistic regression, a feed-forward network, a random forest,
//! one-vs-rest SVMs and a supervised variational autoencoder.

pub mod forest;
pub mod logistic;
pub mod mlp;
pub mod nn;
pub mod svae;
pub mod svm;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use nn::Activation;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Features};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    #[serde(rename = "LR")]
    LogisticRegression,
    #[serde(rename = "NN")]
    NeuralNetwork,
    #[serde(rename = "RF")]
    RandomForest,
    #[serde(rename = "SVM")]
    Svm,
    #[serde(rename = "SVAE")]
    Svae,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::Svae,
        ClassifierKind::LogisticRegression,
        ClassifierKind::NeuralNetwork,
        ClassifierKind::RandomForest,
        ClassifierKind::Svm,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            ClassifierKind::LogisticRegression => "LR",
            ClassifierKind::NeuralNetwork => "NN",
            ClassifierKind::RandomForest => "RF",
            ClassifierKind::Svm => "SVM",
            ClassifierKind::Svae => "SVAE",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LR" => Ok(ClassifierKind::LogisticRegression),
            "NN" => Ok(ClassifierKind::NeuralNetwork),
            "RF" => Ok(ClassifierKind::RandomForest),
            "SVM" => Ok(ClassifierKind::Svm),
            "SVAE" => Ok(ClassifierKind::Svae),
            _ => Err(Error::invalid(format!("unknown classifier kind {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    L1,
    L2,
    ElasticNet,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    pub c: f64,
    pub penalty: Penalty,
    /// Elastic-net mixing: 1 is pure L1, 0 pure L2. Ignored for other penalties.
    pub l1_ratio: f64,
    pub tol: f64,
    pub max_iter: usize,
}

fn default_lr_max_iter() -> usize {
    1000
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            c: 100.0,
            penalty: Penalty::L2,
            l1_ratio: 0.5,
            tol: 1e-4,
            max_iter: default_lr_max_iter(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    /// One size per hidden layer (1 to 3 layers).
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub tol: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
}

fn default_mlp_epochs() -> usize {
    200
}

fn default_batch() -> usize {
    32
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: vec![100],
            activation: Activation::Relu,
            learning_rate: 1e-3,
            tol: 1e-4,
            patience: 10,
            max_epochs: default_mlp_epochs(),
            batch_size: default_batch(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 1000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Rbf,
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    pub kernel: Kernel,
    pub gamma: f64,
    pub tol: f64,
    pub max_iter: usize,
}

fn default_svm_max_iter() -> usize {
    1000
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            kernel: Kernel::Linear,
            gamma: 1e-2,
            tol: 1e-3,
            max_iter: default_svm_max_iter(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvaeParams {
    pub first_layer: usize,
    /// Size of each further encoder layer relative to the previous one; its
    /// length is the encoder depth minus one.
    pub layer_ratios: Vec<f64>,
    /// Latent dimension relative to the first encoder layer.
    pub latent_ratio: f64,
    pub weight_vae: f64,
    pub weight_clf: f64,
    pub activation: Activation,
    pub tol: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

fn default_svae_lr() -> f64 {
    1e-3
}

impl Default for SvaeParams {
    fn default() -> Self {
        SvaeParams {
            first_layer: 64,
            layer_ratios: vec![],
            latent_ratio: 0.25,
            weight_vae: 1.0,
            weight_clf: 10.0,
            activation: Activation::Tanh,
            tol: 1e-4,
            patience: 10,
            max_epochs: 100,
            learning_rate: default_svae_lr(),
            batch_size: default_batch(),
        }
    }
}

impl SvaeParams {
    pub fn encoder_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.first_layer];
        for r in &self.layer_ratios {
            let prev = *sizes.last().expect("non-empty");
            sizes.push(((prev as f64) * r).round().max(1.0) as usize);
        }
        sizes
    }

    pub fn latent_dim(&self) -> usize {
        ((self.first_layer as f64) * self.latent_ratio).round().max(1.0) as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ClassifierSpec {
    #[serde(rename = "LR")]
    Logistic(LogisticParams),
    #[serde(rename = "NN")]
    Mlp(MlpParams),
    #[serde(rename = "RF")]
    Forest(ForestParams),
    #[serde(rename = "SVM")]
    Svm(SvmParams),
    #[serde(rename = "SVAE")]
    Svae(SvaeParams),
}

fn check_range(name: &str, v: f64, lo: f64, hi: f64) -> Result<()> {
    if v.is_finite() && v >= lo && v <= hi {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {v} outside [{lo}, {hi}]")))
    }
}

fn check_int(name: &str, v: usize, lo: usize, hi: usize) -> Result<()> {
    if (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {v} outside [{lo}, {hi}]")))
    }
}

impl ClassifierSpec {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierSpec::Logistic(_) => ClassifierKind::LogisticRegression,
            ClassifierSpec::Mlp(_) => ClassifierKind::NeuralNetwork,
            ClassifierSpec::Forest(_) => ClassifierKind::RandomForest,
            ClassifierSpec::Svm(_) => ClassifierKind::Svm,
            ClassifierSpec::Svae(_) => ClassifierKind::Svae,
        }
    }

    pub fn default_for(kind: ClassifierKind) -> ClassifierSpec {
        match kind {
            ClassifierKind::LogisticRegression => ClassifierSpec::Logistic(Default::default()),
            ClassifierKind::NeuralNetwork => ClassifierSpec::Mlp(Default::default()),
            ClassifierKind::RandomForest => ClassifierSpec::Forest(Default::default()),
            ClassifierKind::Svm => ClassifierSpec::Svm(Default::default()),
            ClassifierKind::Svae => ClassifierSpec::Svae(Default::default()),
        }
    }

    /// Checks every hyperparameter against its search range.
    pub fn validate(&self) -> Result<()> {
        match self {
            ClassifierSpec::Logistic(p) => {
                check_range("C", p.c, 1e-6, 100.0)?;
                check_range("l1_ratio", p.l1_ratio, 0.0, 1.0)?;
                check_range("tol", p.tol, 1e-6, 1e-2)?;
                check_int("max_iter", p.max_iter, 1, usize::MAX)
            }
            ClassifierSpec::Mlp(p) => {
                check_int("hidden layers", p.hidden.len(), 1, 3)?;
                for &h in &p.hidden {
                    check_int("hidden layer size", h, 1, 500)?;
                }
                if p.activation == Activation::Sigmoid {
                    return Err(Error::invalid("NN activation must be logistic, tanh or relu"));
                }
                check_range("learning_rate", p.learning_rate, 1e-6, 1e-2)?;
                check_range("tol", p.tol, 1e-6, 1e-2)?;
                check_int("patience", p.patience, 1, 100)?;
                check_int("max_epochs", p.max_epochs, 1, usize::MAX)?;
                check_int("batch_size", p.batch_size, 1, usize::MAX)
            }
            ClassifierSpec::Forest(p) => {
                check_int("n_trees", p.n_trees, 1, 1000)?;
                check_int("max_depth", p.max_depth, 1, 1000)
            }
            ClassifierSpec::Svm(p) => {
                check_range("C", p.c, 1e-6, 100.0)?;
                check_range("gamma", p.gamma, 1e-6, 1e-2)?;
                check_range("tol", p.tol, 1e-6, 1e-2)?;
                check_int("max_iter", p.max_iter, 1, usize::MAX)
            }
            ClassifierSpec::Svae(p) => {
                check_int("encoder layers", p.layer_ratios.len() + 1, 1, 3)?;
                check_int("first layer size", p.first_layer, 10, 500)?;
                for &r in &p.layer_ratios {
                    check_range("layer ratio", r, 0.001, 0.9)?;
                }
                check_range("latent ratio", p.latent_ratio, 0.001, 0.9)?;
                check_range("weight_vae", p.weight_vae, 1.0, 10.0)?;
                check_range("weight_clf", p.weight_clf, 1.0, 10.0)?;
                check_range("tol", p.tol, 1e-6, 1e-2)?;
                check_int("patience", p.patience, 1, 100)?;
                check_int("max_epochs", p.max_epochs, 1, 100)?;
                check_range("learning_rate", p.learning_rate, 1e-6, 1.0)?;
                check_int("batch_size", p.batch_size, 1, usize::MAX)
            }
        }
    }
}

/// Per-sample class probabilities; columns follow `classes`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbMatrix {
    pub classes: Vec<usize>,
    pub probs: DenseMatrix,
}

impl ProbMatrix {
    pub fn n_rows(&self) -> usize {
        self.probs.rows()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.probs.row(i)
    }

    /// Label (from `classes`) of the most probable column, lowest index on ties.
    pub fn predict(&self) -> Vec<usize> {
        (0..self.n_rows())
            .map(|i| self.classes[crate::aggregation::argmax(self.row(i))])
            .collect()
    }

    /// Row `i` laid out over `n_classes` labels; unseen labels get 0.
    pub fn expanded_row(&self, i: usize, n_classes: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_classes];
        for (&c, &p) in self.classes.iter().zip(self.row(i)) {
            out[c] = p;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model")]
pub enum ModelParams {
    Logistic(logistic::LogisticModel),
    Mlp(mlp::MlpModel),
    Forest(forest::ForestModel),
    Svm(svm::SvmModel),
    Svae(svae::SvaeModel),
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub spec: ClassifierSpec,
    /// Sorted distinct training labels; internal class `i` is `classes[i]`.
    pub classes: Vec<usize>,
    pub n_features: usize,
    pub seed: u64,
    pub params: ModelParams,
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        self.spec.kind()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<TrainedModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let m: TrainedModel = serde_json::from_str(&text)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::invalid(format!("unsupported model format version {}", m.format_version)));
        }
        Ok(m)
    }
}

pub fn train(spec: &ClassifierSpec, x: &Features, y: &[usize], seed: u64) -> Result<TrainedModel> {
    spec.validate()?;
    if x.n_rows() == 0 {
        return Err(Error::EmptyInput("no training rows".into()));
    }
    if y.len() != x.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: x.n_rows(),
            actual: y.len(),
        });
    }
    if !x.all_finite() {
        return Err(Error::Training("features contain non-finite values".into()));
    }
    let mut classes: Vec<usize> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Training("training labels contain a single class".into()));
    }
    let internal: Vec<usize> = y
        .iter()
        .map(|c| classes.binary_search(c).expect("label present"))
        .collect();
    let k = classes.len();
    let params = match spec {
        ClassifierSpec::Logistic(p) => ModelParams::Logistic(logistic::fit(p, x, &internal, k)?),
        ClassifierSpec::Mlp(p) => ModelParams::Mlp(mlp::fit(p, x, &internal, k, seed)?),
        ClassifierSpec::Forest(p) => ModelParams::Forest(forest::fit(p, x, &internal, k, seed)?),
        ClassifierSpec::Svm(p) => ModelParams::Svm(svm::fit(p, x, &internal, k, seed)?),
        ClassifierSpec::Svae(p) => ModelParams::Svae(svae::fit(p, x, &internal, k, seed)?),
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        classes,
        n_features: x.n_cols(),
        seed,
        params,
    })
}

pub fn predict_proba(model: &TrainedModel, x: &Features) -> Result<ProbMatrix> {
    if x.n_cols() != model.n_features {
        return Err(Error::DimensionMismatch {
            expected: model.n_features,
            actual: x.n_cols(),
        });
    }
    let probs = match &model.params {
        ModelParams::Logistic(m) => m.predict_proba(x),
        ModelParams::Mlp(m) => m.predict_proba(x),
        ModelParams::Forest(m) => m.predict_proba(x),
        ModelParams::Svm(m) => m.predict_proba(x),
        ModelParams::Svae(m) => m.predict_proba(x),
    };
    Ok(ProbMatrix {
        classes: model.classes.clone(),
        probs,
    })
}

/// Numerically stable softmax in place.
pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}
