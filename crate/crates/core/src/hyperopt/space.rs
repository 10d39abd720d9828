// SPDX-License-Identifier: MIT OR Apache-2.0

//! Search spaces, assignments and the encoding into the unit cube used by
//! the surrogate.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::{
    Activation, ClassifierKind, ClassifierSpec, ForestParams, Kernel, LogisticParams, MlpParams, Penalty,
    SvaeParams, SvmParams,
};
use crate::error::{Error, Result};
use crate::runner::Base;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Domain {
    Continuous { lo: f64, hi: f64, scale: Scale },
    Integer { lo: i64, hi: i64 },
    Categorical { options: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub domain: Domain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Float(f64),
    Category(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v:.6e}"),
            Value::Category(v) => f.write_str(v),
        }
    }
}

pub type Assignment = BTreeMap<String, Value>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub params: Vec<Param>,
}

fn continuous(name: &str, lo: f64, hi: f64) -> Param {
    // three or more orders of magnitude are searched on a log scale
    let scale = if lo > 0.0 && hi / lo >= 1e3 { Scale::Log } else { Scale::Linear };
    Param {
        name: name.into(),
        domain: Domain::Continuous { lo, hi, scale },
    }
}

fn integer(name: &str, lo: i64, hi: i64) -> Param {
    Param {
        name: name.into(),
        domain: Domain::Integer { lo, hi },
    }
}

fn categorical(name: &str, options: &[&str]) -> Param {
    Param {
        name: name.into(),
        domain: Domain::Categorical {
            options: options.iter().map(|s| s.to_string()).collect(),
        },
    }
}

/// Search space of a classifier. Both bases share the same ranges.
pub fn space_for(kind: ClassifierKind, _base: Base) -> SearchSpace {
    let params = match kind {
        ClassifierKind::LogisticRegression => vec![
            continuous("C", 1e-6, 100.0),
            categorical("penalty", &["l1", "l2", "elasticnet", "none"]),
            continuous("l1_ratio", 0.0, 1.0),
            continuous("tol", 1e-6, 1e-2),
        ],
        ClassifierKind::NeuralNetwork => vec![
            integer("layers", 1, 3),
            integer("layer_size_1", 1, 500),
            integer("layer_size_2", 1, 500),
            integer("layer_size_3", 1, 500),
            categorical("activation", &["logistic", "tanh", "relu"]),
            continuous("learning_rate", 1e-6, 1e-2),
            continuous("tol", 1e-6, 1e-2),
            integer("patience", 1, 100),
        ],
        ClassifierKind::RandomForest => vec![integer("n_trees", 1, 1000), integer("max_depth", 1, 1000)],
        ClassifierKind::Svm => vec![
            continuous("C", 1e-6, 100.0),
            categorical("kernel", &["rbf", "linear"]),
            continuous("gamma", 1e-6, 1e-2),
            continuous("tol", 1e-6, 1e-2),
        ],
        ClassifierKind::Svae => vec![
            integer("layers", 1, 3),
            integer("first_layer", 10, 500),
            continuous("ratio_2", 0.001, 0.9),
            continuous("ratio_3", 0.001, 0.9),
            continuous("latent_ratio", 0.001, 0.9),
            continuous("weight_vae", 1.0, 10.0),
            continuous("weight_clf", 1.0, 10.0),
            categorical("activation", &["logistic", "relu", "tanh", "sigmoid"]),
            continuous("tol", 1e-6, 1e-2),
            integer("patience", 1, 100),
            integer("max_epochs", 1, 100),
        ],
    };
    SearchSpace { params }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.params.is_empty() {
            return Err(Error::invalid("search space has no parameters"));
        }
        for p in &self.params {
            match &p.domain {
                Domain::Continuous { lo, hi, scale } => {
                    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                        return Err(Error::invalid(format!("{}: need lo < hi", p.name)));
                    }
                    if *scale == Scale::Log && *lo <= 0.0 {
                        return Err(Error::invalid(format!("{}: log scale needs lo > 0", p.name)));
                    }
                }
                Domain::Integer { lo, hi } => {
                    if lo >= hi {
                        return Err(Error::invalid(format!("{}: need lo < hi", p.name)));
                    }
                }
                Domain::Categorical { options } => {
                    if options.is_empty() {
                        return Err(Error::invalid(format!("{}: no options", p.name)));
                    }
                }
            }
        }
        Ok(())
    }

    /// Width of the encoded vector.
    pub fn encoded_dim(&self) -> usize {
        self.params
            .iter()
            .map(|p| match &p.domain {
                Domain::Categorical { options } => options.len(),
                _ => 1,
            })
            .sum()
    }

    pub fn contains(&self, a: &Assignment) -> bool {
        a.len() == self.params.len()
            && self.params.iter().all(|p| match (&p.domain, a.get(&p.name)) {
                (Domain::Continuous { lo, hi, .. }, Some(Value::Float(v))) => v >= lo && v <= hi,
                (Domain::Integer { lo, hi }, Some(Value::Int(v))) => v >= lo && v <= hi,
                (Domain::Categorical { options }, Some(Value::Category(v))) => options.contains(v),
                _ => false,
            })
    }

    /// Uniform draw (log-uniform on log-scaled parameters).
    pub fn sample(&self, rng: &mut impl Rng) -> Assignment {
        let mut u = Vec::with_capacity(self.encoded_dim());
        for p in &self.params {
            match &p.domain {
                Domain::Categorical { options } => {
                    let pick = rng.random_range(0..options.len());
                    u.extend((0..options.len()).map(|i| if i == pick { 1.0 } else { 0.0 }));
                }
                Domain::Integer { lo, hi } => {
                    // equal mass per integer
                    let v = rng.random_range(*lo..=*hi);
                    u.push((v - lo) as f64 / (hi - lo) as f64);
                }
                Domain::Continuous { .. } => u.push(rng.random::<f64>()),
            }
        }
        self.decode(&u)
    }

    pub fn encode(&self, a: &Assignment) -> Vec<f64> {
        let mut u = Vec::with_capacity(self.encoded_dim());
        for p in &self.params {
            let v = a.get(&p.name);
            match (&p.domain, v) {
                (Domain::Continuous { lo, hi, scale }, Some(Value::Float(x))) => u.push(match scale {
                    Scale::Linear => (x - lo) / (hi - lo),
                    Scale::Log => (x.ln() - lo.ln()) / (hi.ln() - lo.ln()),
                }),
                (Domain::Integer { lo, hi }, Some(Value::Int(x))) => u.push((x - lo) as f64 / (hi - lo) as f64),
                (Domain::Categorical { options }, Some(Value::Category(x))) => {
                    u.extend(options.iter().map(|o| if o == x { 1.0 } else { 0.0 }))
                }
                (Domain::Categorical { options }, _) => u.extend(std::iter::repeat_n(0.0, options.len())),
                _ => u.push(0.0),
            }
        }
        u
    }

    /// Maps a point of the unit cube to the nearest valid assignment.
    pub fn decode(&self, u: &[f64]) -> Assignment {
        let mut a = Assignment::new();
        let mut pos = 0;
        for p in &self.params {
            match &p.domain {
                Domain::Continuous { lo, hi, scale } => {
                    let t = u[pos].clamp(0.0, 1.0);
                    let v = match scale {
                        Scale::Linear => lo + t * (hi - lo),
                        Scale::Log => (lo.ln() + t * (hi.ln() - lo.ln())).exp(),
                    };
                    a.insert(p.name.clone(), Value::Float(v.clamp(*lo, *hi)));
                    pos += 1;
                }
                Domain::Integer { lo, hi } => {
                    let t = u[pos].clamp(0.0, 1.0);
                    let v = (*lo as f64 + t * (hi - lo) as f64).round() as i64;
                    a.insert(p.name.clone(), Value::Int(v.clamp(*lo, *hi)));
                    pos += 1;
                }
                Domain::Categorical { options } => {
                    let block = &u[pos..pos + options.len()];
                    let i = crate::aggregation::argmax(block);
                    a.insert(p.name.clone(), Value::Category(options[i].clone()));
                    pos += options.len();
                }
            }
        }
        a
    }
}

fn get_f(a: &Assignment, k: &str) -> Result<f64> {
    match a.get(k) {
        Some(Value::Float(v)) => Ok(*v),
        Some(Value::Int(v)) => Ok(*v as f64),
        _ => Err(Error::invalid(format!("assignment lacks numeric {k:?}"))),
    }
}

fn get_i(a: &Assignment, k: &str) -> Result<usize> {
    match a.get(k) {
        Some(Value::Int(v)) if *v >= 0 => Ok(*v as usize),
        _ => Err(Error::invalid(format!("assignment lacks integer {k:?}"))),
    }
}

fn get_c<'a>(a: &'a Assignment, k: &str) -> Result<&'a str> {
    match a.get(k) {
        Some(Value::Category(v)) => Ok(v),
        _ => Err(Error::invalid(format!("assignment lacks option {k:?}"))),
    }
}

/// Builds a classifier spec from an assignment of [`space_for`]. Inactive
/// conditional parameters are ignored.
pub fn spec_from_assignment(kind: ClassifierKind, a: &Assignment) -> Result<ClassifierSpec> {
    let spec = match kind {
        ClassifierKind::LogisticRegression => ClassifierSpec::Logistic(LogisticParams {
            c: get_f(a, "C")?,
            penalty: match get_c(a, "penalty")? {
                "l1" => Penalty::L1,
                "l2" => Penalty::L2,
                "elasticnet" => Penalty::ElasticNet,
                "none" => Penalty::None,
                other => return Err(Error::invalid(format!("unknown penalty {other:?}"))),
            },
            l1_ratio: get_f(a, "l1_ratio")?,
            tol: get_f(a, "tol")?,
            ..Default::default()
        }),
        ClassifierKind::NeuralNetwork => {
            let layers = get_i(a, "layers")?;
            let hidden = (1..=layers)
                .map(|l| get_i(a, &format!("layer_size_{l}")))
                .collect::<Result<Vec<_>>>()?;
            ClassifierSpec::Mlp(MlpParams {
                hidden,
                activation: get_c(a, "activation")?.parse::<Activation>()?,
                learning_rate: get_f(a, "learning_rate")?,
                tol: get_f(a, "tol")?,
                patience: get_i(a, "patience")?,
                ..Default::default()
            })
        }
        ClassifierKind::RandomForest => ClassifierSpec::Forest(ForestParams {
            n_trees: get_i(a, "n_trees")?,
            max_depth: get_i(a, "max_depth")?,
        }),
        ClassifierKind::Svm => ClassifierSpec::Svm(SvmParams {
            c: get_f(a, "C")?,
            kernel: match get_c(a, "kernel")? {
                "rbf" => Kernel::Rbf,
                "linear" => Kernel::Linear,
                other => return Err(Error::invalid(format!("unknown kernel {other:?}"))),
            },
            gamma: get_f(a, "gamma")?,
            tol: get_f(a, "tol")?,
            ..Default::default()
        }),
        ClassifierKind::Svae => {
            let layers = get_i(a, "layers")?;
            let layer_ratios = (2..=layers)
                .map(|l| get_f(a, &format!("ratio_{l}")))
                .collect::<Result<Vec<_>>>()?;
            ClassifierSpec::Svae(SvaeParams {
                first_layer: get_i(a, "first_layer")?,
                layer_ratios,
                latent_ratio: get_f(a, "latent_ratio")?,
                weight_vae: get_f(a, "weight_vae")?,
                weight_clf: get_f(a, "weight_clf")?,
                activation: get_c(a, "activation")?.parse::<Activation>()?,
                tol: get_f(a, "tol")?,
                patience: get_i(a, "patience")?,
                max_epochs: get_i(a, "max_epochs")?,
                ..Default::default()
            })
        }
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn log_scale_marking() {
        let s = space_for(ClassifierKind::LogisticRegression, Base::Document);
        let scales: Vec<_> = s
            .params
            .iter()
            .filter_map(|p| match &p.domain {
                Domain::Continuous { scale, .. } => Some((p.name.as_str(), *scale)),
                _ => None,
            })
            .collect();
        assert_eq!(scales, vec![("C", Scale::Log), ("l1_ratio", Scale::Linear), ("tol", Scale::Log)]);
    }

    #[test]
    fn samples_build_valid_specs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for kind in ClassifierKind::ALL {
            let space = space_for(kind, Base::Segment);
            space.validate().unwrap();
            for _ in 0..50 {
                let a = space.sample(&mut rng);
                assert!(space.contains(&a));
                let u = space.encode(&a);
                let back = space.encode(&space.decode(&u));
                assert!(u.iter().zip(&back).all(|(x, y)| (x - y).abs() < 1e-9));
                spec_from_assignment(kind, &a).unwrap();
            }
        }
    }
}
