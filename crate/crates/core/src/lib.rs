// SPDX-License-Identifier: MIT OR Apache-2.0

//! Document classification pipelines that compare two ways of handling
//! texts of very different length: fixed-width segmentation with
//! aggregation of segment predictions, and L1-normalized whole documents.

pub mod aggregation;
pub mod classifiers;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod hyperopt;
pub mod linalg;
pub mod resampling;
pub mod runner;
pub mod segmentation;
pub mod textprep;

pub use error::{Error, Result};
