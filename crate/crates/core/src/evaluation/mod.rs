// SPDX-License-Identifier: MIT OR Apache-2.0

//! Cross-validation folds that keep documents intact, and class-weighted
//! classification metrics.

mod folds;
mod metrics;

pub use folds::{build_folds, read_folds, FoldAssignment};
pub use metrics::{compute_metrics, ClassMetrics, MetricsReport};
