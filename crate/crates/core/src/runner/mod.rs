// SPDX-License-Identifier: MIT OR Apache-2.0

//! Experiment orchestration: the four feature pipelines on segment and
//! document bases, cross-validation, aggregation, presets and reports.

pub mod config;
pub mod experiment;
pub mod pipeline;
pub mod presets;
pub mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use config::{ClassifierChoice, ExperimentConfig, OversampleConfig};
pub use experiment::{
    build_fold_data, prepare_data, run_experiment, run_grid, run_prepared, search_cell, FoldData, FoldRecord,
    GridCell, PreparedData, PreparedDoc, RunRecord, Timings, NO_AGGREGATION,
};
pub use pipeline::{fit_pipeline, FittedPipeline, PipelineId, TrainingMatrix};
pub use presets::{load_preset, preset_name, preset_names};
pub use report::{emit_report, parse_report, report_rows, ReportFormat, ReportRow};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Base {
    Segment,
    Document,
}

impl Base {
    pub const ALL: [Base; 2] = [Base::Segment, Base::Document];

    /// Short label used in cell names and report rows.
    pub fn short_name(self) -> &'static str {
        match self {
            Base::Segment => "Seg",
            Base::Document => "Doc",
        }
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Base::Segment => "segment",
            Base::Document => "document",
        })
    }
}

impl FromStr for Base {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "segment" | "seg" => Ok(Base::Segment),
            "document" | "doc" => Ok(Base::Document),
            _ => Err(Error::invalid(format!("unknown base {s:?}"))),
        }
    }
}

/// Sizes the global worker pool from `DOCROUTE_WORKERS` (or `fallback`).
/// Later calls are no-ops once the pool exists.
pub fn init_worker_pool(fallback: Option<usize>) -> Result<()> {
    let from_env = match std::env::var("DOCROUTE_WORKERS") {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("DOCROUTE_WORKERS must be a positive integer, got {v:?}")))?,
        ),
        Err(_) => None,
    };
    let Some(n) = from_env.or(fallback) else {
        return Ok(());
    };
    if n == 0 {
        return Err(Error::Config("worker count must be at least 1".into()));
    }
    if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
        log::debug!("worker pool already initialized");
    }
    Ok(())
}
