// SPDX-License-Identifier: MIT OR Apache-2.0

//! Bundled best-known hyperparameters per base, pipeline and classifier.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use super::pipeline::PipelineId;
use super::Base;
use crate::classifiers::{ClassifierKind, ClassifierSpec};
use crate::error::{Error, Result};

const PRESETS: &str = include_str!("../../resources/presets.toml");

fn table() -> &'static BTreeMap<String, ClassifierSpec> {
    static TABLE: OnceLock<BTreeMap<String, ClassifierSpec>> = OnceLock::new();
    TABLE.get_or_init(|| toml::from_str(PRESETS).expect("bundled presets parse"))
}

/// `<seg|doc>-p<n>-<classifier>`, e.g. `doc-p1-lr`.
pub fn preset_name(base: Base, pipeline: PipelineId, kind: ClassifierKind) -> String {
    format!(
        "{}-p{}-{}",
        base.short_name().to_ascii_lowercase(),
        pipeline.number(),
        kind.short_name().to_ascii_lowercase()
    )
}

pub fn preset_names() -> Vec<&'static str> {
    table().keys().map(String::as_str).collect()
}

pub fn load_preset(name: &str) -> Result<ClassifierSpec> {
    table()
        .get(&name.to_ascii_lowercase())
        .cloned()
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}
