// SPDX-License-Identifier: MIT OR Apache-2.0

//! Text preprocessing: cleaning to German letters and digits, lemmatization,
//! token filters, CISTEM stemming and the final letters-only filter.

mod cistem;
mod resources;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use cistem::stem;
pub use resources::{LemmaDictionary, Resources, StopResources};

use crate::corpus::{Document, LabeledCorpus};
use crate::error::Result;

pub fn is_german_letter(c: char) -> bool {
    c.is_ascii_alphabetic() || matches!(c, 'ä' | 'ö' | 'ü' | 'Ä' | 'Ö' | 'Ü' | 'ß')
}

fn is_kept(c: char) -> bool {
    is_german_letter(c) || c.is_ascii_digit()
}

/// Replaces each maximal run of characters that are neither German letters nor
/// digits with a single blank.
pub fn clean_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut in_run = false;
    for c in raw.chars() {
        if is_kept(c) {
            out.push(c);
            in_run = false;
        } else if !in_run {
            out.push(' ');
            in_run = true;
        }
    }
    out
}

pub fn tokenize(cleaned: &str) -> Vec<String> {
    cleaned.split(' ').filter(|t| !t.is_empty()).map(str::to_string).collect()
}

/// Single-pass dictionary replacement; replacements are not looked up again.
pub fn lemmatize(tokens: Vec<String>, dict: &LemmaDictionary) -> Vec<String> {
    tokens
        .into_iter()
        .map(|t| match dict.lookup(&t) {
            Some(root) => root.to_string(),
            None => t,
        })
        .collect()
}

pub fn filter_tokens(tokens: Vec<String>, res: &StopResources) -> Vec<String> {
    tokens.into_iter().filter(|t| keep_token(t, res)).collect()
}

fn keep_token(t: &str, res: &StopResources) -> bool {
    let distinct: HashSet<char> = t.chars().collect();
    distinct.len() >= 3 && !t.chars().all(|c| c.is_ascii_digit()) && !res.contains(t)
}

/// Blank-separated sequence of letters-only terms with no empty terms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TermString(String);

impl TermString {
    pub fn new(s: impl Into<String>) -> std::result::Result<Self, String> {
        let s = s.into();
        if s.is_empty() {
            return Ok(TermString(s));
        }
        for term in s.split(' ') {
            if term.is_empty() {
                return Err(format!("term string has a leading, trailing or double blank: {s:?}"));
            }
            if !term.chars().all(is_german_letter) {
                return Err(format!("term {term:?} contains non-letters"));
            }
        }
        Ok(TermString(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.0.split(' ').filter(|t| !t.is_empty())
    }
}

impl TryFrom<String> for TermString {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, String> {
        TermString::new(s)
    }
}

impl From<TermString> for String {
    fn from(t: TermString) -> String {
        t.0
    }
}

impl fmt::Display for TermString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Full chain: clean, split, lemmatize, filter, stem, lowercase, drop tokens
/// that are not letters only.
pub fn preprocess(raw: &str, dict: &LemmaDictionary, res: &StopResources) -> TermString {
    let tokens = tokenize(&clean_text(raw));
    let tokens = lemmatize(tokens, dict);
    let tokens = filter_tokens(tokens, res);
    let terms: Vec<String> = tokens
        .iter()
        .map(|t| stem(t).to_lowercase())
        .filter(|t| !t.is_empty() && t.chars().all(is_german_letter))
        .collect();
    TermString(terms.join(" "))
}

/// Preprocesses every document. Documents whose text becomes empty are kept
/// with empty text; segmentation drops them.
pub fn preprocess_corpus(corpus: &LabeledCorpus, resources: &Resources) -> Result<LabeledCorpus> {
    use rayon::prelude::*;
    let docs: Vec<Document> = corpus
        .documents()
        .par_iter()
        .map(|d| Document {
            id: d.id.clone(),
            department: d.department.clone(),
            text: preprocess(&d.text, &resources.lemmas, &resources.stop).into(),
        })
        .collect();
    LabeledCorpus::new_allow_empty(docs)
}
