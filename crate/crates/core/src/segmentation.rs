// SPDX-License-Identifier: MIT OR Apache-2.0

//! Fixed-width segmentation of term strings, class filtering, segment
//! elimination and concatenation of surviving segments back into documents.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_jsonl, Document, LabeledCorpus};
use crate::error::{Error, Result};
use crate::textprep::TermString;

pub const DEFAULT_WIDTH: usize = 2048;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub doc_id: String,
    pub index: usize,
    pub department: String,
    pub text: String,
}

impl Segment {
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentedCorpus {
    segments: Vec<Segment>,
    width: usize,
}

impl SegmentedCorpus {
    /// Checks that segments are grouped by document, index-ordered within a
    /// document, and consistently labeled.
    pub fn new(segments: Vec<Segment>, width: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::invalid("segment width must be at least 1"));
        }
        let mut finished: HashSet<&str> = HashSet::new();
        let mut prev: Option<&Segment> = None;
        for s in &segments {
            if s.text.chars().count() > width {
                return Err(Error::invalid(format!(
                    "segment {}#{} is longer than the width {width}",
                    s.doc_id, s.index
                )));
            }
            match prev {
                Some(p) if p.doc_id == s.doc_id => {
                    if s.index <= p.index {
                        return Err(Error::invalid(format!("segments of {:?} are not index-ordered", s.doc_id)));
                    }
                    if s.department != p.department {
                        return Err(Error::invalid(format!("segments of {:?} carry different labels", s.doc_id)));
                    }
                }
                Some(p) => {
                    finished.insert(p.doc_id.as_str());
                    if finished.contains(s.doc_id.as_str()) {
                        return Err(Error::invalid(format!("segments of {:?} are not contiguous", s.doc_id)));
                    }
                }
                None => {}
            }
            prev = Some(s);
        }
        Ok(SegmentedCorpus { segments, width })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Contiguous `(doc_id, range)` groups in corpus order.
    pub fn documents(&self) -> Vec<(&str, std::ops::Range<usize>)> {
        let mut out: Vec<(&str, std::ops::Range<usize>)> = Vec::new();
        for (i, s) in self.segments.iter().enumerate() {
            match out.last_mut() {
                Some((id, r)) if *id == s.doc_id => r.end = i + 1,
                _ => out.push((s.doc_id.as_str(), i..i + 1)),
            }
        }
        out
    }

    pub fn class_counts(&self) -> BTreeMap<&str, usize> {
        let mut m = BTreeMap::new();
        for s in &self.segments {
            *m.entry(s.department.as_str()).or_default() += 1;
        }
        m
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_jsonl(path, &self.segments)
    }

    /// Reads a segments file. The width is taken from `width` when given,
    /// otherwise inferred as the longest segment.
    pub fn load(path: &Path, width: Option<usize>) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut segments = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
            if line.trim().is_empty() {
                continue;
            }
            let seg: Segment = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                path: path.to_path_buf(),
                line: n + 1,
                message: e.to_string(),
            })?;
            segments.push(seg);
        }
        let width = width.unwrap_or_else(|| segments.iter().map(Segment::char_len).max().unwrap_or(1).max(1));
        SegmentedCorpus::new(segments, width)
    }
}

/// Cuts `ts` into slices of exactly `width` characters; only the final slice
/// may be shorter. Word boundaries are ignored.
pub fn segment_text(ts: &TermString, width: usize) -> Result<Vec<String>> {
    if width == 0 {
        return Err(Error::invalid("segment width must be at least 1"));
    }
    if ts.is_empty() {
        return Err(Error::EmptyInput("cannot segment an empty term string".into()));
    }
    let chars: Vec<char> = ts.as_str().chars().collect();
    Ok(chars.chunks(width).map(|c| c.iter().collect()).collect())
}

/// Segments every document of a preprocessed corpus. Documents whose term
/// string is empty yield no segments and are skipped.
pub fn segment_corpus(corpus: &LabeledCorpus, width: usize) -> Result<SegmentedCorpus> {
    let mut segments = Vec::new();
    for d in corpus.documents() {
        let ts = TermString::new(d.text.clone()).map_err(Error::InvalidParameter)?;
        if ts.is_empty() {
            log::warn!("document {:?} is empty after preprocessing; skipped", d.id);
            continue;
        }
        for (index, text) in segment_text(&ts, width)?.into_iter().enumerate() {
            segments.push(Segment {
                doc_id: d.id.clone(),
                index,
                department: d.department.clone(),
                text,
            });
        }
    }
    SegmentedCorpus::new(segments, width)
}

/// Removes every class with fewer than `min_segments` segments.
pub fn filter_classes(sc: &SegmentedCorpus, min_segments: usize) -> Result<SegmentedCorpus> {
    let counts = sc.class_counts();
    let segments: Vec<Segment> = sc
        .segments
        .iter()
        .filter(|s| counts[s.department.as_str()] >= min_segments)
        .cloned()
        .collect();
    if segments.is_empty() {
        return Err(Error::EmptyInput(format!("no class has at least {min_segments} segments")));
    }
    Ok(SegmentedCorpus {
        segments,
        width: sc.width,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EliminationTargets {
    /// Exact per-class targets; classes not listed are left alone.
    PerClass(BTreeMap<String, usize>),
    /// Every class is reduced to at most this many segments, but never below
    /// its document count.
    Cap(usize),
}

impl EliminationTargets {
    /// Named profiles. `study` caps classes at the majority size implied by the
    /// reported synthetic-data share of the segment analysis.
    pub fn preset(name: &str) -> Option<EliminationTargets> {
        match name {
            "study" => Some(EliminationTargets::Cap(600)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalancePolicy {
    pub min_segments_per_class: usize,
    pub targets: Option<EliminationTargets>,
    pub seed: u64,
}

impl Default for BalancePolicy {
    fn default() -> Self {
        BalancePolicy {
            min_segments_per_class: 100,
            targets: None,
            seed: 0,
        }
    }
}

/// Randomly removes segments until each targeted class reaches its target.
/// One segment per document is reserved first, so no document disappears.
pub fn eliminate_segments(sc: &SegmentedCorpus, policy: &BalancePolicy) -> Result<SegmentedCorpus> {
    let Some(targets) = &policy.targets else {
        return Ok(sc.clone());
    };
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in sc.segments.iter().enumerate() {
        by_class.entry(s.department.as_str()).or_default().push(i);
    }
    let mut keep = vec![true; sc.segments.len()];
    for (class_no, (class, members)) in by_class.iter().enumerate() {
        let docs: Vec<&str> = {
            let mut seen = HashSet::new();
            members
                .iter()
                .map(|&i| sc.segments[i].doc_id.as_str())
                .filter(|d| seen.insert(*d))
                .collect()
        };
        let target = match targets {
            EliminationTargets::PerClass(m) => match m.get(*class) {
                Some(&t) => {
                    if t < docs.len() {
                        return Err(Error::Infeasible(format!(
                            "target {t} for class {class:?} is below its {} documents",
                            docs.len()
                        )));
                    }
                    t
                }
                None => continue,
            },
            EliminationTargets::Cap(cap) => (*cap).max(docs.len()),
        };
        if target >= members.len() {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(policy.seed ^ (class_no as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut per_doc: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for &i in members {
            per_doc.entry(sc.segments[i].doc_id.as_str()).or_default().push(i);
        }
        let mut protected = HashSet::new();
        let mut pool = Vec::new();
        for d in &docs {
            let segs = &per_doc[d];
            let pick = *segs.choose(&mut rng).expect("documents have segments");
            protected.insert(pick);
            pool.extend(segs.iter().copied().filter(|&i| i != pick));
        }
        pool.shuffle(&mut rng);
        let keep_extra = target - protected.len();
        for &i in &pool[keep_extra..] {
            keep[i] = false;
        }
    }
    let segments = sc
        .segments
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(s, _)| s.clone())
        .collect();
    Ok(SegmentedCorpus {
        segments,
        width: sc.width,
    })
}

/// Joins each document's surviving segments in index order with a single
/// blank at every joint.
pub fn concatenate(sc: &SegmentedCorpus) -> Result<LabeledCorpus> {
    let docs = sc
        .documents()
        .into_iter()
        .map(|(id, range)| {
            let segs = &sc.segments[range];
            Document {
                id: id.to_string(),
                department: segs[0].department.clone(),
                text: segs.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" "),
            }
        })
        .collect();
    LabeledCorpus::new_allow_empty(docs)
}

/// Blank-delimited terms of a text, ignoring empty pieces.
pub fn terms(text: &str) -> impl Iterator<Item = &str> {
    text.split(' ').filter(|t| !t.is_empty())
}
