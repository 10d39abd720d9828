// SPDX-License-Identifier: MIT OR Apache-2.0

//! Labeled documents, corpus files, a seeded synthetic corpus generator and
//! per-class distribution summaries.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmentation::SegmentedCorpus;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub department: String,
    pub text: String,
}

/// Validated collection of documents, ordered by id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledCorpus {
    documents: Vec<Document>,
    classes: Vec<String>,
}

impl LabeledCorpus {
    /// Validates and sorts `documents`. Rejects duplicate ids, empty
    /// departments and empty texts.
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        for d in &documents {
            if d.department.is_empty() {
                return Err(Error::EmptyDepartment(d.id.clone()));
            }
            if d.text.is_empty() {
                return Err(Error::EmptyText(d.id.clone()));
            }
        }
        Self::build(documents)
    }

    /// Like [`LabeledCorpus::new`] but admits empty texts. Preprocessing can
    /// legitimately reduce a document to nothing; segmentation drops those.
    pub fn new_allow_empty(documents: Vec<Document>) -> Result<Self> {
        for d in &documents {
            if d.department.is_empty() {
                return Err(Error::EmptyDepartment(d.id.clone()));
            }
        }
        Self::build(documents)
    }

    fn build(mut documents: Vec<Document>) -> Result<Self> {
        documents.sort_by(|a, b| a.id.cmp(&b.id));
        for w in documents.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::DuplicateId(w[0].id.clone()));
            }
        }
        let classes: BTreeSet<String> = documents.iter().map(|d| d.department.clone()).collect();
        Ok(LabeledCorpus {
            documents,
            classes: classes.into_iter().collect(),
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents
            .binary_search_by(|d| d.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.documents[i])
    }

    pub fn into_documents(self) -> Vec<Document> {
        self.documents
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    pub fn from_path(path: &Path) -> CorpusFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<LabeledCorpus> {
    let docs = match format {
        CorpusFormat::Jsonl => read_jsonl_documents(path)?,
        CorpusFormat::Csv => read_csv_documents(path)?,
    };
    LabeledCorpus::new(docs)
}

fn read_jsonl_documents(path: &Path) -> Result<Vec<Document>> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut docs = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: n + 1,
            message: e.to_string(),
        })?;
        docs.push(doc);
    }
    Ok(docs)
}

fn read_csv_documents(path: &Path) -> Result<Vec<Document>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::MalformedRecord {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    let mut docs = Vec::new();
    for rec in reader.deserialize::<Document>() {
        let doc = rec.map_err(|e| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        docs.push(doc);
    }
    Ok(docs)
}

/// Writes the canonical jsonl form: one `{id, department, text}` object per line.
pub fn write_corpus(corpus: &LabeledCorpus, path: &Path) -> Result<()> {
    write_jsonl(path, corpus.documents())
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

/// Parameters of the synthetic stand-in corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub keywords_per_class: usize,
    pub filler_vocabulary: usize,
    /// Mean of the underlying normal of the lognormal token-count distribution.
    pub length_mu: f64,
    pub length_sigma: f64,
    pub docs_per_class: usize,
    pub injection_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            classes: 8,
            keywords_per_class: 40,
            filler_vocabulary: 400,
            length_mu: 5.5,
            length_sigma: 1.0,
            docs_per_class: 40,
            injection_rate: 0.3,
            seed: 7,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("classes", self.classes),
            ("keywords_per_class", self.keywords_per_class),
            ("filler_vocabulary", self.filler_vocabulary),
            ("docs_per_class", self.docs_per_class),
        ] {
            if v < 1 {
                return Err(Error::invalid(format!("{name} must be at least 1")));
            }
        }
        if !(0.0..=1.0).contains(&self.injection_rate) {
            return Err(Error::invalid("injection_rate must lie in [0, 1]"));
        }
        if !self.length_mu.is_finite() || !(self.length_sigma.is_finite() && self.length_sigma >= 0.0) {
            return Err(Error::invalid("lognormal length parameters must be finite, sigma >= 0"));
        }
        Ok(())
    }

    pub fn department(&self, class: usize) -> String {
        format!("dept-{class:02}")
    }
}

/// Word pools used by the generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntheticVocabulary {
    pub keywords: Vec<Vec<String>>,
    pub filler: Vec<String>,
}

const ONSETS: &[&str] = &[
    "b", "br", "d", "dr", "f", "fl", "g", "gr", "h", "k", "kl", "l", "m", "n", "p", "pf", "r", "s", "st", "t",
    "tr", "w", "z",
];
const VOWELS: &[&str] = &["a", "o", "u", "i", "au", "ä", "ö", "ü"];
const CODAS: &[&str] = &["b", "f", "g", "k", "l", "m", "p", "r", "ch", "ck", "ld", "lk", "rf", "rg", "rk"];

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.random_range(2..=3);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS[rng.random_range(0..ONSETS.len())]);
        w.push_str(VOWELS[rng.random_range(0..VOWELS.len())]);
    }
    w.push_str(CODAS[rng.random_range(0..CODAS.len())]);
    w
}

/// Deterministic keyword and filler pools for `spec`. Pools are pairwise
/// disjoint and every word survives the preprocessing filters.
pub fn synthetic_vocabulary(spec: &SyntheticSpec) -> Result<SyntheticVocabulary> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x05ee_d0f7_0c4b);
    let mut seen = HashSet::new();
    let mut draw = |rng: &mut ChaCha8Rng| loop {
        let w = pseudo_word(rng);
        let distinct: HashSet<char> = w.chars().collect();
        if distinct.len() >= 3 && seen.insert(w.clone()) {
            return w;
        }
    };
    let keywords = (0..spec.classes)
        .map(|_| (0..spec.keywords_per_class).map(|_| draw(&mut rng)).collect())
        .collect();
    let filler = (0..spec.filler_vocabulary).map(|_| draw(&mut rng)).collect();
    Ok(SyntheticVocabulary { keywords, filler })
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<LabeledCorpus> {
    let vocab = synthetic_vocabulary(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let lengths = LogNormal::new(spec.length_mu, spec.length_sigma)
        .map_err(|e| Error::invalid(format!("lognormal: {e}")))?;
    let mut docs = Vec::with_capacity(spec.classes * spec.docs_per_class);
    for class in 0..spec.classes {
        let pool = &vocab.keywords[class];
        for j in 0..spec.docs_per_class {
            let n_tokens = (lengths.sample(&mut rng).round() as usize).max(1);
            let mut text = String::new();
            for t in 0..n_tokens {
                let word = if rng.random_bool(spec.injection_rate) {
                    &pool[rng.random_range(0..pool.len())]
                } else {
                    &vocab.filler[rng.random_range(0..vocab.filler.len())]
                };
                if t > 0 {
                    text.push(' ');
                }
                if rng.random_bool(0.2) {
                    let mut cs = word.chars();
                    if let Some(first) = cs.next() {
                        text.extend(first.to_uppercase());
                        text.push_str(cs.as_str());
                    }
                } else {
                    text.push_str(word);
                }
                match rng.random_range(0..40) {
                    0..=2 => text.push(','),
                    3..=4 => text.push('.'),
                    5 => {
                        let n: u32 = rng.random_range(1..3000);
                        text.push_str(&format!(" {n}"));
                    }
                    _ => {}
                }
            }
            docs.push(Document {
                id: format!("doc-{class:02}-{j:04}"),
                department: spec.department(class),
                text,
            });
        }
    }
    LabeledCorpus::new(docs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountStats {
    pub total: usize,
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    /// Corrected sample standard deviation (n − 1 denominator).
    pub std_dev: f64,
}

impl CountStats {
    pub fn from_counts(counts: &[usize]) -> CountStats {
        let n = counts.len();
        let total: usize = counts.iter().sum();
        let mean = if n == 0 { 0.0 } else { total as f64 / n as f64 };
        let var = if n < 2 {
            0.0
        } else {
            counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        };
        CountStats {
            total,
            min: counts.iter().copied().min().unwrap_or(0),
            max: counts.iter().copied().max().unwrap_or(0),
            mean,
            std_dev: var.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassCount {
    pub department: String,
    pub documents: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segments: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub classes: Vec<ClassCount>,
    pub documents: CountStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segments: Option<CountStats>,
}

pub fn class_distribution(corpus: &LabeledCorpus, segments: Option<&SegmentedCorpus>) -> Result<ClassSummary> {
    let mut docs: BTreeMap<&str, usize> = BTreeMap::new();
    for d in corpus.documents() {
        *docs.entry(d.department.as_str()).or_default() += 1;
    }
    let seg_counts = match segments {
        None => None,
        Some(sc) => {
            let mut per_class: BTreeMap<&str, usize> = docs.keys().map(|&k| (k, 0)).collect();
            for s in sc.segments() {
                let doc = corpus
                    .get(&s.doc_id)
                    .ok_or_else(|| Error::CorpusMismatch(format!("unknown document {:?}", s.doc_id)))?;
                if doc.department != s.department {
                    return Err(Error::CorpusMismatch(format!(
                        "segment of {:?} labeled {:?}, document labeled {:?}",
                        s.doc_id, s.department, doc.department
                    )));
                }
                *per_class.get_mut(doc.department.as_str()).expect("class known") += 1;
            }
            Some(per_class)
        }
    };
    let classes: Vec<ClassCount> = docs
        .iter()
        .map(|(&dep, &n)| ClassCount {
            department: dep.to_string(),
            documents: n,
            segments: seg_counts.as_ref().map(|m| m[dep]),
        })
        .collect();
    let doc_counts: Vec<usize> = classes.iter().map(|c| c.documents).collect();
    let segments = seg_counts.map(|m| CountStats::from_counts(&m.values().copied().collect::<Vec<_>>()));
    Ok(ClassSummary {
        classes,
        documents: CountStats::from_counts(&doc_counts),
        segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, dep: &str, text: &str) -> Document {
        Document {
            id: id.into(),
            department: dep.into(),
            text: text.into(),
        }
    }

    #[test]
    fn loads_jsonl_and_rejects_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        std::fs::write(
            &p,
            "{\"id\":\"c\",\"department\":\"x\",\"text\":\"drei\"}\n{\"id\":\"a\",\"department\":\"y\",\"text\":\"eins\"}\n{\"id\":\"b\",\"department\":\"x\",\"text\":\"zwei\"}\n",
        )
        .unwrap();
        let c = load_corpus(&p, CorpusFormat::Jsonl).unwrap();
        let ids: Vec<_> = c.documents().iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(c.classes(), ["x", "y"]);

        std::fs::write(
            &p,
            "{\"id\":\"a\",\"department\":\"x\",\"text\":\"t\"}\n{\"id\":\"a\",\"department\":\"y\",\"text\":\"u\"}\n",
        )
        .unwrap();
        let err = load_corpus(&p, CorpusFormat::Jsonl).unwrap_err();
        assert!(matches!(err, Error::DuplicateId(ref id) if id == "a"), "{err}");
        assert!(err.to_string().contains("\"a\""));
    }

    #[test]
    fn malformed_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        std::fs::write(&p, "{\"id\":\"a\",\"department\":\"x\",\"text\":\"t\"}\n{\"id\":\"b\"}\n").unwrap();
        match load_corpus(&p, CorpusFormat::Jsonl) {
            Err(Error::MalformedRecord { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_text_rejected() {
        let err = LabeledCorpus::new(vec![doc("a", "x", "")]).unwrap_err();
        assert!(matches!(err, Error::EmptyText(_)));
    }

    #[test]
    fn csv_ingestion_handles_quoted_commas_and_newlines() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        std::fs::write(&p, "id,department,text\na,x,\"Hallo, Welt\nzweite Zeile\"\nb,y,kurz\n").unwrap();
        let c = load_corpus(&p, CorpusFormat::Csv).unwrap();
        assert_eq!(c.documents()[0].text, "Hallo, Welt\nzweite Zeile");
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn distribution_arithmetic() {
        let mut docs = Vec::new();
        for i in 0..3 {
            docs.push(doc(&format!("a{i}"), "A", "t"));
        }
        for i in 0..5 {
            docs.push(doc(&format!("b{i}"), "B", "t"));
        }
        let c = LabeledCorpus::new(docs).unwrap();
        let s = class_distribution(&c, None).unwrap();
        assert_eq!(s.classes.iter().map(|c| c.documents).collect::<Vec<_>>(), [3, 5]);
        assert_eq!(s.documents.min, 3);
        assert_eq!(s.documents.mean, 4.0);
        assert!(s.segments.is_none());
        assert!(s.classes.iter().all(|c| c.segments.is_none()));
    }

    #[test]
    fn synthetic_is_deterministic_and_validated() {
        let spec = SyntheticSpec {
            docs_per_class: 5,
            ..Default::default()
        };
        assert_eq!(generate_synthetic(&spec).unwrap(), generate_synthetic(&spec).unwrap());
        let bad = SyntheticSpec {
            injection_rate: 1.5,
            ..Default::default()
        };
        assert!(generate_synthetic(&bad).is_err());
        let bad = SyntheticSpec {
            classes: 0,
            ..Default::default()
        };
        assert!(generate_synthetic(&bad).is_err());
    }
}
