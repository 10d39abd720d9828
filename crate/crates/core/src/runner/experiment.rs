// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::pipeline::{fit_pipeline, FittedPipeline, PipelineId, TrainingMatrix};
use super::presets::{load_preset, preset_name};
use super::{Base, ClassifierChoice};
use crate::aggregation::{aggregate, AggregationMethod, SegmentGroup};
use crate::classifiers::{predict_proba, train, ClassifierKind, ClassifierSpec};
use crate::corpus::{load_corpus, CorpusFormat};
use crate::error::{Error, Result};
use crate::evaluation::{build_folds, compute_metrics, read_folds, FoldAssignment, MetricsReport};
use crate::hyperopt::{bayes_search, space_for, spec_from_assignment, Assignment, SearchOptions, SearchResult};
use crate::linalg::Features;
use crate::segmentation::{
    concatenate, eliminate_segments, filter_classes, segment_corpus, BalancePolicy, SegmentedCorpus,
};
use crate::textprep::{preprocess_corpus, Resources};

pub const RECORD_FORMAT_VERSION: u32 = 1;

/// Key used for document-base metrics, which need no aggregation.
pub const NO_AGGREGATION: &str = "none";

#[derive(Clone, Debug)]
pub struct PreparedDoc {
    pub id: String,
    pub label: usize,
    pub segments: Range<usize>,
    /// Surviving segments joined with single blanks.
    pub text: String,
}

/// Segments, documents and folds shared by every cell run on one corpus.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub classes: Vec<String>,
    pub segments: SegmentedCorpus,
    pub segment_labels: Vec<usize>,
    pub docs: Vec<PreparedDoc>,
    pub folds: FoldAssignment,
}

impl PreparedData {
    /// Builds documents and folds from final segments.
    pub fn from_segments(segments: SegmentedCorpus, n_folds: usize, seed: u64) -> Result<Self> {
        let doc_segments = doc_segment_counts(&segments);
        let folds = build_folds(&doc_segments, n_folds, seed)?;
        Self::with_folds(segments, folds)
    }

    pub fn with_folds(segments: SegmentedCorpus, folds: FoldAssignment) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::EmptyInput("no segments".into()));
        }
        let counts = segments.class_counts();
        let classes: Vec<String> = counts.keys().map(|c| c.to_string()).collect();
        if classes.len() < 2 {
            return Err(Error::Infeasible("at least two classes are required".into()));
        }
        let label_of = |d: &str| classes.binary_search_by(|c| c.as_str().cmp(d)).expect("known class");
        let segment_labels = segments.segments().iter().map(|s| label_of(&s.department)).collect();
        let joined = concatenate(&segments)?;
        let mut docs = Vec::new();
        for (id, range) in segments.documents() {
            let text = joined.get(id).expect("concatenated document").text.clone();
            let label = label_of(&segments.segments()[range.start].department);
            if folds.fold_of(id).is_none() {
                return Err(Error::CorpusMismatch(format!("document {id:?} has no fold")));
            }
            docs.push(PreparedDoc {
                id: id.to_string(),
                label,
                segments: range,
                text,
            });
        }
        Ok(PreparedData {
            classes,
            segments,
            segment_labels,
            docs,
            folds,
        })
    }

    fn docs_in_fold(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.docs.len()).partition(|&d| self.folds.fold_of(&self.docs[d].id) != Some(fold))
    }

    fn rows(&self, base: Base, docs: &[usize]) -> Vec<usize> {
        match base {
            Base::Document => docs.to_vec(),
            Base::Segment => docs.iter().flat_map(|&d| self.docs[d].segments.clone()).collect(),
        }
    }

    fn texts(&self, base: Base, rows: &[usize]) -> Vec<&str> {
        rows.iter()
            .map(|&r| match base {
                Base::Document => self.docs[r].text.as_str(),
                Base::Segment => self.segments.segments()[r].text.as_str(),
            })
            .collect()
    }

    fn labels(&self, base: Base, rows: &[usize]) -> Vec<usize> {
        rows.iter()
            .map(|&r| match base {
                Base::Document => self.docs[r].label,
                Base::Segment => self.segment_labels[r],
            })
            .collect()
    }
}

fn doc_segment_counts(sc: &SegmentedCorpus) -> BTreeMap<String, usize> {
    sc.documents().into_iter().map(|(id, r)| (id.to_string(), r.len())).collect()
}

/// Loads (and if asked preprocesses, segments, filters and thins) the
/// configured corpus and assigns folds.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let segments = match (&cfg.segments, &cfg.corpus) {
        (Some(path), _) => SegmentedCorpus::load(path, Some(cfg.width))?,
        (None, Some(path)) => {
            let mut corpus = load_corpus(path, CorpusFormat::from_path(path))?;
            if cfg.preprocess {
                let res = match &cfg.resources {
                    Some(dir) => Resources::load_dir(dir)?,
                    None => Resources::bundled(),
                };
                corpus = preprocess_corpus(&corpus, &res)?;
            }
            let sc = filter_classes(&segment_corpus(&corpus, cfg.width)?, cfg.min_class_segments)?;
            let policy = BalancePolicy {
                min_segments_per_class: cfg.min_class_segments,
                targets: cfg.elimination_targets()?,
                seed: cfg.seed,
            };
            eliminate_segments(&sc, &policy)?
        }
        (None, None) => return Err(Error::Config("either corpus or segments must be given".into())),
    };
    match &cfg.folds_file {
        Some(path) => {
            let folds = read_folds(path, &doc_segment_counts(&segments))?;
            PreparedData::with_folds(segments, folds)
        }
        None => PreparedData::from_segments(segments, cfg.n_folds, cfg.seed),
    }
}

/// Features of one fold after fitting the pipeline on its training rows.
pub struct FoldData {
    pub fold: usize,
    pub fitted: FittedPipeline,
    pub training: TrainingMatrix,
    pub test: Features,
    pub test_docs: Vec<usize>,
    pub svd_dim: Option<usize>,
}

fn derive_seed(seed: u64, salt: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt.wrapping_mul(0xBF58_476D_1CE4_E5B9)) ^ salt
}

fn fold_data(prep: &PreparedData, cfg: &ExperimentConfig, fold: usize) -> Result<FoldData> {
    let (train_docs, test_docs) = prep.docs_in_fold(fold);
    if train_docs.is_empty() || test_docs.is_empty() {
        return Err(Error::Infeasible(format!("fold {fold} has no training or no test documents")));
    }
    let train_rows = prep.rows(cfg.base, &train_docs);
    let test_rows = prep.rows(cfg.base, &test_docs);
    let mut policy = cfg.oversample_policy();
    policy.seed = derive_seed(cfg.seed, 100 + fold as u64);
    let (fitted, training) = fit_pipeline(
        cfg.pipeline,
        &prep.texts(cfg.base, &train_rows),
        &prep.labels(cfg.base, &train_rows),
        cfg.svd_dim,
        &policy,
        derive_seed(cfg.seed, 200 + fold as u64),
    )?;
    let test = fitted.transform(&prep.texts(cfg.base, &test_rows))?;
    Ok(FoldData {
        fold,
        svd_dim: fitted.svd_dim(),
        fitted,
        training,
        test,
        test_docs,
    })
}

pub fn build_fold_data(prep: &PreparedData, cfg: &ExperimentConfig) -> Result<Vec<FoldData>> {
    (0..prep.folds.n_folds)
        .into_par_iter()
        .map(|f| fold_data(prep, cfg, f))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub train_rows: usize,
    pub synthetic_rows: usize,
    pub synthetic_share: f64,
    pub test_documents: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svd_dim: Option<usize>,
    pub metrics: BTreeMap<String, MetricsReport>,
}

/// Wall-clock durations; kept apart from the record so records stay
/// byte-identical across reruns.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_secs: f64,
    pub fold_secs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub format_version: u32,
    pub cell: String,
    pub base: Base,
    pub pipeline: PipelineId,
    pub classifier: ClassifierKind,
    pub config: ExperimentConfig,
    pub spec: ClassifierSpec,
    pub classes: Vec<String>,
    pub folds: Vec<FoldRecord>,
    /// Metrics over the test predictions of all folds, keyed by aggregation
    /// method (`none` for the document base).
    pub pooled: BTreeMap<String, MetricsReport>,
    #[serde(skip)]
    pub timings: Timings,
}

impl RunRecord {
    pub fn record_path(dir: &Path, cell: &str) -> PathBuf {
        dir.join(format!("{cell}.jsonl"))
    }

    /// Writes `<cell>.jsonl` and the `<cell>.timing.json` sidecar.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        let path = Self::record_path(dir, &self.cell);
        let mut line = serde_json::to_string(self)?;
        line.push('\n');
        std::fs::write(&path, line).map_err(|e| Error::io(path.display().to_string(), e))?;
        let tpath = dir.join(format!("{}.timing.json", self.cell));
        std::fs::write(&tpath, serde_json::to_string_pretty(&self.timings)?)
            .map_err(|e| Error::io(tpath.display().to_string(), e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<RunRecord> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let line = text
            .lines()
            .find(|l| !l.trim().is_empty())
            .ok_or_else(|| Error::EmptyInput(format!("{} holds no record", path.display())))?;
        let r: RunRecord = serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?;
        if r.format_version != RECORD_FORMAT_VERSION {
            return Err(Error::invalid(format!("unsupported record version {}", r.format_version)));
        }
        Ok(r)
    }

    /// All records (`*.jsonl`) of a directory, sorted by file name.
    pub fn read_dir(dir: &Path) -> Result<Vec<RunRecord>> {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir.display().to_string(), e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        paths.iter().map(|p| RunRecord::read(p)).collect()
    }

    pub fn accuracy(&self, method: &str) -> Option<f64> {
        self.pooled.get(method).map(|m| m.accuracy)
    }
}

/// Hard document predictions of one fold, keyed by aggregation method.
/// True and predicted labels per aggregation method.
type FoldPredictions = BTreeMap<String, (Vec<usize>, Vec<usize>)>;

/// Fold records, pooled metrics and per-fold seconds.
type Evaluation = (Vec<FoldRecord>, BTreeMap<String, MetricsReport>, Vec<f64>);

fn predict_fold(
    prep: &PreparedData,
    cfg: &ExperimentConfig,
    spec: &ClassifierSpec,
    fd: &FoldData,
) -> Result<FoldPredictions> {
    let model = train(
        spec,
        &fd.training.features,
        &fd.training.labels,
        derive_seed(cfg.seed, 300 + fd.fold as u64),
    )?;
    let probs = predict_proba(&model, &fd.test)?;
    let k = prep.classes.len();
    let truth: Vec<usize> = fd.test_docs.iter().map(|&d| prep.docs[d].label).collect();
    let mut out = BTreeMap::new();
    match cfg.base {
        Base::Document => {
            let pred = probs.predict();
            out.insert(NO_AGGREGATION.to_string(), (truth, pred));
        }
        Base::Segment => {
            let mut groups = Vec::with_capacity(fd.test_docs.len());
            let mut row = 0;
            for &d in &fd.test_docs {
                let doc = &prep.docs[d];
                let n = doc.segments.len();
                groups.push(SegmentGroup {
                    doc_id: doc.id.clone(),
                    probs: (row..row + n).map(|r| probs.expanded_row(r, k)).collect(),
                    weights: doc
                        .segments
                        .clone()
                        .map(|s| prep.segments.segments()[s].char_len() as f64)
                        .collect(),
                });
                row += n;
            }
            for &m in &cfg.aggregation {
                let pred = groups.iter().map(|g| aggregate(g, m)).collect::<Result<Vec<_>>>()?;
                out.insert(m.short_name().to_string(), (truth.clone(), pred));
            }
        }
    }
    Ok(out)
}

fn evaluate(
    prep: &PreparedData,
    cfg: &ExperimentConfig,
    spec: &ClassifierSpec,
    fold_data: &[FoldData],
) -> Result<Evaluation> {
    let per_fold: Vec<(FoldPredictions, f64)> = fold_data
        .par_iter()
        .map(|fd| {
            let start = Instant::now();
            predict_fold(prep, cfg, spec, fd).map(|p| (p, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;
    let mut pooled_pairs: BTreeMap<String, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    let mut folds = Vec::with_capacity(fold_data.len());
    let mut secs = Vec::with_capacity(fold_data.len());
    for (fd, (preds, s)) in fold_data.iter().zip(per_fold) {
        let mut metrics = BTreeMap::new();
        for (m, (t, p)) in preds {
            metrics.insert(m.clone(), compute_metrics(&t, &p, &prep.classes)?);
            let e = pooled_pairs.entry(m).or_default();
            e.0.extend(t);
            e.1.extend(p);
        }
        folds.push(FoldRecord {
            fold: fd.fold,
            train_rows: fd.training.original_rows + fd.training.synthetic_rows,
            synthetic_rows: fd.training.synthetic_rows,
            synthetic_share: fd.training.synthetic_share,
            test_documents: fd.test_docs.len(),
            svd_dim: fd.svd_dim,
            metrics,
        });
        secs.push(s);
    }
    let pooled = pooled_pairs
        .into_iter()
        .map(|(m, (t, p))| compute_metrics(&t, &p, &prep.classes).map(|r| (m, r)))
        .collect::<Result<_>>()?;
    Ok((folds, pooled, secs))
}

/// Runs one configuration on already prepared data.
pub fn run_prepared(prep: &PreparedData, cfg: &ExperimentConfig) -> Result<RunRecord> {
    let start = Instant::now();
    let cfg = cfg.resolved()?;
    let spec = cfg.classifier.resolve()?;
    let fold_data = build_fold_data(prep, &cfg)?;
    let (folds, pooled, fold_secs) = evaluate(prep, &cfg, &spec, &fold_data)?;
    Ok(RunRecord {
        format_version: RECORD_FORMAT_VERSION,
        cell: cfg.cell_name()?,
        base: cfg.base,
        pipeline: cfg.pipeline,
        classifier: spec.kind(),
        spec,
        classes: prep.classes.clone(),
        folds,
        pooled,
        config: cfg,
        timings: Timings {
            total_secs: start.elapsed().as_secs_f64(),
            fold_secs,
        },
    })
}

/// Loads, prepares and runs one configuration; writes the record when the
/// config names an output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let start = Instant::now();
    let cfg = cfg.resolved()?;
    let prep = prepare_data(&cfg)?;
    let mut record = run_prepared(&prep, &cfg)?;
    record.timings.total_secs = start.elapsed().as_secs_f64();
    if let Some(dir) = &cfg.output {
        record.write(dir)?;
    }
    Ok(record)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridCell {
    pub base: Base,
    pub pipeline: PipelineId,
    pub classifier: ClassifierKind,
}

impl GridCell {
    pub fn name(&self) -> String {
        preset_name(self.base, self.pipeline, self.classifier)
    }

    /// Full cross product of the given axes.
    pub fn product(bases: &[Base], pipelines: &[PipelineId], classifiers: &[ClassifierKind]) -> Vec<GridCell> {
        let mut cells = Vec::new();
        for &base in bases {
            for &pipeline in pipelines {
                for &classifier in classifiers {
                    cells.push(GridCell {
                        base,
                        pipeline,
                        classifier,
                    });
                }
            }
        }
        cells
    }

    /// Stable per-cell seed: depends on the master seed and the cell name
    /// only, never on the rest of the grid.
    pub fn seed(&self, master: u64) -> u64 {
        // FNV-1a over the cell name
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.name().bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        derive_seed(master, h)
    }

    /// Config of this cell derived from a template config.
    pub fn config(&self, template: &ExperimentConfig, use_presets: bool, master_seed: u64) -> Result<ExperimentConfig> {
        let mut c = template.clone();
        c.name = Some(self.name());
        c.base = self.base;
        c.pipeline = self.pipeline;
        c.classifier = if use_presets {
            ClassifierChoice::Spec(load_preset(&self.name())?)
        } else {
            ClassifierChoice::Spec(ClassifierSpec::default_for(self.classifier))
        };
        c.aggregation = match self.base {
            Base::Segment if template.aggregation.is_empty() => AggregationMethod::ALL.to_vec(),
            Base::Segment => template.aggregation.clone(),
            Base::Document => Vec::new(),
        };
        c.svd_dim = if self.pipeline.has_svd() { template.svd_dim } else { None };
        c.oversample = None;
        c.seed = self.seed(master_seed);
        c.resolved()
    }
}

/// Runs every cell on shared prepared data. Cells run in parallel; a failing
/// cell yields an error entry and the grid continues.
pub fn run_grid(
    prep: &PreparedData,
    template: &ExperimentConfig,
    cells: &[GridCell],
    use_presets: bool,
    master_seed: u64,
) -> Result<Vec<(GridCell, Result<RunRecord>)>> {
    if cells.is_empty() {
        return Err(Error::invalid("grid has no cells"));
    }
    Ok(cells
        .par_iter()
        .map(|cell| {
            let r = cell
                .config(template, use_presets, master_seed)
                .and_then(|cfg| run_prepared(prep, &cfg));
            if let Err(e) = &r {
                log::error!("cell {} failed: {e}", cell.name());
            }
            (*cell, r)
        })
        .collect())
}

/// Bayesian search for one cell; the objective is the best pooled accuracy
/// over the configured aggregation methods.
pub fn search_cell(prep: &PreparedData, cfg: &ExperimentConfig, opts: &SearchOptions) -> Result<SearchResult> {
    let cfg = cfg.resolved()?;
    let kind = cfg.classifier.resolve()?.kind();
    let fold_data = build_fold_data(prep, &cfg)?;
    let objective = |a: &Assignment| -> Result<f64> {
        let spec = spec_from_assignment(kind, a)?;
        let (_, pooled, _) = evaluate(prep, &cfg, &spec, &fold_data)?;
        Ok(pooled.values().map(|m| m.accuracy).fold(0.0, f64::max))
    };
    bayes_search(objective, &space_for(kind, cfg.base), opts)
}
