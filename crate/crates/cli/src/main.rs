// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use docroute::classifiers::{ClassifierKind, ClassifierSpec};
use docroute::corpus::{class_distribution, generate_synthetic, load_corpus, write_corpus, CorpusFormat, SyntheticSpec};
use docroute::evaluation::build_folds;
use docroute::hyperopt::{spec_from_assignment, SearchOptions};
use docroute::runner::{
    emit_report, init_worker_pool, prepare_data, run_experiment, run_grid, search_cell, Base, ClassifierChoice,
    ExperimentConfig, GridCell, PipelineId, ReportFormat, RunRecord,
};
use docroute::segmentation::{eliminate_segments, filter_classes, segment_corpus, BalancePolicy, SegmentedCorpus};
use docroute::textprep::{preprocess_corpus, Resources};

#[derive(Parser)]
#[command(name = "docroute", version, about = "Department routing of documents: segment vs. document base")]
struct Cli {
    /// Worker threads (DOCROUTE_WORKERS takes precedence).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic corpora and class statistics.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Clean, lemmatize and filter raw documents into term strings.
    Prep {
        #[arg(long = "in")]
        input: PathBuf,
        /// Directory with lemma.tsv, stopwords.txt, places.txt, firstnames.txt.
        #[arg(long)]
        resources: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cut preprocessed documents into segments and thin large classes.
    Segment {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 2048)]
        width: usize,
        #[arg(long, default_value_t = 100)]
        min_class_segments: usize,
        /// Elimination preset (e.g. `study`) or JSON file of per-class targets.
        #[arg(long)]
        eliminate: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assign whole documents of a segment file to folds.
    Folds {
        #[arg(long)]
        segments: PathBuf,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Record directory; overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a grid of cells sharing the data settings of a template config.
    Grid(GridArgs),
    /// Bayesian hyperparameter search for one cell.
    Search(SearchArgs),
    /// Render run records as a results table.
    Report {
        /// Directory of `*.jsonl` records.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: String,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Generate a synthetic corpus from a TOML or JSON spec.
    Gen {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-class document (and segment) counts as JSON.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        segments: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GridArgs {
    /// Template config providing corpus and data settings.
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated pipelines (1-4); all when absent.
    #[arg(long, value_delimiter = ',')]
    pipelines: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    classifiers: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    bases: Vec<String>,
    /// Use bundled presets instead of default hyperparameters.
    #[arg(long)]
    presets: bool,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    pipeline: String,
    #[arg(long)]
    classifier: String,
    #[arg(long)]
    base: String,
    #[arg(long, default_value_t = 50)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Template config providing corpus and data settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preprocessed corpus, when no config is given.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    min_class_segments: Option<usize>,
    #[arg(long, default_value_t = 1)]
    batch_size: usize,
    /// Append-only trial log.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Result file (JSON); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_list<T>(items: &[String], all: &[T]) -> Result<Vec<T>>
where
    T: std::str::FromStr<Err = docroute::Error> + Clone,
{
    if items.is_empty() {
        return Ok(all.to_vec());
    }
    items.iter().map(|s| s.parse::<T>().map_err(Into::into)).collect()
}

fn write_json(path: Option<&Path>, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => to_stdout(&(text + "\n")),
    }
}

/// Writes to stdout; a reader that went away early (`| head`) is not an error.
fn to_stdout(text: &str) -> Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn corpus_gen(spec: Option<&Path>, out: &Path) -> Result<()> {
    let spec: SyntheticSpec = match spec {
        None => SyntheticSpec::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            if p.extension().is_some_and(|e| e == "json") {
                serde_json::from_str(&text)?
            } else {
                toml::from_str(&text)?
            }
        }
    };
    let corpus = generate_synthetic(&spec)?;
    write_corpus(&corpus, out)?;
    log::info!("wrote {} documents to {}", corpus.len(), out.display());
    Ok(())
}

fn segment(
    input: &Path,
    width: usize,
    min_class_segments: usize,
    eliminate: Option<String>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let corpus = load_corpus(input, CorpusFormat::from_path(input))?;
    let filtered = filter_classes(&segment_corpus(&corpus, width)?, min_class_segments)?;
    let mut cfg = ExperimentConfig::new(
        Base::Segment,
        PipelineId::P4,
        ClassifierChoice::Spec(ClassifierSpec::default_for(ClassifierKind::LogisticRegression)),
    );
    cfg.eliminate = eliminate;
    let policy = BalancePolicy {
        min_segments_per_class: min_class_segments,
        targets: cfg.elimination_targets()?,
        seed,
    };
    let sc = eliminate_segments(&filtered, &policy)?;
    sc.write(out)?;
    log::info!("wrote {} segments to {}", sc.len(), out.display());
    Ok(())
}

fn folds(segments: &Path, n_folds: usize, seed: u64, out: &Path) -> Result<()> {
    let sc = SegmentedCorpus::load(segments, None)?;
    let per_doc = sc.documents().into_iter().map(|(id, r)| (id.to_string(), r.len())).collect();
    let f = build_folds(&per_doc, n_folds, seed)?;
    f.write(out)?;
    log::info!("fold segment totals {:?}, spread {}", f.segment_totals, f.spread());
    Ok(())
}

fn run(config: &Path, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if out.is_some() {
        cfg.output = out;
    }
    if cfg.output.is_none() {
        bail!("no output directory: set `output` in the config or pass --out");
    }
    let record = run_experiment(&cfg)?;
    let lines: String = record
        .pooled
        .iter()
        .map(|(method, m)| format!("{} {method}: accuracy {:.4} f1 {:.4}\n", record.cell, m.accuracy, m.f1))
        .collect();
    to_stdout(&lines)
}

fn grid(a: &GridArgs) -> Result<()> {
    let template = ExperimentConfig::load(&a.config)?;
    let cells = GridCell::product(
        &parse_list(&a.bases, &Base::ALL)?,
        &parse_list(&a.pipelines, &PipelineId::ALL)?,
        &parse_list(&a.classifiers, &ClassifierKind::ALL)?,
    );
    let prep = prepare_data(&template.resolved()?)?;
    let mut failed = 0;
    for (cell, r) in run_grid(&prep, &template, &cells, a.presets, a.master_seed)? {
        match r {
            Ok(record) => {
                record.write(&a.out)?;
            }
            Err(e) => {
                failed += 1;
                eprintln!("{}: {e}", cell.name());
            }
        }
    }
    if failed > 0 {
        bail!("{failed} of {} cells failed", cells.len());
    }
    Ok(())
}

fn search(a: &SearchArgs) -> Result<()> {
    let base: Base = a.base.parse()?;
    let pipeline: PipelineId = a.pipeline.parse()?;
    let kind: ClassifierKind = a.classifier.parse()?;
    let choice = ClassifierChoice::Spec(ClassifierSpec::default_for(kind));
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::new(base, pipeline, choice.clone()),
    };
    cfg.base = base;
    cfg.pipeline = pipeline;
    cfg.classifier = choice;
    cfg.name = None;
    if base == Base::Document {
        cfg.aggregation.clear();
    }
    if !pipeline.has_svd() {
        cfg.svd_dim = None;
    }
    if let Some(c) = &a.corpus {
        cfg.corpus = Some(c.clone());
    }
    if let Some(m) = a.min_class_segments {
        cfg.min_class_segments = m;
    }
    let cfg = cfg.resolved()?;
    let prep = prepare_data(&cfg)?;
    let mut opts = SearchOptions::new(a.budget, a.seed);
    opts.batch_size = a.batch_size;
    opts.log_path = a.log.clone();
    let result = search_cell(&prep, &cfg, &opts)?;
    let spec = spec_from_assignment(kind, &result.best.assignment)?;
    let out = serde_json::json!({
        "cell": cfg.cell_name()?,
        "best_value": result.best.value,
        "best_trial": result.best.index,
        "spec": spec,
        "trials": result.history.len(),
    });
    write_json(a.out.as_deref(), &out)
}

fn report(input: &Path, format: &str, out: Option<&Path>) -> Result<()> {
    let format: ReportFormat = format.parse()?;
    let records = RunRecord::read_dir(input)?;
    let text = emit_report(&records, format)?;
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => to_stdout(&text),
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    init_worker_pool(cli.workers)?;
    match cli.command {
        Command::Corpus(CorpusCommand::Gen { spec, out }) => corpus_gen(spec.as_deref(), &out),
        Command::Corpus(CorpusCommand::Stats { input, segments }) => {
            let corpus = load_corpus(&input, CorpusFormat::from_path(&input))?;
            let sc = segments.map(|p| SegmentedCorpus::load(&p, None)).transpose()?;
            write_json(None, &class_distribution(&corpus, sc.as_ref())?)
        }
        Command::Prep { input, resources, out } => {
            let res = match resources {
                Some(dir) => Resources::load_dir(&dir)?,
                None => Resources::bundled(),
            };
            let corpus = load_corpus(&input, CorpusFormat::from_path(&input))?;
            let prepped = preprocess_corpus(&corpus, &res)?;
            write_corpus(&prepped, &out)?;
            Ok(())
        }
        Command::Segment {
            input,
            width,
            min_class_segments,
            eliminate,
            seed,
            out,
        } => segment(&input, width, min_class_segments, eliminate, seed, &out),
        Command::Folds {
            segments,
            folds: n,
            seed,
            out,
        } => folds(&segments, n, seed, &out),
        Command::Run { config, out } => run(&config, out),
        Command::Grid(a) => grid(&a),
        Command::Search(a) => search(&a),
        Command::Report { input, format, out } => report(&input, &format, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
