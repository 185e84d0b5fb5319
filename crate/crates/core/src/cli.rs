//! The `smer` command-line interface.
//!
//! Every subcommand writes its outputs atomically and records the fully
//! resolved configuration next to its main output as `<out>.run.json`.
//! CSV reports start with `#` comment lines naming the SHA-256 of the model
//! files they were computed from; JSON reports carry the same hashes as
//! fields.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::corpus::{self, Document, PipelineConfig};
use crate::embedding::{train_skipgram, EmbeddingModel, SkipgramConfig};
use crate::error::{Error, Result};
use crate::eval::{self, AopcCurve, SplitKind, SplitSpec};
use crate::io::{read_jsonl, sha256_file, sha256_hex, write_atomic, write_json, write_jsonl};
use crate::models::{
    self, BowPredictor, EmbeddingPredictor, FeatureSpace, LinearClassifier, Predictor, TrainConfig,
};
use crate::smer::{self, CorpusStats};
use crate::synth::{self, SynthConfig};
use crate::targets::{derive_labels, LabelSpec, LabeledDoc};
use crate::xai::{self, GaleMode, GlobalImportance, ImportanceMethod, LimeConfig, LocalExplanation};

#[derive(Debug, Parser)]
#[command(name = "smer", version, about = "Impact prediction with self-explaining word scores")]
pub struct Cli {
    /// Random seed for every stochastic step [default: 1]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads [default: 1]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// error, warn, info, debug or trace [default: warn]
    #[arg(long, global = true)]
    pub log_level: Option<String>,
    /// TOML or JSON file with global settings and the pipeline section
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean and tokenize a raw JSON-lines corpus
    Preprocess(PreprocessArgs),
    /// Attach high/low impact labels
    Label(LabelArgs),
    /// Train skip-gram word embeddings
    TrainEmbeddings(TrainEmbeddingsArgs),
    /// Fit a logistic-regression classifier
    TrainClf(TrainClfArgs),
    /// Per-token SMER scores for documents, with the fidelity check
    Explain(ExplainArgs),
    /// Rank words by SMER score
    RankWords(RankWordsArgs),
    /// CScore table of words in a publication window
    Cscore(CscoreArgs),
    /// SCORE-ordered cosine neighbors of a seed word
    Neighbors(NeighborsArgs),
    /// LIME-style local explanations
    Lime(LimeArgs),
    /// Global word-importance ranking
    GlobalImportance(GlobalImportanceArgs),
    /// Train and evaluate under a split protocol
    Evaluate(EvaluateArgs),
    /// AOPC-global curve for a ranking
    Aopc(AopcArgs),
    /// Run preprocess, label, embeddings, classifier, ranking and AOPC end to end
    Pipeline(PipelineArgs),
    /// Generate the planted synthetic corpus
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    W2v,
    Bow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitArg {
    Random,
    Time,
    Semi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum MethodArg {
    #[value(name = "smer")]
    Smer,
    #[value(name = "global_lime")]
    GlobalLime,
    #[value(name = "global_avg_lime")]
    GlobalAvgLime,
    #[value(name = "random")]
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum MetricArg {
    #[value(name = "auc")]
    Auc,
    #[value(name = "extreme10-auc")]
    Extreme10Auc,
}

#[derive(Debug, Args, Serialize)]
pub struct PreprocessArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub min_raw_chars: usize,
    #[arg(long, default_value_t = 20)]
    pub min_clean_chars: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct LabelArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Publication years, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub pub_years: Vec<i32>,
    #[arg(long)]
    pub cit_year: i32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainEmbeddingsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    pub lr: f64,
    #[arg(long, default_value_t = 1)]
    pub min_count: u64,
    /// Use --threads workers with lock-free updates (not reproducible)
    #[arg(long)]
    pub parallel: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainClfArgs {
    /// Labeled JSON-lines documents
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "w2v")]
    pub features: FeatureKind,
    /// Word vectors (required for w2v features)
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub l2: f64,
    #[arg(long, default_value_t = 10000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    /// Classifier JSON
    #[arg(long)]
    pub model: PathBuf,
    /// Word vectors the classifier was trained on
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub docs: PathBuf,
    /// Only explain these documents
    #[arg(long)]
    pub doi: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct RankWordsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Restrict to words listed one per line
    #[arg(long)]
    pub words: Option<PathBuf>,
    /// Keep only the first N rows
    #[arg(long)]
    pub top: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CscoreArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub docs: PathBuf,
    /// First publication year of the window
    #[arg(long)]
    pub from: i32,
    /// Last publication year of the window
    #[arg(long)]
    pub to: i32,
    /// Keep words first seen strictly after this year
    #[arg(long)]
    pub first_seen_after: Option<i32>,
    #[arg(long, default_value_t = 100)]
    pub top: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct NeighborsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Documents for NumArt and first-year columns
    #[arg(long)]
    pub docs: PathBuf,
    #[arg(long)]
    pub word: String,
    #[arg(long, default_value_t = 0.70)]
    pub threshold: f64,
    #[arg(long, default_value_t = 15)]
    pub k: usize,
    #[arg(long)]
    pub from: Option<i32>,
    #[arg(long)]
    pub to: Option<i32>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct LimeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub docs: PathBuf,
    #[arg(long, default_value_t = 15)]
    pub n_features: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_samples: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalImportanceArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Classifier JSON (smer)
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Word vectors (smer; vocabulary for random)
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Local explanations from `lime` (global_lime, global_avg_lime)
    #[arg(long)]
    pub lime: Option<PathBuf>,
    /// Documents whose vocabulary the random baseline ranks
    #[arg(long)]
    pub docs: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub docs: PathBuf,
    #[arg(long, value_enum, default_value = "random")]
    pub split: SplitArg,
    #[arg(long, value_delimiter = ',', required = true)]
    pub train_years: Vec<i32>,
    #[arg(long, value_delimiter = ',')]
    pub test_years: Vec<i32>,
    #[arg(long)]
    pub train_cit_year: i32,
    #[arg(long)]
    pub test_cit_year: Option<i32>,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, value_enum, default_value = "w2v")]
    pub features: FeatureKind,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub l2: f64,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "auc,extreme10-auc")]
    pub metric: Vec<MetricArg>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AopcArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Test documents
    #[arg(long)]
    pub docs: PathBuf,
    /// Ranking CSV with `word` and `score` columns
    #[arg(long)]
    pub ranking: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Curve CSV (k, mean_drop)
    #[arg(long)]
    pub out: PathBuf,
    /// Summary JSON with the areas
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PipelineArgs {
    /// Raw corpus; overrides the config file
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Output directory; overrides the config file
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 800)]
    pub docs_per_year: usize,
    #[arg(long, value_delimiter = ',', default_value = "2018,2019,2020,2021")]
    pub years: Vec<i32>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the planted word effects as CSV
    #[arg(long)]
    pub effects: Option<PathBuf>,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub log_level: Option<String>,
    pub pipeline: Option<PipelineSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSettings {
    /// Raw JSON-lines corpus, relative to the config file.
    pub input: Option<PathBuf>,
    /// Output directory, relative to the config file.
    pub out_dir: PathBuf,
    pub min_raw_chars: usize,
    pub min_clean_chars: usize,
    /// Publication years of the labeled cohort.
    pub label_years: Vec<i32>,
    pub cit_year: i32,
    pub train_fraction: f64,
    pub embedding: SkipgramConfig,
    pub classifier: TrainConfig,
    pub aopc_k: usize,
    /// Test documents explained with LIME for the GALE rankings; 0 skips
    /// the LIME comparison.
    pub lime_docs: usize,
    pub lime_samples: usize,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings {
            input: None,
            out_dir: PathBuf::from("out"),
            min_raw_chars: 10,
            min_clean_chars: 20,
            label_years: Vec::new(),
            cit_year: 0,
            train_fraction: 0.8,
            embedding: SkipgramConfig::default(),
            classifier: TrainConfig::default(),
            aopc_k: 10,
            lime_docs: 0,
            lime_samples: 1000,
        }
    }
}

pub fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    } else {
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e
                .span()
                .map_or(0, |s| text[..s.start].matches('\n').count() + 1),
            message: e.message().to_string(),
        })
    }
}

/// Settings shared by all subcommands after merging flags and config file.
#[derive(Debug, Clone, Serialize)]
pub struct Globals {
    pub seed: u64,
    pub threads: usize,
    pub log_level: String,
}

#[derive(Serialize)]
struct RunRecord<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    globals: &'a Globals,
    args: &'a T,
    inputs: BTreeMap<String, String>,
}

fn run_record_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".run.json");
    out.with_file_name(name)
}

/// Hashes of the given input files, keyed by path.
fn input_hashes(paths: &[Option<&Path>]) -> Result<BTreeMap<String, String>> {
    paths
        .iter()
        .flatten()
        .map(|p| Ok((p.display().to_string(), sha256_file(p)?)))
        .collect()
}

fn record_run<T: Serialize>(
    out: &Path,
    command: &'static str,
    globals: &Globals,
    args: &T,
    inputs: &[Option<&Path>],
) -> Result<()> {
    write_json(
        &run_record_path(out),
        &RunRecord {
            tool: "smer",
            version: env!("CARGO_PKG_VERSION"),
            command,
            globals,
            args,
            inputs: input_hashes(inputs)?,
        },
    )
}

/// CSV report with provenance comment lines.
fn csv_report(provenance: &[(&str, String)], header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for (k, v) in provenance {
        out.extend_from_slice(format!("# {k}={v}\n").as_bytes());
    }
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::InvalidInput(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))
}

fn with_provenance(provenance: &[(&str, String)], body: Vec<u8>) -> Vec<u8> {
    let mut out = Vec::new();
    for (k, v) in provenance {
        out.extend_from_slice(format!("# {k}={v}\n").as_bytes());
    }
    out.extend(body);
    out
}

struct LoadedModel {
    classifier: LinearClassifier,
    embeddings: Option<EmbeddingModel>,
    provenance: Vec<(&'static str, String)>,
}

impl LoadedModel {
    fn load(args: &ModelArgs) -> Result<Self> {
        let classifier = LinearClassifier::load(&args.model)?;
        let mut provenance = vec![("model_sha256", sha256_file(&args.model)?)];
        let embeddings = match (&classifier.feature_space, &args.embeddings) {
            (FeatureSpace::Embedding { embedding_sha256, .. }, Some(path)) => {
                let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
                let sha = sha256_hex(&bytes);
                if let Some(expected) = embedding_sha256 {
                    if *expected != sha {
                        return Err(Error::InvalidInput(format!(
                            "{}: embeddings do not match the classifier (sha256 {sha}, expected {expected})",
                            path.display()
                        )));
                    }
                }
                let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
                    path: path.clone(),
                    line: 0,
                    message: e.to_string(),
                })?;
                provenance.push(("embeddings_sha256", sha));
                Some(EmbeddingModel::from_text(&text, path)?)
            }
            (FeatureSpace::Embedding { .. }, None) => {
                return Err(Error::Usage(
                    "--embeddings is required for an embedding classifier".into(),
                ))
            }
            (FeatureSpace::Bow { .. }, _) => None,
        };
        Ok(LoadedModel {
            classifier,
            embeddings,
            provenance,
        })
    }

    fn embedding(&self) -> Result<&EmbeddingModel> {
        self.embeddings
            .as_ref()
            .ok_or_else(|| Error::Usage("this command needs an embedding classifier".into()))
    }

    fn predictor(&self) -> Result<Box<dyn Predictor + '_>> {
        Ok(match &self.embeddings {
            Some(m) => Box::new(EmbeddingPredictor::new(&self.classifier, m)?),
            None => Box::new(BowPredictor::new(&self.classifier)?),
        })
    }
}

fn read_docs(path: &Path) -> Result<Vec<Document>> {
    read_jsonl(path)
}

fn fmt_f(x: f64) -> String {
    format!("{x}")
}

fn cmd_preprocess(a: &PreprocessArgs) -> Result<()> {
    let raw = corpus::ingest(&a.input)?;
    let cfg = PipelineConfig {
        min_raw_chars: a.min_raw_chars,
        min_clean_chars: a.min_clean_chars,
        ..PipelineConfig::default()
    };
    let (docs, rejected) = preprocess_all(&raw, &cfg);
    info!("kept {} documents, rejected {}", docs.len(), rejected.values().sum::<usize>());
    write_jsonl(&a.out, &docs)
}

fn preprocess_all(
    raw: &[corpus::RawRecord],
    cfg: &PipelineConfig,
) -> (Vec<Document>, BTreeMap<String, usize>) {
    let mut docs = Vec::new();
    let mut rejected: BTreeMap<String, usize> = BTreeMap::new();
    for r in raw {
        match corpus::preprocess(r, cfg) {
            Ok(d) => docs.push(d),
            Err(reason) => {
                warn!("{}: rejected ({reason})", r.doi);
                *rejected.entry(reason.to_string()).or_default() += 1;
            }
        }
    }
    (docs, rejected)
}

fn cmd_label(a: &LabelArgs) -> Result<()> {
    let docs = read_docs(&a.input)?;
    let labeled = derive_labels(&docs, &LabelSpec::new(a.pub_years.iter().copied(), a.cit_year))?;
    let high = labeled.iter().filter(|l| l.y == 1).count();
    info!("{} documents labeled, {high} high", labeled.len());
    write_jsonl(&a.out, &labeled)
}

fn cmd_train_embeddings(a: &TrainEmbeddingsArgs, g: &Globals) -> Result<()> {
    let docs = read_docs(&a.input)?;
    let cfg = SkipgramConfig {
        dim: a.dim,
        window: a.window,
        negatives: a.negatives,
        epochs: a.epochs,
        learning_rate: a.lr,
        min_count: a.min_count,
        seed: g.seed,
        workers: if a.parallel { g.threads.max(1) } else { 1 },
    };
    if !a.parallel && g.threads > 1 {
        info!("embedding training stays single-threaded without --parallel");
    }
    let model = train_skipgram(&docs, &cfg)?;
    model.save(&a.out)
}

fn load_embeddings_with_hash(path: &Path) -> Result<(EmbeddingModel, String)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let sha = sha256_hex(&bytes);
    let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    Ok((EmbeddingModel::from_text(&text, path)?, sha))
}

fn train_classifier(
    train: &[LabeledDoc],
    features: FeatureKind,
    embeddings: Option<&Path>,
    cfg: &TrainConfig,
) -> Result<(models::Fit, Option<(EmbeddingModel, String)>)> {
    match features {
        FeatureKind::W2v => {
            let path = embeddings
                .ok_or_else(|| Error::Usage("--embeddings is required for w2v features".into()))?;
            let (model, sha) = load_embeddings_with_hash(path)?;
            let fit = models::fit_embedding_classifier(&model, train, cfg, Some(sha.clone()))?;
            Ok((fit, Some((model, sha))))
        }
        FeatureKind::Bow => Ok((models::fit_bow_classifier(train, cfg)?, None)),
    }
}

fn train_config(l2: f64, max_iters: usize, tol: f64, seed: u64) -> Result<TrainConfig> {
    if !(l2 >= 0.0) || !(tol > 0.0) {
        return Err(Error::Usage("--l2 must be >= 0 and --tol > 0".into()));
    }
    Ok(TrainConfig {
        l2_lambda: l2,
        max_iters,
        tol,
        seed,
    })
}

fn cmd_train_clf(a: &TrainClfArgs, g: &Globals) -> Result<()> {
    let docs: Vec<LabeledDoc> = read_jsonl(&a.input)?;
    let cfg = train_config(a.l2, a.max_iters, a.tol, g.seed)?;
    let (fit, _) = train_classifier(&docs, a.features, a.embeddings.as_deref(), &cfg)?;
    if !fit.report.converged {
        warn!(
            "optimizer stopped after {} iterations with gradient norm {:e}",
            fit.report.iterations, fit.report.final_grad_norm
        );
    }
    fit.classifier.save(&a.out)
}

fn cmd_explain(a: &ExplainArgs) -> Result<()> {
    let m = LoadedModel::load(&a.model)?;
    let model = m.embedding()?;
    let wanted: BTreeSet<&str> = a.doi.iter().map(String::as_str).collect();
    let docs = read_docs(&a.docs)?;
    let mut out = Vec::new();
    for d in docs.iter().filter(|d| wanted.is_empty() || wanted.contains(d.doi.as_str())) {
        out.push(smer::explain_document(&m.classifier, model, d)?);
    }
    if out.is_empty() && !wanted.is_empty() {
        return Err(Error::InvalidInput("none of the requested documents were found".into()));
    }
    write_atomic(&a.out, &with_provenance(&m.provenance, crate::io::to_jsonl(&out)?))
}

fn word_score_rows(rows: &[smer::WordScore]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|w| vec![w.word.clone(), fmt_f(w.logit), fmt_f(w.score())])
        .collect()
}

fn cmd_rank_words(a: &RankWordsArgs) -> Result<()> {
    let m = LoadedModel::load(&a.model)?;
    let words: Option<Vec<String>> = match &a.words {
        Some(p) => Some(
            std::fs::read_to_string(p)
                .map_err(|e| Error::io(p, e))?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect(),
        ),
        None => None,
    };
    let mut ranked = smer::rank_words(&m.classifier, m.embedding()?, words.as_deref())?;
    if let Some(top) = a.top {
        ranked.truncate(top);
    }
    let bytes = csv_report(&m.provenance, &["word", "logit", "score"], &word_score_rows(&ranked))?;
    write_atomic(&a.out, &bytes)
}

fn cmd_cscore(a: &CscoreArgs) -> Result<()> {
    let m = LoadedModel::load(&a.model)?;
    let docs = read_docs(&a.docs)?;
    let mut rows = smer::cscore_table(&m.classifier, m.embedding()?, &docs, a.from..=a.to, a.first_seen_after)?;
    rows.truncate(a.top);
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|w| {
            vec![
                w.word.clone(),
                fmt_f(w.score()),
                w.num_art.to_string(),
                fmt_f(w.cscore()),
                w.cscore_rounded().to_string(),
                w.first_year.map(|y| y.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    let bytes = csv_report(
        &m.provenance,
        &["word", "score", "num_art", "cscore", "cscore_rounded", "first_year"],
        &table,
    )?;
    write_atomic(&a.out, &bytes)
}

fn cmd_neighbors(a: &NeighborsArgs) -> Result<()> {
    let m = LoadedModel::load(&a.model)?;
    let docs = read_docs(&a.docs)?;
    let window = match (a.from, a.to) {
        (Some(f), Some(t)) => Some(f..=t),
        (None, None) => None,
        _ => return Err(Error::Usage("--from and --to go together".into())),
    };
    let stats = CorpusStats::new(&docs, window);
    let rows = smer::neighbor_report(&m.classifier, m.embedding()?, &stats, &a.word, a.threshold, a.k)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.word.word.clone(),
                fmt_f(r.cosine),
                fmt_f(r.word.score()),
                r.word.num_art.to_string(),
                r.word.first_year.map(|y| y.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    let bytes = csv_report(
        &m.provenance,
        &["word", "cosine", "score", "num_art", "first_year"],
        &table,
    )?;
    write_atomic(&a.out, &bytes)
}

fn cmd_lime(a: &LimeArgs, g: &Globals) -> Result<()> {
    let m = LoadedModel::load(&a.model)?;
    let docs = read_docs(&a.docs)?;
    let cfg = LimeConfig {
        n_features: a.n_features,
        n_samples: a.n_samples,
        seed: g.seed,
        ..LimeConfig::default()
    };
    let predictor = m.predictor()?;
    let expls = xai::lime_explain_all(predictor.as_ref(), &docs, &cfg)?;
    write_atomic(&a.out, &with_provenance(&m.provenance, crate::io::to_jsonl(&expls)?))
}

/// Reads JSON lines, skipping `#` provenance lines.
fn read_jsonl_commented<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

fn cmd_global_importance(a: &GlobalImportanceArgs, g: &Globals) -> Result<()> {
    let mut provenance: Vec<(&str, String)> = Vec::new();
    let importance = match a.method {
        MethodArg::Smer => {
            let model = a
                .model
                .clone()
                .ok_or_else(|| Error::Usage("--model is required for smer".into()))?;
            let m = LoadedModel::load(&ModelArgs {
                model,
                embeddings: a.embeddings.clone(),
            })?;
            provenance = m.provenance.clone();
            xai::smer_global(&m.classifier, m.embedding()?, None)?
        }
        MethodArg::GlobalLime | MethodArg::GlobalAvgLime => {
            let path = a
                .lime
                .as_ref()
                .ok_or_else(|| Error::Usage("--lime is required for LIME aggregations".into()))?;
            provenance.push(("lime_sha256", sha256_file(path)?));
            let expls: Vec<LocalExplanation> = read_jsonl_commented(path)?;
            let mode = if a.method == MethodArg::GlobalLime {
                GaleMode::SumImportance
            } else {
                GaleMode::AverageImportance
            };
            xai::gale_global(&expls, mode)?
        }
        MethodArg::Random => {
            let vocab: Vec<String> = match (&a.docs, &a.embeddings) {
                (Some(d), _) => {
                    let docs = read_docs(d)?;
                    let set: BTreeSet<&str> = docs.iter().flat_map(|d| d.tokens.iter().map(String::as_str)).collect();
                    set.into_iter().map(str::to_string).collect()
                }
                (None, Some(e)) => {
                    provenance.push(("embeddings_sha256", sha256_file(e)?));
                    EmbeddingModel::load(e)?.words().to_vec()
                }
                (None, None) => {
                    return Err(Error::Usage("random needs --docs or --embeddings for its vocabulary".into()))
                }
            };
            xai::random_importance(&vocab, g.seed)?
        }
    };
    write_atomic(&a.out, &with_provenance(&provenance, importance.to_csv()?))
}

#[derive(Debug, Serialize)]
struct EvaluateSummary {
    split: SplitSpec,
    features: FeatureKind,
    n_train: usize,
    n_test: usize,
    train_converged: bool,
    metrics: BTreeMap<String, f64>,
    embeddings_sha256: Option<String>,
}

fn cmd_evaluate(a: &EvaluateArgs, g: &Globals) -> Result<()> {
    let docs = read_docs(&a.docs)?;
    let kind = match a.split {
        SplitArg::Random => SplitKind::Random,
        SplitArg::Time => SplitKind::Time,
        SplitArg::Semi => SplitKind::Semi,
    };
    let test_cit_year = a.test_cit_year.unwrap_or(a.train_cit_year);
    let spec = SplitSpec {
        kind,
        train_fraction: a.train_fraction,
        train_years: a.train_years.iter().copied().collect(),
        test_years: a.test_years.iter().copied().collect(),
        train_cit_year: a.train_cit_year,
        test_cit_year,
        seed: g.seed,
    };
    let s = eval::split(&docs, &spec)?;
    let cfg = train_config(a.l2, 10000, 1e-8, g.seed)?;
    let (fit, emb) = train_classifier(&s.train, a.features, a.embeddings.as_deref(), &cfg)?;
    let predictor: Box<dyn Predictor> = match &emb {
        Some((m, _)) => Box::new(EmbeddingPredictor::new(&fit.classifier, m)?),
        None => Box::new(BowPredictor::new(&fit.classifier)?),
    };
    let scores = s
        .test
        .iter()
        .map(|l| predictor.predict_doc(&l.doc))
        .collect::<Result<Vec<f64>>>()?;
    let labels: Vec<u8> = s.test.iter().map(|l| l.y).collect();
    let eval_cit_year = if kind == SplitKind::Random { a.train_cit_year } else { test_cit_year };
    let mut metrics = BTreeMap::new();
    for metric in &a.metric {
        match metric {
            MetricArg::Auc => {
                metrics.insert("auc".to_string(), eval::auc(&scores, &labels)?);
            }
            MetricArg::Extreme10Auc => {
                let idx = eval::extreme10(&s.test, eval_cit_year)?;
                let sc: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
                let lb: Vec<u8> = idx.iter().map(|&i| labels[i]).collect();
                metrics.insert("extreme10_auc".to_string(), eval::auc(&sc, &lb)?);
            }
        }
    }
    write_json(
        &a.out,
        &EvaluateSummary {
            split: spec,
            features: a.features,
            n_train: s.train.len(),
            n_test: s.test.len(),
            train_converged: fit.report.converged,
            metrics,
            embeddings_sha256: emb.as_ref().map(|(_, sha)| sha.clone()),
        },
    )
}

#[derive(Debug, Serialize)]
struct AopcSummary {
    ranking_sha256: String,
    model_sha256: String,
    embeddings_sha256: Option<String>,
    k: usize,
    n_docs: usize,
    area: f64,
    area_raw: f64,
}

fn curve_csv(provenance: &[(&str, String)], curve: &AopcCurve) -> Result<Vec<u8>> {
    Ok(with_provenance(provenance, curve.to_csv()?))
}

fn cmd_aopc(a: &AopcArgs) -> Result<()> {
    let m = LoadedModel::load(&a.model)?;
    let docs = read_docs(&a.docs)?;
    let bytes = std::fs::read(&a.ranking).map_err(|e| Error::io(&a.ranking, e))?;
    let ranking = GlobalImportance::from_csv(&bytes, &a.ranking, ImportanceMethod::External)?;
    let predictor = m.predictor()?;
    let curve = eval::aopc_global(predictor.as_ref(), &docs, &ranking, a.k)?;
    let mut provenance = m.provenance.clone();
    provenance.push(("ranking_sha256", sha256_hex(&bytes)));
    write_atomic(&a.out, &curve_csv(&provenance, &curve)?)?;
    if let Some(path) = &a.summary {
        let lookup = |key: &str| provenance.iter().find(|(k, _)| *k == key).map(|(_, v)| v.clone());
        write_json(
            path,
            &AopcSummary {
                ranking_sha256: sha256_hex(&bytes),
                model_sha256: lookup("model_sha256").unwrap_or_default(),
                embeddings_sha256: lookup("embeddings_sha256"),
                k: a.k,
                n_docs: docs.len(),
                area: curve.area,
                area_raw: curve.area_raw,
            },
        )?;
    }
    Ok(())
}

fn cmd_synth(a: &SynthArgs, g: &Globals) -> Result<()> {
    let cfg = SynthConfig {
        docs_per_year: a.docs_per_year,
        years: a.years.clone(),
        seed: g.seed,
        ..SynthConfig::default()
    };
    let corpus = synth::generate(&cfg)?;
    write_atomic(&a.out, &corpus.to_jsonl()?)?;
    if let Some(path) = &a.effects {
        let rows: Vec<Vec<String>> = corpus
            .effects
            .iter()
            .map(|(w, e)| vec![w.clone(), fmt_f(*e)])
            .collect();
        write_atomic(path, &csv_report(&[], &["word", "score"], &rows)?)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct PipelineSummary {
    pub n_raw: usize,
    pub n_docs: usize,
    pub rejected: BTreeMap<String, usize>,
    pub n_train: usize,
    pub n_test: usize,
    pub train_converged: bool,
    pub test_auc: f64,
    pub extreme10_auc: Option<f64>,
    pub fidelity_checked: usize,
    pub max_fidelity_gap: f64,
    pub aopc_area: BTreeMap<String, f64>,
    pub hashes: BTreeMap<String, String>,
}

/// Runs the whole chain into `out_dir` and returns the summary it wrote.
pub fn run_pipeline(input: &Path, out_dir: &Path, p: &PipelineSettings, g: &Globals) -> Result<PipelineSummary> {
    if p.label_years.is_empty() {
        return Err(Error::Usage("pipeline.label_years must list at least one year".into()));
    }
    let raw = corpus::ingest(input)?;
    let cfg = PipelineConfig {
        min_raw_chars: p.min_raw_chars,
        min_clean_chars: p.min_clean_chars,
        ..PipelineConfig::default()
    };
    let (docs, rejected) = preprocess_all(&raw, &cfg);
    let docs_path = out_dir.join("docs.jsonl");
    write_jsonl(&docs_path, &docs)?;
    info!("preprocessed {} of {} records", docs.len(), raw.len());

    let spec = SplitSpec {
        train_fraction: p.train_fraction,
        ..SplitSpec::random(p.label_years.iter().copied(), p.cit_year, g.seed)
    };
    let s = eval::split(&docs, &spec)?;
    write_jsonl(&out_dir.join("train.jsonl"), &s.train)?;
    write_jsonl(&out_dir.join("test.jsonl"), &s.test)?;

    let emb_cfg = SkipgramConfig {
        seed: g.seed,
        ..p.embedding.clone()
    };
    let model = train_skipgram(&docs, &emb_cfg)?;
    let emb_path = out_dir.join("embeddings.vec");
    model.save(&emb_path)?;
    let emb_sha = sha256_file(&emb_path)?;
    // reload so every later step sees exactly the persisted vectors
    let model = EmbeddingModel::load(&emb_path)?;

    let fit = models::fit_embedding_classifier(&model, &s.train, &p.classifier, Some(emb_sha.clone()))?;
    let clf_path = out_dir.join("classifier.json");
    fit.classifier.save(&clf_path)?;
    let clf = LinearClassifier::load(&clf_path)?;
    let clf_sha = sha256_file(&clf_path)?;
    let provenance = vec![("model_sha256", clf_sha.clone()), ("embeddings_sha256", emb_sha.clone())];

    let ranked = smer::rank_words(&clf, &model, None)?;
    write_atomic(
        &out_dir.join("ranking.csv"),
        &csv_report(&provenance, &["word", "logit", "score"], &word_score_rows(&ranked))?,
    )?;

    let test_docs: Vec<Document> = s.test.iter().map(|l| l.doc.clone()).collect();
    let mut explanations = Vec::with_capacity(test_docs.len());
    let mut max_gap: f64 = 0.0;
    for d in &test_docs {
        let e = smer::explain_document(&clf, &model, d)?;
        let mean = e.tokens.iter().map(|t| t.logit).sum::<f64>() / e.tokens.len() as f64;
        max_gap = max_gap.max((e.doc_logit - mean).abs() / (1.0 + e.doc_logit.abs()));
        explanations.push(e);
    }
    write_atomic(
        &out_dir.join("explanations.jsonl"),
        &with_provenance(&provenance, crate::io::to_jsonl(&explanations)?),
    )?;

    let predictor = EmbeddingPredictor::new(&clf, &model)?;
    let scores = test_docs
        .iter()
        .map(|d| predictor.predict_doc(d))
        .collect::<Result<Vec<f64>>>()?;
    let labels: Vec<u8> = s.test.iter().map(|l| l.y).collect();
    let test_auc = eval::auc(&scores, &labels)?;
    let extreme10_auc = match eval::extreme10(&s.test, p.cit_year) {
        Ok(idx) => {
            let sc: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
            let lb: Vec<u8> = idx.iter().map(|&i| labels[i]).collect();
            eval::auc(&sc, &lb).ok()
        }
        Err(_) => None,
    };

    let mut rankings = vec![
        ("smer".to_string(), xai::smer_global(&clf, &model, None)?),
        ("random".to_string(), xai::random_importance(model.words(), g.seed)?),
    ];
    if p.lime_docs > 0 {
        let lime_cfg = LimeConfig {
            n_samples: p.lime_samples,
            seed: g.seed,
            ..LimeConfig::default()
        };
        let subset = &test_docs[..p.lime_docs.min(test_docs.len())];
        let expls = xai::lime_explain_all(&predictor, subset, &lime_cfg)?;
        write_atomic(
            &out_dir.join("lime.jsonl"),
            &with_provenance(&provenance, crate::io::to_jsonl(&expls)?),
        )?;
        rankings.push(("global_lime".into(), xai::gale_global(&expls, GaleMode::SumImportance)?));
        rankings.push(("global_avg_lime".into(), xai::gale_global(&expls, GaleMode::AverageImportance)?));
    }
    let mut aopc_area = BTreeMap::new();
    for (name, ranking) in &rankings {
        if name != "smer" {
            write_atomic(
                &out_dir.join(format!("importance_{name}.csv")),
                &with_provenance(&provenance, ranking.to_csv()?),
            )?;
        }
        let curve = eval::aopc_global(&predictor, &test_docs, ranking, p.aopc_k)?;
        write_atomic(&out_dir.join(format!("aopc_{name}.csv")), &curve_csv(&provenance, &curve)?)?;
        aopc_area.insert(name.clone(), curve.area);
    }

    let mut hashes = BTreeMap::new();
    hashes.insert("input".to_string(), sha256_file(input)?);
    hashes.insert("embeddings".to_string(), emb_sha);
    hashes.insert("classifier".to_string(), clf_sha);
    let summary = PipelineSummary {
        n_raw: raw.len(),
        n_docs: docs.len(),
        rejected,
        n_train: s.train.len(),
        n_test: s.test.len(),
        train_converged: fit.report.converged,
        test_auc,
        extreme10_auc,
        fidelity_checked: explanations.len(),
        max_fidelity_gap: max_gap,
        aopc_area,
        hashes,
    };
    write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

fn resolve_relative(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

fn cmd_pipeline(a: &PipelineArgs, file: &ConfigFile, config_path: Option<&Path>, g: &Globals) -> Result<()> {
    let settings = file
        .pipeline
        .clone()
        .ok_or_else(|| Error::Usage("pipeline needs --config with a [pipeline] section".into()))?;
    let base = config_path.and_then(Path::parent);
    let input = match (&a.input, &settings.input) {
        (Some(i), _) => i.clone(),
        (None, Some(i)) => resolve_relative(base, i),
        (None, None) => return Err(Error::Usage("pipeline needs an input corpus (--in or pipeline.input)".into())),
    };
    let out_dir = match &a.out {
        Some(o) => o.clone(),
        None => resolve_relative(base, &settings.out_dir),
    };
    let summary = run_pipeline(&input, &out_dir, &settings, g)?;
    #[derive(Serialize)]
    struct Resolved<'a> {
        input: &'a Path,
        out_dir: &'a Path,
        pipeline: &'a PipelineSettings,
    }
    write_json(
        &out_dir.join("run.json"),
        &RunRecord {
            tool: "smer",
            version: env!("CARGO_PKG_VERSION"),
            command: "pipeline",
            globals: g,
            args: &Resolved {
                input: &input,
                out_dir: &out_dir,
                pipeline: &settings,
            },
            inputs: input_hashes(&[Some(&input)])?,
        },
    )?;
    println!(
        "pipeline: {} docs, test AUC {:.4}, fidelity max gap {:e}",
        summary.n_docs, summary.test_auc, summary.max_fidelity_gap
    );
    Ok(())
}

fn init_logging(level: &str) -> Result<()> {
    let filter: log::LevelFilter = level
        .parse()
        .map_err(|_| Error::Usage(format!("unknown log level {level:?}")))?;
    // a second initialization in the same process (tests) is harmless
    let _ = env_logger::Builder::new()
        .filter_level(filter)
        .format_timestamp(None)
        .try_init();
    log::set_max_level(filter);
    Ok(())
}

fn dispatch(cli: &Cli, file: &ConfigFile, g: &Globals) -> Result<()> {
    let config = cli.config.as_deref();
    match &cli.command {
        Command::Preprocess(a) => {
            cmd_preprocess(a)?;
            record_run(&a.out, "preprocess", g, a, &[Some(&a.input)])
        }
        Command::Label(a) => {
            cmd_label(a)?;
            record_run(&a.out, "label", g, a, &[Some(&a.input)])
        }
        Command::TrainEmbeddings(a) => {
            cmd_train_embeddings(a, g)?;
            record_run(&a.out, "train-embeddings", g, a, &[Some(&a.input)])
        }
        Command::TrainClf(a) => {
            cmd_train_clf(a, g)?;
            record_run(&a.out, "train-clf", g, a, &[Some(&a.input), a.embeddings.as_deref()])
        }
        Command::Explain(a) => {
            cmd_explain(a)?;
            record_run(&a.out, "explain", g, a, &[Some(&a.model.model), a.model.embeddings.as_deref(), Some(&a.docs)])
        }
        Command::RankWords(a) => {
            cmd_rank_words(a)?;
            record_run(&a.out, "rank-words", g, a, &[Some(&a.model.model), a.model.embeddings.as_deref(), a.words.as_deref()])
        }
        Command::Cscore(a) => {
            cmd_cscore(a)?;
            record_run(&a.out, "cscore", g, a, &[Some(&a.model.model), a.model.embeddings.as_deref(), Some(&a.docs)])
        }
        Command::Neighbors(a) => {
            cmd_neighbors(a)?;
            record_run(&a.out, "neighbors", g, a, &[Some(&a.model.model), a.model.embeddings.as_deref(), Some(&a.docs)])
        }
        Command::Lime(a) => {
            cmd_lime(a, g)?;
            record_run(&a.out, "lime", g, a, &[Some(&a.model.model), a.model.embeddings.as_deref(), Some(&a.docs)])
        }
        Command::GlobalImportance(a) => {
            cmd_global_importance(a, g)?;
            record_run(
                &a.out,
                "global-importance",
                g,
                a,
                &[a.model.as_deref(), a.embeddings.as_deref(), a.lime.as_deref(), a.docs.as_deref()],
            )
        }
        Command::Evaluate(a) => {
            cmd_evaluate(a, g)?;
            record_run(&a.out, "evaluate", g, a, &[Some(&a.docs), a.embeddings.as_deref()])
        }
        Command::Aopc(a) => {
            cmd_aopc(a)?;
            record_run(
                &a.out,
                "aopc",
                g,
                a,
                &[Some(&a.model.model), a.model.embeddings.as_deref(), Some(&a.docs), Some(&a.ranking)],
            )
        }
        Command::Pipeline(a) => cmd_pipeline(a, file, config, g),
        Command::Synth(a) => {
            cmd_synth(a, g)?;
            record_run(&a.out, "synth", g, a, &[])
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code: 0 success, 1 usage, 2 data, 3 numeric failure.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => load_config(p)?,
        None => ConfigFile::default(),
    };
    let g = Globals {
        seed: cli.seed.or(file.seed).unwrap_or(1),
        threads: cli.threads.or(file.threads).unwrap_or(1),
        log_level: cli
            .log_level
            .clone()
            .or_else(|| file.log_level.clone())
            .unwrap_or_else(|| "warn".into()),
    };
    if g.threads == 0 {
        return Err(Error::Usage("--threads must be at least 1".into()));
    }
    init_logging(&g.log_level)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(g.threads)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {} threads: {e}", g.threads)))?;
    pool.install(|| dispatch(cli, &file, &g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run(["smer", "preprocess", "--bogus"]), 1);
        assert_eq!(run(["smer"]), 1);
        assert_eq!(run(["smer", "--help"]), 0);
    }

    #[test]
    fn missing_input_is_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("o.jsonl");
        let code = run([
            "smer".into(),
            "preprocess".into(),
            "--in".into(),
            dir.path().join("nope.jsonl").into_os_string(),
            "--out".into(),
            out.into_os_string(),
        ]);
        assert_eq!(code, 2);
    }

    #[test]
    fn config_file_formats() {
        let dir = tempfile::tempdir().unwrap();
        let t = dir.path().join("c.toml");
        std::fs::write(&t, "seed = 4\n[pipeline]\nlabel_years = [2020]\ncit_year = 2021\n[pipeline.embedding]\ndim = 8\n").unwrap();
        let c = load_config(&t).unwrap();
        assert_eq!(c.seed, Some(4));
        let p = c.pipeline.unwrap();
        assert_eq!(p.embedding.dim, 8);
        assert_eq!(p.embedding.window, 10);
        let j = dir.path().join("c.json");
        std::fs::write(&j, r#"{"threads": 2}"#).unwrap();
        assert_eq!(load_config(&j).unwrap().threads, Some(2));
        std::fs::write(&t, "sede = 4\n").unwrap();
        assert!(matches!(load_config(&t), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn run_record_sits_next_to_output() {
        assert_eq!(run_record_path(Path::new("a/b.csv")), Path::new("a/b.csv.run.json"));
    }
}
