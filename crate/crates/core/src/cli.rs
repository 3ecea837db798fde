//! `mindref build | recall | evaluate | sweep`.
//!
//! Every command is also exposed as a plain function so the same code paths
//! can be driven from tests and examples without spawning a process.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigOverrides, MindRefConfig};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::eval::{self, ContextMetric, EvalItem, EvalReport, Prediction};
use crate::pipeline::Pipeline;
use crate::scorer::{NGramScorer, RemoteScorer, TokenScorer};
use crate::store::{Artifacts, BuildSummary};
use crate::token::Codec;

pub const ENDPOINT_ENV: &str = "MINDREF_SCORER_ENDPOINT";
const HEADER_KIND: &str = "mindref-recall";

#[derive(Debug, Parser)]
#[command(
    name = "mindref",
    version,
    about = "Generative passage recall over a title trie and per-document FM-indexes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest a JSONL corpus and write corpus, trie, indexes and manifest.
    Build(BuildArgs),
    /// Recall passages for a batch of queries.
    Recall(RecallArgs),
    /// Score recall output against gold provenance and answers.
    Evaluate(EvaluateArgs),
    /// Re-run recall + evaluation across values of one hyperparameter.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub index_dir: PathBuf,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML file with any subset of the recall settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub beam1: Option<usize>,
    #[arg(long)]
    pub beam2: Option<usize>,
    #[arg(long)]
    pub prefix_len: Option<usize>,
    #[arg(long)]
    pub passage_len: Option<usize>,
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub rescore_full_passage: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub normalize_pruning: Option<bool>,
}

impl ConfigArgs {
    /// Built-in defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<MindRefConfig> {
        let mut config = MindRefConfig::default();
        if let Some(path) = &self.config {
            config = config.apply(&ConfigOverrides::load(path)?)?;
        }
        config.apply(&ConfigOverrides {
            alpha: self.alpha,
            k: self.k,
            beam1: self.beam1,
            beam2: self.beam2,
            prefix_len: self.prefix_len,
            passage_len: self.passage_len,
            task: self.task.clone(),
            title_template: None,
            passage_template: None,
            rescore_full_passage: self.rescore_full_passage,
            normalize_pruning: self.normalize_pruning,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    #[default]
    Ngram,
    Remote,
}

#[derive(Debug, Clone, Args)]
pub struct ScorerArgs {
    #[arg(long, value_enum, default_value_t = ScorerKind::Ngram)]
    pub scorer: ScorerKind,
    /// Remote scorer URL; also read from MINDREF_SCORER_ENDPOINT.
    #[arg(long, env = ENDPOINT_ENV)]
    pub endpoint: Option<String>,
    #[arg(long, default_value_t = 30_000)]
    pub timeout_ms: u64,
    #[arg(long, default_value_t = 2)]
    pub retries: usize,
}

impl Default for ScorerArgs {
    fn default() -> Self {
        Self {
            scorer: ScorerKind::Ngram,
            endpoint: None,
            timeout_ms: 30_000,
            retries: 2,
        }
    }
}

impl ScorerArgs {
    pub fn build(&self, corpus: &Corpus) -> Result<Box<dyn TokenScorer>> {
        match self.scorer {
            ScorerKind::Ngram => Ok(Box::new(NGramScorer::for_corpus(corpus))),
            ScorerKind::Remote => {
                let endpoint = self.endpoint.clone().ok_or_else(|| {
                    Error::Config(format!(
                        "--scorer remote needs --endpoint or {ENDPOINT_ENV}"
                    ))
                })?;
                Ok(Box::new(RemoteScorer::with_limits(
                    endpoint,
                    corpus.codec().vocab_hash(),
                    Duration::from_millis(self.timeout_ms),
                    self.retries,
                )))
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct RecallArgs {
    #[arg(long)]
    pub index_dir: PathBuf,
    /// One query per line: raw text or a JSON object with `query` and optional `id`.
    #[arg(long)]
    pub queries: PathBuf,
    /// Defaults to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub scorer: ScorerArgs,
    #[arg(long, default_value_t = 1)]
    pub parallelism: usize,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub recall_output: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_enum, default_value_t = MetricArg::Answer)]
    pub metric: MetricArg,
    /// Print only the JSON report.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Answer,
    Entity,
}

impl From<MetricArg> for ContextMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Answer => ContextMetric::Answer,
            MetricArg::Entity => ContextMetric::Entity,
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub index_dir: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    /// alpha | prefix_len | k | beam1 | beam2
    #[arg(long)]
    pub axis: String,
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub values: Vec<String>,
    #[arg(long, value_enum, default_value_t = MetricArg::Answer)]
    pub metric: MetricArg,
    /// Defaults to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub scorer: ScorerArgs,
    #[arg(long, default_value_t = 1)]
    pub parallelism: usize,
}

// ---------------------------------------------------------------------------
// records

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub id: String,
    pub query: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub doc_id: String,
    pub title: String,
    /// Token offset into the document body.
    pub start: usize,
    pub passage_text: String,
    pub score1: f64,
    pub score2: f64,
    pub combined: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallRecord {
    pub id: String,
    pub query: String,
    pub references: Vec<ReferenceRecord>,
}

impl RecallRecord {
    pub fn prediction(&self) -> Prediction {
        Prediction {
            doc_ids: self.references.iter().map(|r| r.doc_id.clone()).collect(),
            top_passage: self.references.first().map(|r| r.passage_text.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub kind: String,
    pub version: String,
    pub config: MindRefConfig,
    pub scorer: ScorerKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    pub documents: usize,
    pub vocab_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldRecord {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(flatten)]
    pub item: EvalItem,
}

#[derive(Deserialize)]
struct QueryLine {
    #[serde(default)]
    id: Option<serde_json::Value>,
    query: String,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Non-blank lines with their 1-based line numbers.
fn lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

pub fn read_queries(path: &Path) -> Result<Vec<QueryRecord>> {
    let mut out = Vec::new();
    for (n, line) in lines(path)? {
        let trimmed = line.trim();
        let record = if trimmed.starts_with('{') {
            let q: QueryLine = serde_json::from_str(trimmed).map_err(|e| Error::Malformed {
                line: n,
                message: e.to_string(),
            })?;
            let id = match q.id {
                Some(serde_json::Value::String(s)) => s,
                Some(v) => v.to_string(),
                None => n.to_string(),
            };
            QueryRecord { id, query: q.query }
        } else {
            QueryRecord {
                id: n.to_string(),
                query: trimmed.to_string(),
            }
        };
        out.push(record);
    }
    Ok(out)
}

pub fn read_gold(path: &Path) -> Result<Vec<GoldRecord>> {
    lines(path)?
        .into_iter()
        .map(|(n, line)| {
            serde_json::from_str(&line).map_err(|e| Error::Malformed {
                line: n,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Recall output file: header line then one record per line.
pub fn read_recall_output(path: &Path) -> Result<(Option<RunHeader>, Vec<RecallRecord>)> {
    let mut header = None;
    let mut records = Vec::new();
    for (n, line) in lines(path)? {
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| Error::Malformed {
                line: n,
                message: e.to_string(),
            })?;
        let malformed = |e: serde_json::Error| Error::Malformed {
            line: n,
            message: e.to_string(),
        };
        if value.get("kind").and_then(|k| k.as_str()) == Some(HEADER_KIND) {
            header = Some(serde_json::from_value(value).map_err(malformed)?);
        } else {
            records.push(serde_json::from_value(value).map_err(malformed)?);
        }
    }
    Ok((header, records))
}

// ---------------------------------------------------------------------------
// commands

pub fn cmd_build(corpus_path: &Path, index_dir: &Path) -> Result<BuildSummary> {
    let corpus = Corpus::ingest_path(corpus_path)?;
    if corpus.skipped_empty() > 0 {
        log::warn!(
            "skipped {} record(s) with an empty body",
            corpus.skipped_empty()
        );
    }
    Artifacts::build(corpus)?.save(index_dir)
}

fn pool(parallelism: usize) -> Result<rayon::ThreadPool> {
    if parallelism == 0 {
        return Err(Error::Config("parallelism must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Recalls every query, preserving input order.
pub fn recall_batch<S: TokenScorer + ?Sized>(
    artifacts: &Artifacts,
    scorer: &S,
    config: &MindRefConfig,
    queries: &[QueryRecord],
    parallelism: usize,
) -> Result<Vec<RecallRecord>> {
    let pipeline = Pipeline::new(artifacts, scorer, config.clone())?;
    let corpus = &artifacts.corpus;
    let run = |q: &QueryRecord| -> Result<RecallRecord> {
        let recall = pipeline.recall(&q.query)?;
        let references = recall
            .references
            .iter()
            .map(|r| {
                Ok(ReferenceRecord {
                    doc_id: r.doc_id.clone(),
                    title: r.title.clone(),
                    start: r.start,
                    passage_text: corpus.decode(&r.passage)?,
                    score1: r.score1,
                    score2: r.score2,
                    combined: r.combined,
                })
            })
            .collect::<Result<_>>()?;
        Ok(RecallRecord {
            id: q.id.clone(),
            query: q.query.clone(),
            references,
        })
    };
    pool(parallelism)?.install(|| queries.par_iter().map(run).collect())
}

pub fn run_header(artifacts: &Artifacts, config: &MindRefConfig, scorer: &ScorerArgs) -> RunHeader {
    RunHeader {
        kind: HEADER_KIND.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        scorer: scorer.scorer,
        endpoint: match scorer.scorer {
            ScorerKind::Remote => scorer.endpoint.clone(),
            ScorerKind::Ngram => None,
        },
        documents: artifacts.corpus.len(),
        vocab_hash: artifacts.corpus.codec().vocab_hash(),
    }
}

pub fn write_recall_output<W: Write + ?Sized>(
    out: &mut W,
    header: &RunHeader,
    records: &[RecallRecord],
) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, header)?;
    out.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

fn with_output<F>(path: Option<&Path>, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            let file = File::create(p).map_err(|e| Error::io(p, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w).map_err(|e| Error::io(p, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).map_err(|e| Error::io(Path::new("<stdout>"), e))
        }
    }
}

pub fn cmd_recall(args: &RecallArgs) -> Result<()> {
    let config = args.config.resolve()?;
    let queries = read_queries(&args.queries)?;
    let artifacts = Artifacts::load(&args.index_dir)?;
    let scorer = args.scorer.build(&artifacts.corpus)?;
    let records = recall_batch(
        &artifacts,
        scorer.as_ref(),
        &config,
        &queries,
        args.parallelism,
    )?;
    let header = run_header(&artifacts, &config, &args.scorer);
    with_output(args.output.as_deref(), |w| {
        write_recall_output(w, &header, &records)
    })
}

/// Pairs gold items with records by id when the gold item has one, else by
/// query text. Items with no record score as empty predictions.
pub fn evaluate_records(
    records: &[RecallRecord],
    gold: &[GoldRecord],
    metric: ContextMetric,
) -> Result<EvalReport> {
    let mut by_id = HashMap::new();
    let mut by_query = HashMap::new();
    for r in records {
        by_id.entry(r.id.as_str()).or_insert(r);
        by_query.entry(r.query.as_str()).or_insert(r);
    }
    let rows = gold
        .iter()
        .map(|g| {
            let record =
                g.id.as_deref()
                    .and_then(|id| by_id.get(id))
                    .or_else(|| by_query.get(g.item.query.as_str()));
            let prediction = record.map(|r| r.prediction()).unwrap_or_default();
            eval::score_item(&g.item, &prediction)
        })
        .collect();
    eval::aggregate(rows, metric)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<EvalReport> {
    let (_, records) = read_recall_output(&args.recall_output)?;
    let gold = read_gold(&args.gold)?;
    evaluate_records(&records, &gold, args.metric.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Alpha,
    PrefixLen,
    K,
    Beam1,
    Beam2,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "alpha" => Ok(Self::Alpha),
            "prefix_len" => Ok(Self::PrefixLen),
            "k" => Ok(Self::K),
            "beam1" => Ok(Self::Beam1),
            "beam2" => Ok(Self::Beam2),
            _ => Err(Error::UnknownAxis(s.to_string())),
        }
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Alpha => "alpha",
            Self::PrefixLen => "prefix_len",
            Self::K => "k",
            Self::Beam1 => "beam1",
            Self::Beam2 => "beam2",
        }
    }

    pub fn overrides(self, value: &str) -> Result<ConfigOverrides> {
        let bad = |e: &dyn std::fmt::Display| {
            Error::Config(format!("{} value {value:?}: {e}", self.name()))
        };
        let int = || value.trim().parse::<usize>().map_err(|e| bad(&e));
        let mut o = ConfigOverrides::default();
        match self {
            Self::Alpha => o.alpha = Some(value.trim().parse::<f64>().map_err(|e| bad(&e))?),
            Self::PrefixLen => o.prefix_len = Some(int()?),
            Self::K => o.k = Some(int()?),
            Self::Beam1 => o.beam1 = Some(int()?),
            Self::Beam2 => o.beam2 = Some(int()?),
        }
        Ok(o)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: &'static str,
    pub value: String,
    pub r_precision: f64,
    pub in_context: f64,
}

pub const SWEEP_CSV_HEADER: &str = "axis,value,r_precision,in_context";

impl SweepRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{:.2},{:.2}",
            self.axis, self.value, self.r_precision, self.in_context
        )
    }
}

pub fn sweep<S: TokenScorer + ?Sized>(
    artifacts: &Artifacts,
    scorer: &S,
    base: &MindRefConfig,
    gold: &[GoldRecord],
    axis: SweepAxis,
    values: &[String],
    metric: ContextMetric,
    parallelism: usize,
) -> Result<Vec<SweepRow>> {
    let queries: Vec<QueryRecord> = gold
        .iter()
        .enumerate()
        .map(|(i, g)| QueryRecord {
            id: g.id.clone().unwrap_or_else(|| (i + 1).to_string()),
            query: g.item.query.clone(),
        })
        .collect();
    // Gold items without an id are matched by query text inside evaluate.
    values
        .iter()
        .map(|value| {
            let config = base.clone().apply(&axis.overrides(value)?)?;
            let records = recall_batch(artifacts, scorer, &config, &queries, parallelism)?;
            let report = evaluate_records(&records, gold, metric)?;
            Ok(SweepRow {
                axis: axis.name(),
                value: value.trim().to_string(),
                r_precision: report.r_precision_mean,
                in_context: report.in_context_rate,
            })
        })
        .collect()
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Vec<SweepRow>> {
    let axis: SweepAxis = args.axis.parse()?;
    let base = args.config.resolve()?;
    let gold = read_gold(&args.gold)?;
    let artifacts = Artifacts::load(&args.index_dir)?;
    let scorer = args.scorer.build(&artifacts.corpus)?;
    sweep(
        &artifacts,
        scorer.as_ref(),
        &base,
        &gold,
        axis,
        &args.values,
        args.metric.into(),
        args.parallelism,
    )
}

// ---------------------------------------------------------------------------
// entry point

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Build(a) => {
            let s = cmd_build(&a.corpus, &a.index_dir)?;
            println!("documents: {}", s.documents);
            println!("vocabulary size: {}", s.vocab_size);
            println!("index bytes: {}", s.index_bytes);
        }
        Command::Recall(a) => cmd_recall(&a)?,
        Command::Evaluate(a) => {
            let report = cmd_evaluate(&a)?;
            let json =
                serde_json::to_string_pretty(&report).map_err(|e| Error::Format(e.to_string()))?;
            println!("{json}");
            if !a.json {
                print!("{}", report.to_table());
            }
        }
        Command::Sweep(a) => {
            let rows = cmd_sweep(&a)?;
            with_output(a.output.as_deref(), |w| {
                writeln!(w, "{SWEEP_CSV_HEADER}")?;
                for r in &rows {
                    writeln!(w, "{}", r.to_csv())?;
                }
                w.flush()
            })?;
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
