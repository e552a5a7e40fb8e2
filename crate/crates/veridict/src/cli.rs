//! Command-line interface. [`run`] returns the process exit status: 0 on
//! success, 1 on runtime errors, 2 on usage errors.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;
use veridict_core::chunker::ChunkConfig;
use veridict_core::corpus::{compute_stats, CorpusRecord, Source, Split};
use veridict_core::corrector::correct_summary;
use veridict_core::embedding::{Embedder, NgramEmbedder, OneHotEmbedder};
use veridict_core::evalreport::aggregate;
use veridict_core::extractive::{CaseSummarizer, TfIdf};
use veridict_core::metrics::{audit, Evaluator, Metric, MetricReport, Nli, SummacAggregation, VerbatimNli, DEFAULT_NLI_THRESHOLD};
use veridict_core::orchestrator::{EchoBackend, EchoMode, Generator, Orchestrator, PromptKind, RetryPolicy};
use veridict_core::recognizers::{BuiltinRecognizer, Recognizer};
use veridict_core::textproc::Segmenter;

use crate::config::RunConfig;
use crate::corpus_io::{load_any, load_segmenter, write_jsonl, JsonRecord};
use crate::error::{io_err, Error, Result};
use crate::http::{ChatCompletionsBackend, SidecarClient, ThreadSleep};
use crate::manifest::Manifest;
use crate::report::{
    audit_json, comparison_csv, comparison_markdown, human_markdown, ledger_json, metric_json, read_human_csv,
    read_metric_csv, significance, write_metric_csv, SummaryRecord,
};

/// Method id given to CaseSummarizer extracts.
pub const EXTRACTIVE_METHOD: &str = "case-summarizer";
/// Appended to the method id of corrected summaries.
pub const CORRECTED_SUFFIX: &str = "-corrected";

#[derive(Debug, Parser)]
#[command(name = "veridict", version, about = "Long legal document summarization and factual-consistency evaluation")]
pub struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for per-document work (default: number of processors).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Base URL of the model sidecar.
    #[arg(long, global = true)]
    pub sidecar_url: Option<String>,
    /// Extra sentence-splitter abbreviations, one per line.
    #[arg(long, global = true)]
    pub abbreviations: Option<PathBuf>,
    /// Where to write the run manifest (default: `<out>.manifest.json`,
    /// or stderr when writing to stdout).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a corpus directory to JSON Lines.
    Ingest(IngestArgs),
    /// Per-split word-count averages, coverage and density.
    Stats(StatsArgs),
    /// Extractive summaries with CaseSummarizer.
    Extract(ExtractArgs),
    /// Chunked LLM summaries.
    Summarize(SummarizeArgs),
    /// Metric reports for candidate summaries.
    Evaluate(EvaluateArgs),
    /// Flag unsupported sentences, entities and numbers.
    Audit(AuditArgs),
    /// Replace hallucinated entities and numbers with document mentions.
    Correct(CorrectArgs),
    /// Comparison tables from metric reports and human-evaluation sheets.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Corpus directory (`<split>/judgement`, `<split>/summary`) or JSON Lines file.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Dataset label for directory corpora.
    #[arg(long, default_value = "generic")]
    pub source: Source,
    /// Only use this split.
    #[arg(long)]
    pub split: Option<Split>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatsFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_enum, default_value = "text")]
    pub format: StatsFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RecognizerSel {
    Builtin,
    Sidecar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmbedderSel {
    Builtin,
    Onehot,
    Sidecar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NliSel {
    Mock,
    Sidecar,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Word budget per document (default: the gold summary length).
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, value_enum, default_value = "builtin")]
    pub recognizer: RecognizerSel,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// summ, tldr, explicit, hybrid or rh.
    #[arg(long, default_value = "summ")]
    pub variant: PromptKind,
    /// Chunk size in words (default from config, else 1024).
    #[arg(long)]
    pub chunk_words: Option<usize>,
    /// `echo`, `truncate`, or a `[backend.<name>]` entry of the config.
    #[arg(long, default_value = "echo")]
    pub backend: String,
    #[arg(long)]
    pub min_target_words: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    /// Recognizer used by the extractive stage of the hybrid variant.
    #[arg(long, value_enum, default_value = "builtin")]
    pub recognizer: RecognizerSel,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Jsonl,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Summaries JSON Lines.
    #[arg(long)]
    pub summaries: PathBuf,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Comma-separated metric names, or `all`.
    #[arg(long, default_value = "all")]
    pub metrics: String,
    #[arg(long, value_enum, default_value = "mock")]
    pub nli: NliSel,
    #[arg(long, value_enum, default_value = "builtin")]
    pub embedder: EmbedderSel,
    #[arg(long, value_enum, default_value = "builtin")]
    pub recognizer: RecognizerSel,
    /// SummaC aggregation over summary sentences: mean or min.
    #[arg(long, default_value = "mean")]
    pub aggregation: SummacAggregation,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub summaries: PathBuf,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_enum, default_value = "mock")]
    pub nli: NliSel,
    #[arg(long, value_enum, default_value = "builtin")]
    pub recognizer: RecognizerSel,
    /// Sentences whose best entailment is below this are flagged.
    #[arg(long, default_value_t = DEFAULT_NLI_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorrectArgs {
    /// Summaries JSON Lines to correct.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_enum, default_value = "builtin")]
    pub embedder: EmbedderSel,
    #[arg(long, value_enum, default_value = "builtin")]
    pub recognizer: RecognizerSel,
    #[arg(long)]
    pub out: PathBuf,
    /// Replacement ledger JSON (default: `<out>.ledger.json`).
    #[arg(long)]
    pub ledger: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Markdown,
    Csv,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Metric report CSV files; may be repeated.
    #[arg(long = "reports")]
    pub reports: Vec<PathBuf>,
    /// Method to test every other method against.
    #[arg(long)]
    pub baseline: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Human-evaluation CSV (document_id, method_id, annotator_id, metric, score).
    #[arg(long)]
    pub human: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "markdown")]
    pub format: TableFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Shared state for one invocation.
struct Ctx {
    config: RunConfig,
    config_digest: Option<String>,
    segmenter: Segmenter,
    pool: rayon::ThreadPool,
    sidecar_url: Option<String>,
    manifest_path: Option<PathBuf>,
}

/// Backends a command may select from. The sidecar client is only built
/// when a selector asks for it.
struct Backends {
    builtin: BuiltinRecognizer,
    ngram: NgramEmbedder,
    sidecar: Option<SidecarClient>,
}

impl Backends {
    fn new(ctx: &Ctx, want_sidecar: bool) -> Result<Self> {
        let sidecar = if want_sidecar {
            let url = ctx.sidecar_url.as_deref().ok_or_else(|| {
                Error::Config("a sidecar backend was selected but no --sidecar-url or run.sidecar_url is set".into())
            })?;
            Some(SidecarClient::new(url))
        } else {
            None
        };
        Ok(Self { builtin: BuiltinRecognizer::new(ctx.segmenter.clone()), ngram: NgramEmbedder::default(), sidecar })
    }

    fn sidecar(&self) -> &SidecarClient {
        self.sidecar.as_ref().expect("sidecar requested at construction")
    }

    fn recognizer(&self, sel: RecognizerSel) -> &(dyn Recognizer + Sync) {
        match sel {
            RecognizerSel::Builtin => &self.builtin,
            RecognizerSel::Sidecar => self.sidecar(),
        }
    }

    fn embedder(&self, sel: EmbedderSel) -> &(dyn Embedder + Sync) {
        match sel {
            EmbedderSel::Builtin => &self.ngram,
            EmbedderSel::Onehot => &OneHotEmbedder,
            EmbedderSel::Sidecar => self.sidecar(),
        }
    }

    fn nli(&self, sel: NliSel) -> &(dyn Nli + Sync) {
        match sel {
            NliSel::Mock => &VerbatimNli,
            NliSel::Sidecar => self.sidecar(),
        }
    }
}

/// Parses `args` and runs the command, printing errors to stderr.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = format!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                msg.push_str(&format!(": {s}"));
                src = s.source();
            }
            eprintln!("{msg}");
            ExitCode::from(1)
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let (config, config_digest) = match &cli.config {
        Some(p) => (RunConfig::load(p)?, Some(crate::manifest::digest_path(p)?)),
        None => (RunConfig::default(), None),
    };
    let jobs = cli.jobs.or(config.run.jobs);
    if jobs == Some(0) {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let abbreviations = cli.abbreviations.clone().or_else(|| config.run.abbreviations.clone());
    let ctx = Ctx {
        segmenter: load_segmenter(abbreviations.as_deref())?,
        sidecar_url: cli.sidecar_url.clone().or_else(|| config.run.sidecar_url.clone()),
        config,
        config_digest,
        pool,
        manifest_path: cli.manifest.clone(),
    };
    match cli.command {
        Command::Ingest(a) => ingest(&ctx, a),
        Command::Stats(a) => stats(&ctx, a),
        Command::Extract(a) => extract(&ctx, a),
        Command::Summarize(a) => summarize(&ctx, a),
        Command::Evaluate(a) => evaluate(&ctx, a),
        Command::Audit(a) => audit_cmd(&ctx, a),
        Command::Correct(a) => correct(&ctx, a),
        Command::Report(a) => report(&ctx, a),
    }
}

fn load_records(c: &CorpusArgs) -> Result<Vec<CorpusRecord>> {
    let mut records = load_any(&c.corpus, c.source)?;
    if let Some(split) = c.split {
        records.retain(|r| r.split == split);
    }
    Ok(records)
}

fn corpus_settings(m: &mut Manifest, c: &CorpusArgs) -> Result<()> {
    m.input(&c.corpus)?;
    m.setting("source", c.source.as_str());
    m.setting("split", c.split.map(|s| s.as_str()));
    Ok(())
}

fn read_summaries(path: &Path) -> Result<Vec<SummaryRecord>> {
    let mut rows: Vec<SummaryRecord> = crate::corpus_io::read_jsonl(path)?;
    rows.sort_by(|a, b| (&a.pair_id, &a.method_id).cmp(&(&b.pair_id, &b.method_id)));
    if let Some(w) = rows.windows(2).find(|w| w[0].pair_id == w[1].pair_id && w[0].method_id == w[1].method_id) {
        return Err(Error::Input(format!(
            "{}: duplicate summary for pair {} and method {}",
            path.display(),
            w[0].pair_id,
            w[0].method_id
        )));
    }
    Ok(rows)
}

/// Pairs each summary with its corpus record.
fn join<'a>(summaries: &'a [SummaryRecord], records: &'a [CorpusRecord]) -> Result<Vec<(&'a SummaryRecord, &'a CorpusRecord)>> {
    let by_id: BTreeMap<&str, &CorpusRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    summaries
        .iter()
        .map(|s| {
            by_id
                .get(s.pair_id.as_str())
                .map(|r| (s, *r))
                .ok_or_else(|| Error::Input(format!("summary pair {} is not in the corpus", s.pair_id)))
        })
        .collect()
}

fn jsonl_bytes<T: serde::Serialize>(items: &[T]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, items)?;
    Ok(buf)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::write(path, bytes).map_err(io_err(path))
}

/// Writes the primary output (file or stdout) and then the manifest.
fn finish(ctx: &Ctx, mut m: Manifest, out: Option<&Path>, bytes: &[u8], extra: &[(&Path, &[u8])]) -> Result<()> {
    m.config_sha256 = ctx.config_digest.clone();
    match out {
        Some(p) => {
            write_file(p, bytes)?;
            m.output(p, bytes);
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(io_err("<stdout>"))?;
            m.output(Path::new("<stdout>"), bytes);
        }
    }
    for (p, b) in extra {
        write_file(p, b)?;
        m.output(p, b);
    }
    let manifest_path = ctx.manifest_path.clone().or_else(|| out.map(|p| suffixed(p, ".manifest.json")));
    match manifest_path {
        Some(p) => write_file(&p, m.to_json().as_bytes()),
        None => {
            eprint!("{}", m.to_json());
            Ok(())
        }
    }
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Runs `f` over `items` on the pool; results keep input order.
fn par_map<T: Sync, U: Send>(ctx: &Ctx, items: &[T], f: impl Fn(&T) -> Result<U> + Sync + Send) -> Vec<Result<U>> {
    ctx.pool.install(|| items.par_iter().map(f).collect())
}

fn ingest(ctx: &Ctx, a: IngestArgs) -> Result<()> {
    let records = load_records(&a.corpus)?;
    let rows: Vec<JsonRecord> = records.iter().map(JsonRecord::from).collect();
    let mut m = Manifest::new("ingest");
    corpus_settings(&mut m, &a.corpus)?;
    m.setting("records", rows.len());
    finish(ctx, m, Some(&a.out), &jsonl_bytes(&rows)?, &[])
}

fn stats(ctx: &Ctx, a: StatsArgs) -> Result<()> {
    let records = load_records(&a.corpus)?;
    if records.is_empty() {
        return Err(Error::Input(format!("{}: no documents", a.corpus.corpus.display())));
    }
    let mut groups: Vec<(String, Vec<CorpusRecord>)> = Split::ALL
        .into_iter()
        .map(|s| (s.as_str().to_string(), records.iter().filter(|r| r.split == s).cloned().collect::<Vec<_>>()))
        .filter(|(_, rs)| !rs.is_empty())
        .collect();
    if groups.len() > 1 {
        groups.push(("all".to_string(), records.clone()));
    }
    let rows: Vec<(String, veridict_core::corpus::CorpusStats)> = groups
        .iter()
        .zip(par_map(ctx, &groups, |(_, rs)| Ok(compute_stats(rs)?)))
        .map(|((name, _), s)| s.map(|s| (name.clone(), s)))
        .collect::<Result<_>>()?;
    let bytes = match a.format {
        StatsFormat::Json => {
            let v: Vec<_> = rows
                .iter()
                .map(|(name, s)| {
                    json!({
                        "split": name,
                        "documents": s.n_documents,
                        "avg_doc_words": s.avg_doc_words,
                        "avg_summary_words": s.avg_summary_words,
                        "coverage": s.coverage,
                        "density": s.density,
                    })
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&v)?;
            s.push('\n');
            s.into_bytes()
        }
        StatsFormat::Text => {
            let mut s = format!(
                "{:<12} {:>9} {:>14} {:>18} {:>9} {:>8}\n",
                "split", "documents", "avg_doc_words", "avg_summary_words", "coverage", "density"
            );
            for (name, st) in &rows {
                s.push_str(&format!(
                    "{:<12} {:>9} {:>14.2} {:>18.2} {:>9.2} {:>8.2}\n",
                    name, st.n_documents, st.avg_doc_words, st.avg_summary_words, st.coverage, st.density
                ));
            }
            s.into_bytes()
        }
    };
    let mut m = Manifest::new("stats");
    corpus_settings(&mut m, &a.corpus)?;
    finish(ctx, m, a.out.as_deref(), &bytes, &[])
}

fn build_tfidf(records: &[CorpusRecord]) -> Result<TfIdf> {
    let docs: Vec<&str> = records.iter().map(|r| r.document_text.as_str()).collect();
    Ok(TfIdf::build(&docs)?)
}

fn extract(ctx: &Ctx, a: ExtractArgs) -> Result<()> {
    let records = load_records(&a.corpus)?;
    let backends = Backends::new(ctx, a.recognizer == RecognizerSel::Sidecar)?;
    let recognizer = backends.recognizer(a.recognizer);
    let tfidf = build_tfidf(&records)?;
    let weights = ctx.config.case_summarizer.weights()?;
    let results = par_map(ctx, &records, |r| {
        let summarizer = CaseSummarizer { tfidf: &tfidf, weights, segmenter: &ctx.segmenter, recognizer };
        let budget = a.budget.unwrap_or_else(|| r.summary_words());
        let ex = summarizer.summarize(&r.document_text, budget)?;
        let mut meta = BTreeMap::new();
        meta.insert("budget_words".to_string(), budget.to_string());
        meta.insert("sentences".to_string(), ex.selected.len().to_string());
        Ok(SummaryRecord {
            pair_id: r.id.clone(),
            method_id: EXTRACTIVE_METHOD.to_string(),
            text: ex.text,
            chunk_targets: vec![budget],
            backend_metadata: meta,
        })
    });
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut m = Manifest::new("extract");
    corpus_settings(&mut m, &a.corpus)?;
    m.setting("budget", a.budget).setting("recognizer", format!("{:?}", a.recognizer).to_lowercase());
    m.setting("weights", &ctx.config.case_summarizer);
    finish(ctx, m, Some(&a.out), &jsonl_bytes(&rows)?, &[])
}

fn generator(ctx: &Ctx, name: &str) -> Result<Box<dyn Generator + Sync + Send>> {
    Ok(match name {
        "echo" => Box::new(EchoBackend { mode: EchoMode::Echo, segmenter: ctx.segmenter.clone() }),
        "truncate" => Box::new(EchoBackend { mode: EchoMode::Truncate, segmenter: ctx.segmenter.clone() }),
        other => {
            let section = ctx.config.backend.get(other).ok_or_else(|| {
                Error::Config(format!("unknown backend {other:?}; use echo, truncate, or a [backend.{other}] config entry"))
            })?;
            Box::new(ChatCompletionsBackend::from_config(other, section))
        }
    })
}

fn summarize(ctx: &Ctx, a: SummarizeArgs) -> Result<()> {
    let records = load_records(&a.corpus)?;
    let backend = generator(ctx, &a.backend)?;
    let backend: &(dyn Generator + Sync) = &*backend;
    let chunk_words = a.chunk_words.unwrap_or(ctx.config.chunker.chunk_words);
    let chunk_config = ChunkConfig { min_target_words: a.min_target_words.unwrap_or(ctx.config.chunker.min_target_words) };
    let hybrid = a.variant == PromptKind::Hybrid;
    let backends = Backends::new(ctx, hybrid && a.recognizer == RecognizerSel::Sidecar)?;
    let recognizer = backends.recognizer(a.recognizer);
    let tfidf = if hybrid { Some(build_tfidf(&records)?) } else { None };
    let weights = ctx.config.case_summarizer.weights()?;
    let is_mock = matches!(a.backend.as_str(), "echo" | "truncate");
    let results = par_map(ctx, &records, |r| {
        let orch = Orchestrator {
            backend,
            segmenter: &ctx.segmenter,
            chunk_config,
            retry: RetryPolicy::default(),
            pause: if is_mock { &veridict_core::orchestrator::NoPause } else { &ThreadSleep },
            temperature: a.temperature,
        };
        let out = match &tfidf {
            Some(t) => {
                let ex = CaseSummarizer { tfidf: t, weights, segmenter: &ctx.segmenter, recognizer };
                orch.hybrid(r, &ex)
            }
            None => orch.summarize(r, &a.variant.into(), chunk_words),
        };
        out.map(SummaryRecord::from).map_err(|e| Error::Input(format!("pair {}: {e}", r.id)))
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(s) => rows.push(s),
            Err(e) => failures.push(e.to_string()),
        }
    }
    let mut m = Manifest::new("summarize");
    corpus_settings(&mut m, &a.corpus)?;
    m.setting("variant", a.variant.name())
        .setting("chunk_words", chunk_words)
        .setting("min_target_words", chunk_config.min_target_words)
        .setting("backend", &a.backend)
        .setting("temperature", a.temperature);
    if let Some(section) = ctx.config.backend.get(&a.backend) {
        m.setting("model", &section.model).setting("base_url", &section.base_url);
    }
    m.setting("failed_pairs", failures.len());
    finish(ctx, m, Some(&a.out), &jsonl_bytes(&rows)?, &[])?;
    if failures.is_empty() {
        Ok(())
    } else {
        for f in &failures {
            eprintln!("{f}");
        }
        Err(Error::Input(format!("{} of {} documents failed; the rest were written", failures.len(), records.len())))
    }
}

fn parse_metrics(spec: &str) -> Result<BTreeSet<Metric>> {
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok(Metric::ALL.into_iter().collect());
    }
    let set = spec
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<Metric>().map_err(Error::from))
        .collect::<Result<BTreeSet<_>>>()?;
    if set.is_empty() {
        return Err(Error::Input("no metrics selected".into()));
    }
    Ok(set)
}

fn evaluate(ctx: &Ctx, a: EvaluateArgs) -> Result<()> {
    let metrics = parse_metrics(&a.metrics)?;
    let summaries = read_summaries(&a.summaries)?;
    let records = load_records(&a.corpus)?;
    let pairs = join(&summaries, &records)?;
    let backends = Backends::new(
        ctx,
        a.nli == NliSel::Sidecar || a.embedder == EmbedderSel::Sidecar || a.recognizer == RecognizerSel::Sidecar,
    )?;
    let (recognizer, embedder, nli) = (backends.recognizer(a.recognizer), backends.embedder(a.embedder), backends.nli(a.nli));
    let reports = par_map(ctx, &pairs, |(s, r)| {
        let ev = Evaluator { recognizer, embedder, nli, segmenter: ctx.segmenter.clone(), aggregation: a.aggregation };
        ev.evaluate(&s.pair_id, &s.method_id, &r.document_text, &r.gold_summary_text, &s.text, &metrics)
            .map_err(|e| Error::Input(format!("pair {} method {}: {e}", s.pair_id, s.method_id)))
    })
    .into_iter()
    .collect::<Result<Vec<MetricReport>>>()?;
    let bytes = match a.format {
        ReportFormat::Csv => {
            let mut buf = Vec::new();
            write_metric_csv(&mut buf, &reports)?;
            buf
        }
        ReportFormat::Jsonl => jsonl_bytes(&reports.iter().map(metric_json).collect::<Vec<_>>())?,
    };
    let mut m = Manifest::new("evaluate");
    m.input(&a.summaries)?;
    corpus_settings(&mut m, &a.corpus)?;
    m.setting("metrics", metrics.iter().map(|x| x.name()).collect::<Vec<_>>())
        .setting("nli", format!("{:?}", a.nli).to_lowercase())
        .setting("embedder", format!("{:?}", a.embedder).to_lowercase())
        .setting("recognizer", format!("{:?}", a.recognizer).to_lowercase())
        .setting("aggregation", format!("{:?}", a.aggregation).to_lowercase());
    finish(ctx, m, a.out.as_deref(), &bytes, &[])
}

fn audit_cmd(ctx: &Ctx, a: AuditArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&a.threshold) {
        return Err(Error::Input(format!("--threshold must lie in [0, 1], got {}", a.threshold)));
    }
    let summaries = read_summaries(&a.summaries)?;
    let records = load_records(&a.corpus)?;
    let pairs = join(&summaries, &records)?;
    let backends = Backends::new(ctx, a.nli == NliSel::Sidecar || a.recognizer == RecognizerSel::Sidecar)?;
    let (recognizer, nli) = (backends.recognizer(a.recognizer), backends.nli(a.nli));
    let rows = par_map(ctx, &pairs, |(s, r)| {
        let rep = audit(&r.document_text, &s.text, recognizer, nli, &ctx.segmenter, a.threshold)
            .map_err(|e| Error::Input(format!("pair {} method {}: {e}", s.pair_id, s.method_id)))?;
        Ok(audit_json(&s.pair_id, &s.method_id, &rep))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut m = Manifest::new("audit");
    m.input(&a.summaries)?;
    corpus_settings(&mut m, &a.corpus)?;
    m.setting("threshold", a.threshold)
        .setting("nli", format!("{:?}", a.nli).to_lowercase())
        .setting("recognizer", format!("{:?}", a.recognizer).to_lowercase());
    finish(ctx, m, a.out.as_deref(), &jsonl_bytes(&rows)?, &[])
}

fn correct(ctx: &Ctx, a: CorrectArgs) -> Result<()> {
    let summaries = read_summaries(&a.input)?;
    let records = load_records(&a.corpus)?;
    let pairs = join(&summaries, &records)?;
    let backends = Backends::new(ctx, a.embedder == EmbedderSel::Sidecar || a.recognizer == RecognizerSel::Sidecar)?;
    let (recognizer, embedder) = (backends.recognizer(a.recognizer), backends.embedder(a.embedder));
    let results = par_map(ctx, &pairs, |(s, r)| {
        let (text, ledger) = correct_summary(&r.document_text, &s.text, recognizer, embedder)
            .map_err(|e| Error::Input(format!("pair {} method {}: {e}", s.pair_id, s.method_id)))?;
        let mut meta = s.backend_metadata.clone();
        meta.insert("corrected_from".to_string(), s.method_id.clone());
        meta.insert("replacements".to_string(), ledger.entries.len().to_string());
        let fixed = SummaryRecord {
            pair_id: s.pair_id.clone(),
            method_id: format!("{}{CORRECTED_SUFFIX}", s.method_id),
            text,
            chunk_targets: s.chunk_targets.clone(),
            backend_metadata: meta,
        };
        Ok((fixed, ledger_json(&s.pair_id, &s.method_id, &ledger)))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (rows, ledgers): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let ledger_path = a.ledger.clone().unwrap_or_else(|| suffixed(&a.out, ".ledger.json"));
    let mut ledger_bytes = serde_json::to_vec_pretty(&ledgers)?;
    ledger_bytes.push(b'\n');
    let mut m = Manifest::new("correct");
    m.input(&a.input)?;
    corpus_settings(&mut m, &a.corpus)?;
    m.setting("embedder", format!("{:?}", a.embedder).to_lowercase())
        .setting("recognizer", format!("{:?}", a.recognizer).to_lowercase());
    finish(ctx, m, Some(&a.out), &jsonl_bytes(&rows)?, &[(&ledger_path, &ledger_bytes)])
}

fn report(ctx: &Ctx, a: ReportArgs) -> Result<()> {
    if a.reports.is_empty() && a.human.is_none() {
        return Err(Error::Input("nothing to report: give --reports and/or --human".into()));
    }
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Error::Input(format!("--alpha must lie in (0, 1), got {}", a.alpha)));
    }
    let mut m = Manifest::new("report");
    let mut out = Vec::new();
    if !a.reports.is_empty() {
        let mut reports = Vec::new();
        for p in &a.reports {
            reports.extend(read_metric_csv(p)?);
            m.input(p)?;
        }
        let table = aggregate(&reports, &ctx.config.families)?;
        let sig = a.baseline.as_deref().map(|b| significance(&reports, &table, b, a.alpha)).transpose()?;
        match a.format {
            TableFormat::Markdown => out.extend(comparison_markdown(&table, sig.as_ref()).into_bytes()),
            TableFormat::Csv => comparison_csv(&mut out, &table, sig.as_ref())?,
        }
    }
    if let Some(h) = &a.human {
        let sheets = read_human_csv(h)?;
        if sheets.is_empty() {
            return Err(Error::Input(format!("{}: no human-evaluation rows", h.display())));
        }
        m.input(h)?;
        if !out.is_empty() {
            out.push(b'\n');
        }
        out.extend(human_markdown(&sheets).into_bytes());
    }
    m.setting("baseline", &a.baseline).setting("alpha", a.alpha).setting("families", &ctx.config.families);
    finish(ctx, m, a.out.as_deref(), &out, &[])
}
