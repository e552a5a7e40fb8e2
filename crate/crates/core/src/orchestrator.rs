//! Prompt rendering and chunk-by-chunk generation against an LLM backend.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use core::time::Duration;

use crate::chunker::{allocate_target_length, plan_chunks, ChunkConfig};
use crate::corpus::CorpusRecord;
use crate::error::{BackendError, Error, Result};
use crate::extractive::CaseSummarizer;
use crate::textproc::{tokens_for_words, word_count, words_from_tokens, Segmenter};

pub const TEXT_SLOT: &str = "<text>";
pub const LENGTH_SLOT: &str = "<YY>";

/// Word budget of the extractive stage of the hybrid pipeline.
pub const HYBRID_EXTRACT_WORDS: usize = 1500;

const SUMM: &str = "<text> Summarize the document in <YY> words";
const TLDR: &str = "<text> Tl;Dr";
const EXPLICIT: &str = "Your task is to summarize the following document in at most <YY> words. \
The document to be summarized is given within <>. Document to summarize - <<text>>";
const REDUCE_HALLUCINATION: &str = "Your task is to summarize the following document in at most <YY> words. \
Output complete sentences and not half sentences. Do not have hallucinations and inconsistencies in your summary. \
The document to be summarized is given within <>. Document to summarize - <<text>>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PromptKind {
    Summ,
    Tldr,
    Explicit,
    /// Extractive pre-selection followed by the `Summ` prompt.
    Hybrid,
    ReduceHallucination,
}

impl PromptKind {
    pub const ALL: [PromptKind; 5] = [
        PromptKind::Summ,
        PromptKind::Tldr,
        PromptKind::Explicit,
        PromptKind::Hybrid,
        PromptKind::ReduceHallucination,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PromptKind::Summ => "summ",
            PromptKind::Tldr => "tldr",
            PromptKind::Explicit => "explicit",
            PromptKind::Hybrid => "hybrid",
            PromptKind::ReduceHallucination => "rh",
        }
    }

    pub fn template(self) -> &'static str {
        match self {
            PromptKind::Summ | PromptKind::Hybrid => SUMM,
            PromptKind::Tldr => TLDR,
            PromptKind::Explicit => EXPLICIT,
            PromptKind::ReduceHallucination => REDUCE_HALLUCINATION,
        }
    }

    pub fn uses_length(self) -> bool {
        self != PromptKind::Tldr
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PromptKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_lowercase();
        let s = if s == "reduce_hallucination" { "rh" } else { s.as_str() };
        PromptKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown prompt variant {s:?}")))
    }
}

/// A prompt template, either one of the builtin kinds or a custom string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptVariant {
    pub kind: PromptKind,
    pub template: String,
}

impl From<PromptKind> for PromptVariant {
    fn from(kind: PromptKind) -> Self {
        Self { kind, template: kind.template().into() }
    }
}

/// Substitutes the text and length slots in one left-to-right pass, so slot
/// markers inside `text` are left alone.
pub fn render_prompt(variant: &PromptVariant, text: &str, target_words: Option<usize>) -> Result<String> {
    let t = &variant.template;
    if !t.contains(TEXT_SLOT) {
        return Err(Error::MissingSlot(TEXT_SLOT));
    }
    let needs_length = variant.kind.uses_length();
    if needs_length && !t.contains(LENGTH_SLOT) {
        return Err(Error::MissingSlot(LENGTH_SLOT));
    }
    let yy = match target_words {
        Some(0) => return Err(Error::InvalidArgument("target length must be at least one word".into())),
        Some(n) => Some(n.to_string()),
        None if needs_length => return Err(Error::InvalidArgument("this variant needs a target length".into())),
        None => None,
    };
    let mut out = String::with_capacity(t.len() + text.len());
    let mut rest = t.as_str();
    while let Some(pos) = rest.find('<') {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        if let Some(after) = tail.strip_prefix(TEXT_SLOT) {
            out.push_str(text);
            rest = after;
        } else if let (Some(after), Some(yy)) = (tail.strip_prefix(LENGTH_SLOT), yy.as_deref()) {
            out.push_str(yy);
            rest = after;
        } else {
            out.push('<');
            rest = &tail[1..];
        }
    }
    out.push_str(rest);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub prompt: String,
    pub max_response_tokens: usize,
    pub backend_id: String,
    pub temperature: f64,
}

/// A completion backend. Implementations return the generated text only.
pub trait Generator {
    fn id(&self) -> &str;
    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError>;
}

impl<T: Generator + ?Sized> Generator for &T {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        (**self).generate(request)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EchoMode {
    /// Returns the prompt unchanged.
    #[default]
    Echo,
    /// Returns the leading whole sentences of the prompt that fit in the
    /// token budget; a first sentence that does not fit is cut mid-way.
    Truncate,
}

/// Deterministic stand-in for an LLM.
#[derive(Debug, Clone, Default)]
pub struct EchoBackend {
    pub mode: EchoMode,
    pub segmenter: Segmenter,
}

impl EchoBackend {
    pub fn new(mode: EchoMode) -> Self {
        Self { mode, segmenter: Segmenter::default() }
    }
}

impl Generator for EchoBackend {
    fn id(&self) -> &str {
        match self.mode {
            EchoMode::Echo => "echo",
            EchoMode::Truncate => "truncate",
        }
    }

    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        match self.mode {
            EchoMode::Echo => Ok(request.prompt.clone()),
            EchoMode::Truncate => {
                let budget = words_from_tokens(request.max_response_tokens).max(1);
                let p = &request.prompt;
                let mut used = 0;
                let mut end = 0;
                for s in self.segmenter.split(p) {
                    let n = word_count(s.slice(p));
                    if used + n > budget {
                        break;
                    }
                    used += n;
                    end = s.end;
                }
                if end == 0 {
                    let cut = crate::textproc::word_spans(p).take(budget).last().map_or(0, |(_, e)| e);
                    return Ok(p[..cut].to_string());
                }
                Ok(p[..end].to_string())
            }
        }
    }
}

/// Sleeps between retries. Injected so tests do not wait.
pub trait Pause {
    fn pause(&self, duration: Duration);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoPause;

impl Pause for NoPause {
    fn pause(&self, _: Duration) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: usize,
    pub initial_backoff: Duration,
    pub multiplier: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 3, initial_backoff: Duration::from_secs(1), multiplier: 2 }
    }
}

/// Calls the backend until it returns non-empty text, a permanent error, or
/// attempts run out. A rate-limit hint overrides the computed backoff.
pub fn generate_with_retry(
    backend: &dyn Generator,
    request: &GenerationRequest,
    policy: &RetryPolicy,
    pause: &dyn Pause,
) -> Result<String, BackendError> {
    let mut backoff = policy.initial_backoff;
    let mut attempt = 1;
    loop {
        let err = match backend.generate(request) {
            Ok(text) if !text.trim().is_empty() => return Ok(text),
            Ok(_) => BackendError::EmptyResponse,
            Err(e) => e,
        };
        if !err.is_transient() || attempt >= policy.max_attempts {
            return Err(err);
        }
        let wait = match &err {
            BackendError::RateLimited { retry_after: Some(d) } => *d,
            _ => backoff,
        };
        pause.pause(wait);
        backoff *= policy.multiplier;
        attempt += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSummary {
    pub pair_id: String,
    pub method_id: String,
    pub text: String,
    pub chunk_targets: Vec<usize>,
    pub backend_metadata: BTreeMap<String, String>,
}

/// Separator placed between chunk summaries.
pub const CHUNK_SEPARATOR: &str = "\n\n";

pub struct Orchestrator<'a> {
    pub backend: &'a dyn Generator,
    pub segmenter: &'a Segmenter,
    pub chunk_config: ChunkConfig,
    pub retry: RetryPolicy,
    pub pause: &'a dyn Pause,
    pub temperature: f64,
}

impl Orchestrator<'_> {
    pub fn method_id(&self, kind: PromptKind, chunk_words: usize) -> String {
        match kind {
            PromptKind::Hybrid => alloc::format!("{}-hybrid", self.backend.id()),
            _ => alloc::format!("{}-{}-{}", self.backend.id(), kind.name(), chunk_words),
        }
    }

    fn request(&self, prompt: String, target_words: usize) -> GenerationRequest {
        GenerationRequest {
            prompt,
            max_response_tokens: tokens_for_words(target_words).max(1),
            backend_id: self.backend.id().to_string(),
            temperature: self.temperature,
        }
    }

    /// Generates one summary per chunk and joins them in document order.
    /// Passing the hybrid kind here just uses its `Summ` template; the
    /// two-stage pipeline is [`Orchestrator::hybrid`].
    pub fn summarize(&self, record: &CorpusRecord, variant: &PromptVariant, chunk_words: usize) -> Result<CandidateSummary> {
        let plan = plan_chunks(
            &record.document_text,
            chunk_words,
            record.summary_words(),
            &self.chunk_config,
            self.segmenter,
        )?;
        let total = plan.chunks.len();
        let mut outputs = Vec::with_capacity(total);
        let mut failed = Vec::new();
        for (i, chunk) in plan.chunks.iter().enumerate() {
            let target = variant.kind.uses_length().then_some(chunk.target_words);
            let prompt = render_prompt(variant, &chunk.text, target)?;
            let req = self.request(prompt, chunk.target_words);
            match generate_with_retry(self.backend, &req, &self.retry, self.pause) {
                Ok(text) => outputs.push(text.trim().to_string()),
                Err(e) => failed.push((i, e)),
            }
        }
        if failed.len() == total {
            return Err(Error::Backend(failed.swap_remove(0).1));
        }
        if !failed.is_empty() {
            return Err(Error::PartialFailure { failed, total });
        }
        let mut meta = BTreeMap::new();
        meta.insert("backend".to_string(), self.backend.id().to_string());
        meta.insert("variant".to_string(), variant.kind.name().to_string());
        meta.insert("chunk_words".to_string(), chunk_words.to_string());
        meta.insert("chunks".to_string(), total.to_string());
        meta.insert(
            "hard_splits".to_string(),
            plan.chunks.iter().filter(|c| c.hard_split).count().to_string(),
        );
        meta.insert("temperature".to_string(), alloc::format!("{}", self.temperature));
        Ok(CandidateSummary {
            pair_id: record.id.clone(),
            method_id: self.method_id(variant.kind, chunk_words),
            text: outputs.join(CHUNK_SEPARATOR),
            chunk_targets: plan.chunks.iter().map(|c| c.target_words).collect(),
            backend_metadata: meta,
        })
    }

    /// Extracts up to [`HYBRID_EXTRACT_WORDS`] words with `extractor`, then
    /// asks for a whole-document-length summary of the extract.
    pub fn hybrid(&self, record: &CorpusRecord, extractor: &CaseSummarizer<'_>) -> Result<CandidateSummary> {
        let extract = extractor.summarize(&record.document_text, HYBRID_EXTRACT_WORDS)?;
        let doc_words = record.doc_words();
        let target = allocate_target_length(doc_words, record.summary_words(), doc_words, self.chunk_config.min_target_words);
        let prompt = render_prompt(&PromptKind::Summ.into(), &extract.text, Some(target))?;
        let req = self.request(prompt, target);
        let text = generate_with_retry(self.backend, &req, &self.retry, self.pause)?;
        let mut meta = BTreeMap::new();
        meta.insert("backend".to_string(), self.backend.id().to_string());
        meta.insert("variant".to_string(), PromptKind::Hybrid.name().to_string());
        meta.insert("extract_words".to_string(), word_count(&extract.text).to_string());
        meta.insert("extract_sentences".to_string(), extract.selected.len().to_string());
        meta.insert("temperature".to_string(), alloc::format!("{}", self.temperature));
        Ok(CandidateSummary {
            pair_id: record.id.clone(),
            method_id: self.method_id(PromptKind::Hybrid, 0),
            text: text.trim().to_string(),
            chunk_targets: alloc::vec![target],
            backend_metadata: meta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Source, Split};
    use crate::extractive::{BoostWeights, TfIdf};
    use crate::recognizers::BuiltinRecognizer;
    use alloc::format;
    use alloc::vec;
    use core::cell::{Cell, RefCell};
    use proptest::prelude::*;

    fn record(doc: &str, gold: &str) -> CorpusRecord {
        CorpusRecord::new("p1", doc, gold, Split::Test, Source::Generic).unwrap()
    }

    fn orch<'a>(backend: &'a dyn Generator, seg: &'a Segmenter) -> Orchestrator<'a> {
        Orchestrator {
            backend,
            segmenter: seg,
            chunk_config: ChunkConfig::default(),
            retry: RetryPolicy::default(),
            pause: &NoPause,
            temperature: 0.0,
        }
    }

    /// Fails the first `fail` calls with `err`, then answers "ok." and
    /// records every request.
    struct Flaky {
        fail: Cell<usize>,
        err: BackendError,
        seen: RefCell<Vec<GenerationRequest>>,
    }

    impl Generator for Flaky {
        fn id(&self) -> &str {
            "flaky"
        }
        fn generate(&self, r: &GenerationRequest) -> Result<String, BackendError> {
            self.seen.borrow_mut().push(r.clone());
            if self.fail.get() > 0 {
                self.fail.set(self.fail.get() - 1);
                return Err(self.err.clone());
            }
            Ok("ok.".into())
        }
    }

    struct Waits(RefCell<Vec<Duration>>);
    impl Pause for Waits {
        fn pause(&self, d: Duration) {
            self.0.borrow_mut().push(d);
        }
    }

    #[test]
    fn prompt_examples() {
        assert_eq!(render_prompt(&PromptKind::Summ.into(), "doc", Some(100)).unwrap(), "doc Summarize the document in 100 words");
        assert_eq!(render_prompt(&PromptKind::Tldr.into(), "doc", None).unwrap(), "doc Tl;Dr");
        let e = render_prompt(&PromptKind::Explicit.into(), "doc", Some(50)).unwrap();
        assert!(e.contains("at most 50 words") && e.ends_with("<doc>"));
        assert!(e.contains("given within <>."));
        let rh = render_prompt(&PromptKind::ReduceHallucination.into(), "doc", Some(50)).unwrap();
        assert!(rh.starts_with("Your task is to summarize the following document in at most 50 words. Output complete sentences"));
        assert!(rh.ends_with("<doc>"));
    }

    #[test]
    fn slot_errors() {
        let bad = PromptVariant { kind: PromptKind::Summ, template: "Summarize in <YY> words".into() };
        assert_eq!(render_prompt(&bad, "x", Some(5)), Err(Error::MissingSlot(TEXT_SLOT)));
        let bad = PromptVariant { kind: PromptKind::Summ, template: "<text> summarize".into() };
        assert_eq!(render_prompt(&bad, "x", Some(5)), Err(Error::MissingSlot(LENGTH_SLOT)));
        assert!(render_prompt(&PromptKind::Summ.into(), "x", Some(0)).is_err());
    }

    #[test]
    fn slot_markers_in_text_survive() {
        let p = render_prompt(&PromptKind::Summ.into(), "a <YY> b <text>", Some(7)).unwrap();
        assert_eq!(p, "a <YY> b <text> Summarize the document in 7 words");
    }

    #[test]
    fn variant_names_round_trip() {
        for k in PromptKind::ALL {
            assert_eq!(k.name().parse::<PromptKind>().unwrap(), k);
        }
        assert!("bogus".parse::<PromptKind>().is_err());
    }

    #[test]
    fn single_chunk_is_one_call() {
        let seg = Segmenter::default();
        let echo = EchoBackend::new(EchoMode::Echo);
        let rec = record("The appeal is dismissed.", "Dismissed.");
        let s = orch(&echo, &seg).summarize(&rec, &PromptKind::Tldr.into(), 1024).unwrap();
        assert_eq!(s.text, "The appeal is dismissed. Tl;Dr");
        assert_eq!(s.method_id, "echo-tldr-1024");
    }

    #[test]
    fn echo_preserves_chunk_order() {
        let seg = Segmenter::default();
        let echo = EchoBackend::new(EchoMode::Echo);
        let doc = (0..3).map(|i| format!("{}part{i}.", "w ".repeat(39))).collect::<Vec<_>>().join(" ");
        let rec = record(&doc, &"g ".repeat(30));
        let s = orch(&echo, &seg).summarize(&rec, &PromptKind::Summ.into(), 40).unwrap();
        let parts: Vec<&str> = s.text.split(CHUNK_SEPARATOR).collect();
        assert_eq!(parts.len(), 3);
        for (i, p) in parts.iter().enumerate() {
            assert!(p.contains(&format!("part{i}.")));
            assert!(p.ends_with(&format!("in {} words", s.chunk_targets[i])));
        }
    }

    #[test]
    fn max_tokens_follow_target() {
        let seg = Segmenter::default();
        let f = Flaky { fail: Cell::new(0), err: BackendError::EmptyResponse, seen: RefCell::new(vec![]) };
        let doc = "w ".repeat(100) + "end.";
        let rec = record(&doc, &"g ".repeat(45));
        let s = orch(&f, &seg).summarize(&rec, &PromptKind::Explicit.into(), 1024).unwrap();
        assert_eq!(s.chunk_targets, [45]);
        let seen = f.seen.borrow();
        assert_eq!(seen[0].max_response_tokens, 60);
        assert_eq!(seen[0].temperature, 0.0);
    }

    #[test]
    fn empty_response_is_a_failure() {
        struct Blank;
        impl Generator for Blank {
            fn id(&self) -> &str {
                "blank"
            }
            fn generate(&self, _: &GenerationRequest) -> Result<String, BackendError> {
                Ok("  ".into())
            }
        }
        let seg = Segmenter::default();
        let rec = record("Some text here.", "g");
        let r = orch(&Blank, &seg).summarize(&rec, &PromptKind::Summ.into(), 64);
        assert_eq!(r, Err(Error::Backend(BackendError::EmptyResponse)));
    }

    #[test]
    fn retries_then_succeeds_with_backoff() {
        let f = Flaky { fail: Cell::new(2), err: BackendError::Unavailable("down".into()), seen: RefCell::new(vec![]) };
        let waits = Waits(RefCell::new(vec![]));
        let req = GenerationRequest { prompt: "p".into(), max_response_tokens: 4, backend_id: "f".into(), temperature: 0.0 };
        assert_eq!(generate_with_retry(&f, &req, &RetryPolicy::default(), &waits).unwrap(), "ok.");
        assert_eq!(*waits.0.borrow(), [Duration::from_secs(1), Duration::from_secs(2)]);
    }

    #[test]
    fn retry_gives_up_and_honours_rate_limit() {
        let hint = Duration::from_millis(1500);
        let f = Flaky { fail: Cell::new(5), err: BackendError::RateLimited { retry_after: Some(hint) }, seen: RefCell::new(vec![]) };
        let waits = Waits(RefCell::new(vec![]));
        let req = GenerationRequest { prompt: "p".into(), max_response_tokens: 4, backend_id: "f".into(), temperature: 0.0 };
        assert!(generate_with_retry(&f, &req, &RetryPolicy::default(), &waits).is_err());
        assert_eq!(f.seen.borrow().len(), 3);
        assert_eq!(*waits.0.borrow(), [hint, hint]);

        let f = Flaky { fail: Cell::new(1), err: BackendError::Rejected("bad".into()), seen: RefCell::new(vec![]) };
        assert_eq!(generate_with_retry(&f, &req, &RetryPolicy::default(), &NoPause), Err(BackendError::Rejected("bad".into())));
        assert_eq!(f.seen.borrow().len(), 1);
    }

    #[test]
    fn partial_failure_names_chunks() {
        let seg = Segmenter::default();
        // first chunk exhausts its three attempts, second succeeds
        let f = Flaky { fail: Cell::new(3), err: BackendError::Unavailable("x".into()), seen: RefCell::new(vec![]) };
        let doc = format!("{}a. {}b.", "w ".repeat(39), "w ".repeat(39));
        let rec = record(&doc, "g g");
        match orch(&f, &seg).summarize(&rec, &PromptKind::Summ.into(), 40) {
            Err(Error::PartialFailure { failed, total }) => {
                assert_eq!(total, 2);
                assert_eq!(failed.iter().map(|(i, _)| *i).collect::<Vec<_>>(), [0]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncate_mock_keeps_whole_sentences() {
        let t = EchoBackend::new(EchoMode::Truncate);
        let req = |p: &str, tokens| GenerationRequest { prompt: p.into(), max_response_tokens: tokens, backend_id: "t".into(), temperature: 0.0 };
        assert_eq!(t.generate(&req("One two. Three four. Five.", 4)).unwrap(), "One two.");
        assert_eq!(t.generate(&req("One two three four five six.", 4)).unwrap(), "One two three");
    }

    #[test]
    fn hybrid_small_document_reduces_to_summ() {
        let seg = Segmenter::default();
        let rec_ = BuiltinRecognizer::default();
        let doc = "The appellant paid Rs 29,500. The Magistrate convicted him. The appeal is allowed.";
        let tfidf = TfIdf::build(&[doc]).unwrap();
        let cs = CaseSummarizer { tfidf: &tfidf, weights: BoostWeights::default(), segmenter: &seg, recognizer: &rec_ };
        let echo = EchoBackend::new(EchoMode::Echo);
        let rec = record(doc, "Appeal allowed.");
        let s = orch(&echo, &seg).hybrid(&rec, &cs).unwrap();
        let joined = doc.replace(". ", ".\n\n");
        assert_eq!(s.text, format!("{joined} Summarize the document in 30 words"));
        assert_eq!(s.method_id, "echo-hybrid");
    }

    proptest! {
        #[test]
        fn render_is_injective(a in ".{0,40}", b in ".{0,40}", k in 0usize..5) {
            let kind = PromptKind::ALL[k];
            let v: PromptVariant = kind.into();
            let yy = kind.uses_length().then_some(12);
            let (pa, pb) = (render_prompt(&v, &a, yy).unwrap(), render_prompt(&v, &b, yy).unwrap());
            prop_assert_eq!(a == b, pa == pb);
        }
    }
}
