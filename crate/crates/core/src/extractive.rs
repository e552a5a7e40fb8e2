//! TF-IDF sentence extraction with date, entity and heading boosts, and the
//! ROUGE-based sentence labels used to supervise extractive models.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::metrics::rouge2;
use crate::recognizers::{contains_date, Recognizer};
use crate::textproc::{metric_tokens, word_count, SentenceSpan, Segmenter};

const STOP_WORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just",
    "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once",
    "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "same", "shall",
    "she", "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "upon", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
];

pub fn is_stop_word(term: &str) -> bool {
    STOP_WORDS.binary_search(&term).is_ok()
}

/// Lowercased content terms of `text`.
pub fn terms(text: &str) -> Vec<String> {
    metric_tokens(text).into_iter().filter(|t| !is_stop_word(t)).collect()
}

/// Document frequencies over a corpus; immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdf {
    n_documents: usize,
    df: BTreeMap<String, usize>,
}

impl TfIdf {
    pub fn build<S: AsRef<str>>(documents: &[S]) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::EmptyInput("tf-idf corpus"));
        }
        let mut df = BTreeMap::new();
        for doc in documents {
            let seen: BTreeSet<String> = terms(doc.as_ref()).into_iter().collect();
            for t in seen {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        Ok(Self { n_documents: documents.len(), df })
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.df.get(term).copied().unwrap_or(0)
    }

    /// `ln(N / df)`. Terms never seen in the corpus are treated as occurring
    /// in one document.
    pub fn idf(&self, term: &str) -> f64 {
        let df = self.document_frequency(term).max(1);
        libm::log(self.n_documents as f64 / df as f64)
    }

    /// Mean TF-IDF over the distinct terms of `sentence`, with term frequency
    /// counted inside the sentence. Zero for a sentence with no terms.
    pub fn sentence_score(&self, sentence: &str) -> f64 {
        let mut tf: BTreeMap<String, usize> = BTreeMap::new();
        for t in terms(sentence) {
            *tf.entry(t).or_insert(0) += 1;
        }
        if tf.is_empty() {
            return 0.0;
        }
        tf.iter().map(|(t, &n)| n as f64 * self.idf(t)).sum::<f64>() / tf.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostWeights {
    pub date: f64,
    pub entity: f64,
    pub heading: f64,
    /// Sentences up to this many positions after a heading receive the
    /// heading boost.
    pub heading_window: usize,
}

impl Default for BoostWeights {
    fn default() -> Self {
        Self { date: 0.2, entity: 0.2, heading: 0.1, heading_window: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentenceScore {
    pub sentence_index: usize,
    /// Min-max normalized over the document.
    pub base_tfidf: f64,
    pub date_boost: f64,
    pub entity_boost: f64,
    pub heading_boost: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractiveSummary {
    /// Selected sentences verbatim, in document order, separated by a blank
    /// line.
    pub text: String,
    pub selected: Vec<usize>,
    pub scores: Vec<SentenceScore>,
}

/// Whether a single line looks like a section heading.
pub fn is_heading(line: &str) -> bool {
    let line = line.trim();
    let words: Vec<&str> = line.split_whitespace().collect();
    if words.is_empty() || words.len() >= 6 {
        return false;
    }
    if is_section_marker(words[0]) {
        return true;
    }
    let letters: Vec<char> = line.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.is_empty() {
        return false;
    }
    let all_caps = letters.iter().all(|c| c.is_uppercase());
    let title = words.iter().all(|w| {
        let core = w.trim_matches(|c: char| !c.is_alphanumeric());
        core.is_empty()
            || core.chars().next().is_some_and(|c| c.is_uppercase() || c.is_ascii_digit())
            || is_stop_word(core)
    });
    let ends_like_prose = line.ends_with(['.', ',', ';']) && !all_caps;
    (all_caps || title) && !ends_like_prose
}

/// `1.`, `2)`, `IV.`, `(a)`, `12.3` and similar.
fn is_section_marker(word: &str) -> bool {
    let inner = word.trim_start_matches('(').trim_end_matches(['.', ')']);
    if inner.is_empty() || inner.len() == word.len() && !word.contains('.') {
        return false;
    }
    let numeric = inner.split('.').all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()));
    let roman = inner.len() <= 5 && inner.chars().all(|c| "IVXLC".contains(c));
    let letter = word.starts_with('(') && inner.len() == 1 && inner.chars().all(|c| c.is_ascii_lowercase());
    numeric || roman || letter
}

/// Sentence indices whose text starts on a heading line.
fn heading_sentences(document: &str, spans: &[SentenceSpan]) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut offset = 0;
    for line in document.split_inclusive('\n') {
        let (start, end) = (offset, offset + line.len());
        offset = end;
        if !is_heading(line) {
            continue;
        }
        let first_word = start + (line.len() - line.trim_start().len());
        if let Some(s) = spans.iter().find(|s| s.start <= first_word && first_word < s.end.max(s.start + 1)) {
            out.insert(s.index);
        }
    }
    out
}

pub struct CaseSummarizer<'a> {
    pub tfidf: &'a TfIdf,
    pub weights: BoostWeights,
    pub segmenter: &'a Segmenter,
    pub recognizer: &'a dyn Recognizer,
}

impl CaseSummarizer<'_> {
    pub fn score(&self, document: &str) -> Result<(Vec<SentenceSpan>, Vec<SentenceScore>)> {
        let spans = self.segmenter.split(document);
        if spans.is_empty() {
            return Err(Error::EmptyInput("document"));
        }
        let raw: Vec<f64> = spans.iter().map(|s| self.tfidf.sentence_score(s.slice(document))).collect();
        let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let headings = heading_sentences(document, &spans);
        let w = self.weights;
        let mut scores = Vec::with_capacity(spans.len());
        for (i, s) in spans.iter().enumerate() {
            let text = s.slice(document);
            let base = if hi > lo { (raw[i] - lo) / (hi - lo) } else { 0.0 };
            let date_boost = if contains_date(text) { w.date } else { 0.0 };
            let entity_boost = if self.recognizer.entities(text)?.is_empty() { 0.0 } else { w.entity };
            let near_heading = headings.range(i.saturating_sub(w.heading_window)..=i).next().is_some();
            let heading_boost = if near_heading { w.heading } else { 0.0 };
            scores.push(SentenceScore {
                sentence_index: i,
                base_tfidf: base,
                date_boost,
                entity_boost,
                heading_boost,
                total: base + date_boost + entity_boost + heading_boost,
            });
        }
        Ok((spans, scores))
    }

    /// Picks sentences by descending score (earlier wins ties) until the next
    /// one would overflow `budget_words`. The top sentence is always taken.
    pub fn summarize(&self, document: &str, budget_words: usize) -> Result<ExtractiveSummary> {
        if budget_words == 0 {
            return Err(Error::InvalidArgument("budget must be at least one word".into()));
        }
        let (spans, scores) = self.score(document)?;
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total.total_cmp(&scores[a].total).then(a.cmp(&b)));
        let mut selected = Vec::new();
        let mut used = 0;
        for i in order {
            let n = word_count(spans[i].slice(document));
            if !selected.is_empty() && used + n > budget_words {
                break;
            }
            selected.push(i);
            used += n;
        }
        selected.sort_unstable();
        let text = selected.iter().map(|&i| spans[i].slice(document)).collect::<Vec<_>>().join("\n\n");
        Ok(ExtractiveSummary { text, selected, scores })
    }
}

/// For every gold sentence, the (up to) three document sentences with the
/// highest ROUGE-2 F1, unioned. Sentences with no bigram overlap are never
/// labelled. Ties go to the earlier document sentence.
pub fn pseudo_extractive_labels<S: AsRef<str>, T: AsRef<str>>(
    document_sentences: &[S],
    gold_sentences: &[T],
) -> Result<BTreeSet<usize>> {
    if document_sentences.is_empty() {
        return Err(Error::EmptyInput("document sentences"));
    }
    if gold_sentences.is_empty() {
        return Err(Error::EmptyInput("gold sentences"));
    }
    let mut labels = BTreeSet::new();
    for gold in gold_sentences {
        let mut scored: Vec<(usize, f64)> = document_sentences
            .iter()
            .enumerate()
            .map(|(i, d)| (i, rouge2(d.as_ref(), gold.as_ref()).f1))
            .filter(|(_, f)| *f > 0.0)
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        labels.extend(scored.into_iter().take(3).map(|(i, _)| i));
    }
    Ok(labels)
}
