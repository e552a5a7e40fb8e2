//! Sentence segmentation, word tokenization and n-gram counting.
//!
//! A *word* is a maximal run of non-whitespace characters after Unicode NFC
//! normalization. Offsets handed out by this module are byte offsets into the
//! text as given (not the normalized text), so `&text[span.start..span.end]`
//! is always valid.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use unicode_normalization::UnicodeNormalization;

/// Tokens that end in a period without ending a sentence.
pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "ms.", "dr.", "hon.", "v.", "vs.", "no.", "nos.", "rs.", "sec.", "art.", "cl.",
    "smt.", "sh.", "st.", "co.", "ltd.", "ors.", "anr.", "etc.", "viz.", "i.e.", "e.g.", "para.",
];

const CLOSERS: &[char] = &['"', '\'', ')', ']', '\u{201D}', '\u{2019}'];
const OPENERS: &[char] = &['"', '\'', '(', '[', '\u{201C}', '\u{2018}'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SentenceSpan {
    pub start: usize,
    pub end: usize,
    pub index: usize,
}

impl SentenceSpan {
    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

/// NFC-normalized copy of `text`.
pub fn normalize(text: &str) -> String {
    text.nfc().collect()
}

pub fn tokenize_words(text: &str) -> Vec<String> {
    normalize(text).split_whitespace().map(ToString::to_string).collect()
}

pub fn word_count(text: &str) -> usize {
    // NFC never introduces or removes whitespace.
    text.split_whitespace().count()
}

/// Byte spans of the whitespace-delimited words of `text`.
pub fn word_spans(text: &str) -> impl Iterator<Item = (usize, usize)> + '_ {
    let mut iter = text.char_indices().peekable();
    core::iter::from_fn(move || {
        while let Some(&(_, c)) = iter.peek() {
            if c.is_whitespace() {
                iter.next();
            } else {
                break;
            }
        }
        let (start, _) = *iter.peek()?;
        let mut end = start;
        while let Some(&(i, c)) = iter.peek() {
            if c.is_whitespace() {
                break;
            }
            end = i + c.len_utf8();
            iter.next();
        }
        Some((start, end))
    })
}

/// Lowercased words with leading/trailing punctuation removed; the token
/// stream used by the overlap metrics.
pub fn metric_tokens(text: &str) -> Vec<String> {
    tokenize_words(text)
        .into_iter()
        .filter_map(|w| {
            let t = w.trim_matches(|c: char| !c.is_alphanumeric());
            (!t.is_empty()).then(|| t.to_lowercase())
        })
        .collect()
}

pub type NgramCounts = BTreeMap<Vec<String>, usize>;

/// Multiset of lowercased n-grams over a sliding window.
///
/// # Panics
///
/// Panics if `n == 0`.
pub fn ngrams<S: AsRef<str>>(tokens: &[S], n: usize) -> NgramCounts {
    assert!(n >= 1, "n-gram order must be positive");
    let lowered: Vec<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let mut counts = NgramCounts::new();
    for window in lowered.windows(n) {
        *counts.entry(window.to_vec()).or_insert(0) += 1;
    }
    counts
}

/// Word estimate for a token budget: one token is about three quarters of a
/// word. Rounds half up.
pub fn words_from_tokens(token_count: usize) -> usize {
    (3 * token_count + 2) / 4
}

/// Smallest token budget that covers `words` words, i.e. `ceil(words / 0.75)`.
pub fn tokens_for_words(words: usize) -> usize {
    (4 * words).div_ceil(3)
}

/// Parses an abbreviation list: one token per line, blank lines and lines
/// starting with `#` ignored.
pub fn parse_abbreviations(list: &str) -> Vec<String> {
    list.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// Rule-based sentence splitter tuned for legal prose.
#[derive(Debug, Clone)]
pub struct Segmenter {
    abbreviations: BTreeSet<String>,
}

impl Default for Segmenter {
    fn default() -> Self {
        Self::with_abbreviations(DEFAULT_ABBREVIATIONS.iter().copied())
    }
}

impl Segmenter {
    pub fn with_abbreviations<I, S>(abbreviations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            abbreviations: abbreviations
                .into_iter()
                .map(|a| a.as_ref().trim().to_lowercase())
                .filter(|a| !a.is_empty())
                .collect(),
        }
    }

    pub fn is_abbreviation(&self, word: &str) -> bool {
        let core = word.trim_start_matches(OPENERS);
        is_initials(core) || self.abbreviations.contains(&core.to_lowercase())
    }

    /// Whether `word` closes a sentence when followed by more text.
    pub fn ends_sentence(&self, word: &str) -> bool {
        let core = word.trim_end_matches(CLOSERS);
        match core.chars().last() {
            Some('?') | Some('!') => true,
            Some('.') => !self.is_abbreviation(core),
            _ => false,
        }
    }

    pub fn split(&self, text: &str) -> Vec<SentenceSpan> {
        let words: Vec<(usize, usize)> = word_spans(text).collect();
        let mut spans = Vec::new();
        let mut start = None;
        for (i, &(ws, we)) in words.iter().enumerate() {
            let s = *start.get_or_insert(ws);
            let boundary = match words.get(i + 1) {
                None => true,
                Some(&(next, _)) => {
                    self.ends_sentence(&text[ws..we]) || has_blank_line(&text[we..next])
                }
            };
            if boundary {
                spans.push(SentenceSpan {
                    start: s,
                    end: we,
                    index: spans.len(),
                });
                start = None;
            }
        }
        spans
    }

    pub fn sentences<'a>(&self, text: &'a str) -> Vec<&'a str> {
        self.split(text).iter().map(|s| s.slice(text)).collect()
    }
}

/// Splits with the default abbreviation list.
pub fn split_sentences(text: &str) -> Vec<SentenceSpan> {
    Segmenter::default().split(text)
}

/// `A.`, `N.`, `W.H.`: one or more single uppercase letters each followed by a period.
fn is_initials(word: &str) -> bool {
    let mut chars = word.chars();
    let mut seen = false;
    loop {
        match (chars.next(), chars.next()) {
            (None, _) => return seen,
            (Some(c), Some('.')) if c.is_uppercase() => seen = true,
            _ => return false,
        }
    }
}

fn has_blank_line(gap: &str) -> bool {
    gap.matches('\n').count() >= 2
}
