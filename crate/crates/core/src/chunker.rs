//! Splitting long documents into sentence-aligned chunks and assigning each
//! chunk a proportional share of the summary length.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::textproc::{word_count, word_spans, Segmenter};

/// Smallest chunk size accepted by [`plan_chunks`].
pub const MIN_CHUNK_WORDS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkConfig {
    /// Lower bound on a chunk's summary length in words.
    pub min_target_words: usize,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self { min_target_words: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chunk {
    pub text: String,
    pub word_count: usize,
    pub target_words: usize,
    /// Set when a sentence longer than the chunk size had to be cut at a word
    /// boundary.
    pub hard_split: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkPlan {
    pub chunk_size_words: usize,
    pub document_words: usize,
    pub gold_words: usize,
    pub chunks: Vec<Chunk>,
}

impl ChunkPlan {
    pub fn total_target_words(&self) -> usize {
        self.chunks.iter().map(|c| c.target_words).sum()
    }
}

/// Summary words for a chunk of `chunk_words` taken from a document of
/// `doc_words` whose gold summary has `gold_words`. Rounds to nearest, ties
/// up, then applies the floor.
pub fn allocate_target_length(doc_words: usize, gold_words: usize, chunk_words: usize, min_target_words: usize) -> usize {
    if doc_words == 0 {
        return min_target_words;
    }
    let (d, g, c) = (doc_words as u128, gold_words as u128, chunk_words as u128);
    let rounded = (2 * c * g + d) / (2 * d);
    (rounded as usize).max(min_target_words)
}

/// Greedily packs whole sentences into chunks of at most `chunk_words` words.
/// A sentence longer than `chunk_words` is emitted as consecutive
/// `chunk_words`-word pieces flagged `hard_split`.
pub fn plan_chunks(
    document: &str,
    chunk_words: usize,
    gold_words: usize,
    config: &ChunkConfig,
    segmenter: &Segmenter,
) -> Result<ChunkPlan> {
    if chunk_words < MIN_CHUNK_WORDS {
        return Err(Error::InvalidArgument(alloc::format!(
            "chunk size {chunk_words} is below the minimum of {MIN_CHUNK_WORDS} words"
        )));
    }
    if gold_words == 0 {
        return Err(Error::InvalidArgument("gold summary length must be at least one word".into()));
    }
    let doc_words = word_count(document);
    if doc_words == 0 {
        return Err(Error::EmptyInput("document"));
    }

    let mut pieces: Vec<(usize, usize, usize, bool)> = Vec::new(); // start, end, words, hard
    let mut cur: Option<(usize, usize, usize)> = None;
    if doc_words <= chunk_words {
        let spans: Vec<_> = word_spans(document).collect();
        cur = Some((spans[0].0, spans[spans.len() - 1].1, doc_words));
    } else {
        for sent in segmenter.split(document) {
            let text = sent.slice(document);
            let n = word_count(text);
            if n > chunk_words {
                if let Some((s, e, w)) = cur.take() {
                    pieces.push((s, e, w, false));
                }
                let spans: Vec<_> = word_spans(text).collect();
                for part in spans.chunks(chunk_words) {
                    let (s, e) = (sent.start + part[0].0, sent.start + part[part.len() - 1].1);
                    pieces.push((s, e, part.len(), true));
                }
                continue;
            }
            cur = match cur {
                Some((s, _, w)) if w + n <= chunk_words => Some((s, sent.end, w + n)),
                Some((s, e, w)) => {
                    pieces.push((s, e, w, false));
                    Some((sent.start, sent.end, n))
                }
                None => Some((sent.start, sent.end, n)),
            };
        }
    }
    if let Some((s, e, w)) = cur {
        pieces.push((s, e, w, false));
    }

    let chunks = pieces
        .into_iter()
        .map(|(s, e, w, hard)| Chunk {
            text: String::from(&document[s..e]),
            word_count: w,
            target_words: allocate_target_length(doc_words, gold_words, w, config.min_target_words),
            hard_split: hard,
        })
        .collect();
    Ok(ChunkPlan { chunk_size_words: chunk_words, document_words: doc_words, gold_words, chunks })
}
