//! Text embedding backends and cosine similarity.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::BackendError;

/// Maps texts to dense vectors. All vectors returned from one call share a
/// dimension.
pub trait Embedder {
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, BackendError>;
}

impl<T: Embedder + ?Sized> Embedder for &T {
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, BackendError> {
        (**self).embed(texts)
    }
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (f64::from(*x), f64::from(*y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (libm::sqrt(na) * libm::sqrt(nb))).clamp(-1.0, 1.0)
}

/// Hashed bag of character n-grams, L2-normalized.
///
/// Texts are lowercased and padded with `#` on both sides before windowing,
/// so short strings still yield at least one gram. Deterministic and free of
/// any model download; used as the hermetic similarity oracle.
#[derive(Debug, Clone, Copy)]
pub struct NgramEmbedder {
    pub n: usize,
    pub dim: usize,
}

impl Default for NgramEmbedder {
    fn default() -> Self {
        Self { n: 3, dim: 4096 }
    }
}

impl NgramEmbedder {
    pub fn vector(&self, text: &str) -> Vec<f32> {
        let mut padded: Vec<char> = vec!['#'];
        padded.extend(text.chars().flat_map(char::to_lowercase));
        padded.push('#');
        while padded.len() < self.n {
            padded.push('#');
        }
        let mut v = vec![0.0f32; self.dim];
        for gram in padded.windows(self.n) {
            v[(fnv1a(gram) % self.dim as u64) as usize] += 1.0;
        }
        let norm = libm::sqrtf(v.iter().map(|x| x * x).sum());
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

impl Embedder for NgramEmbedder {
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, BackendError> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}

fn fnv1a(chars: &[char]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for c in chars {
        for b in (*c as u32).to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// One orthogonal unit vector per distinct text within a call. Cosine is 1
/// for equal texts and 0 otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct OneHotEmbedder;

impl Embedder for OneHotEmbedder {
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, BackendError> {
        let mut vocab: BTreeMap<&str, usize> = BTreeMap::new();
        for t in texts {
            let next = vocab.len();
            vocab.entry(t).or_insert(next);
        }
        Ok(texts
            .iter()
            .map(|t| {
                let mut v = vec![0.0; vocab.len()];
                v[vocab[t]] = 1.0;
                v
            })
            .collect())
    }
}

/// Index of the candidate most similar to `query`; ties go to the earliest.
pub fn argmax_cosine(query: &[f32], candidates: &[Vec<f32>]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let s = cosine(query, c);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best
}
