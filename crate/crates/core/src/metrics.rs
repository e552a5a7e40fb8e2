//! Summary quality and consistency metrics.
//!
//! Overlap metrics (ROUGE-2, ROUGE-L, METEOR) use [`metric_tokens`]: lowercased
//! words with edge punctuation removed, no stemming and no stop-word filter.
//! The embedding and NLI metrics delegate to pluggable backends.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::embedding::{cosine, Embedder};
use crate::error::{BackendError, Error, Result};
use crate::recognizers::{EntityMention, Recognizer};
use crate::stem::porter_stem;
use crate::textproc::{metric_tokens, Segmenter};

/// Precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        Self {
            precision,
            recall,
            f1: harmonic_mean(precision, recall),
        }
    }

    /// `overlap / candidate_total` and `overlap / reference_total`, with empty
    /// denominators scoring zero.
    pub fn from_counts(overlap: usize, candidate_total: usize, reference_total: usize) -> Self {
        let ratio = |den: usize| if den == 0 { 0.0 } else { overlap as f64 / den as f64 };
        Self::new(ratio(candidate_total), ratio(reference_total))
    }
}

pub fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p <= 0.0 || r <= 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Maps the tokens of two texts onto a shared integer vocabulary.
pub fn intern_pair(candidate: &[String], reference: &[String]) -> (Vec<u32>, Vec<u32>) {
    let mut vocab: BTreeMap<&str, u32> = BTreeMap::new();
    let mut ids = [Vec::with_capacity(candidate.len()), Vec::with_capacity(reference.len())];
    for (side, toks) in [candidate, reference].into_iter().enumerate() {
        for t in toks {
            let next = vocab.len() as u32;
            ids[side].push(*vocab.entry(t.as_str()).or_insert(next));
        }
    }
    let [c, r] = ids;
    (c, r)
}

/// Multiset n-gram overlap on interned tokens.
pub fn rouge_n_ids(candidate: &[u32], reference: &[u32], n: usize) -> Prf {
    assert!(n >= 1, "n-gram order must be positive");
    const INLINE: usize = 64;
    let (cn, rn) = (candidate.len().saturating_sub(n - 1), reference.len().saturating_sub(n - 1));
    let overlap = if n <= 2 && cn <= INLINE && rn <= INLINE {
        // pack each gram into one integer
        let key = |w: &[u32]| w.iter().fold(0u64, |k, &t| (k << 32) | t as u64);
        let mut c = [0u64; INLINE];
        let mut r = [0u64; INLINE];
        for (slot, w) in c.iter_mut().zip(candidate.windows(n)) {
            *slot = key(w);
        }
        for (slot, w) in r.iter_mut().zip(reference.windows(n)) {
            *slot = key(w);
        }
        // multiset intersection by greedy matching against unused grams
        let mut used = 0u64;
        let mut overlap = 0;
        for &k in &c[..cn] {
            let mut free = !used & if rn == 64 { u64::MAX } else { (1u64 << rn) - 1 };
            while free != 0 {
                let j = free.trailing_zeros() as usize;
                if r[j] == k {
                    used |= 1 << j;
                    overlap += 1;
                    break;
                }
                free &= free - 1;
            }
        }
        overlap
    } else if cn <= INLINE && rn <= INLINE {
        let mut c: [&[u32]; INLINE] = [&[]; INLINE];
        let mut r: [&[u32]; INLINE] = [&[]; INLINE];
        for (slot, w) in c.iter_mut().zip(candidate.windows(n)) {
            *slot = w;
        }
        for (slot, w) in r.iter_mut().zip(reference.windows(n)) {
            *slot = w;
        }
        sorted_overlap(&mut c[..cn], &mut r[..rn])
    } else {
        let mut c: Vec<&[u32]> = candidate.windows(n).collect();
        let mut r: Vec<&[u32]> = reference.windows(n).collect();
        sorted_overlap(&mut c, &mut r)
    };
    Prf::from_counts(overlap, cn, rn)
}

fn sorted_overlap<T: Ord>(c: &mut [T], r: &mut [T]) -> usize {
    c.sort_unstable();
    r.sort_unstable();
    let (mut i, mut j, mut overlap) = (0, 0, 0);
    while i < c.len() && j < r.len() {
        match c[i].cmp(&r[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                overlap += 1;
                i += 1;
                j += 1;
            }
        }
    }
    overlap
}

/// Length of the longest common subsequence, two-row dynamic program.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Bit-parallel LCS length for a reference of at most 64 tokens.
fn lcs_len_bits(a: &[u32], b: &[u32]) -> usize {
    debug_assert!(b.len() <= 64);
    let mask = if b.len() == 64 { u64::MAX } else { (1u64 << b.len()) - 1 };
    let mut v = u64::MAX;
    for &x in a {
        let mut m = 0u64;
        for (j, &y) in b.iter().enumerate() {
            m |= ((x == y) as u64) << j;
        }
        let u = v & m;
        v = v.wrapping_add(u) | (v & !m);
    }
    (!v & mask).count_ones() as usize
}

pub fn rouge_l_ids(candidate: &[u32], reference: &[u32]) -> Prf {
    let lcs = if reference.len() <= 64 {
        lcs_len_bits(candidate, reference)
    } else {
        lcs_len(candidate, reference)
    };
    Prf::from_counts(lcs, candidate.len(), reference.len())
}

pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> Prf {
    let (c, r) = intern_pair(&metric_tokens(candidate), &metric_tokens(reference));
    rouge_n_ids(&c, &r, n)
}

pub fn rouge2(candidate: &str, reference: &str) -> Prf {
    rouge_n(candidate, reference, 2)
}

pub fn rouge_l(candidate: &str, reference: &str) -> Prf {
    let (c, r) = intern_pair(&metric_tokens(candidate), &metric_tokens(reference));
    rouge_l_ids(&c, &r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeteorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for MeteorParams {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            beta: 3.0,
            gamma: 0.5,
        }
    }
}

pub fn meteor(candidate: &str, reference: &str) -> f64 {
    meteor_with(candidate, reference, MeteorParams::default())
}

/// METEOR with exact-then-stem unigram alignment.
pub fn meteor_with(candidate: &str, reference: &str, params: MeteorParams) -> f64 {
    let cand = metric_tokens(candidate);
    let refr = metric_tokens(reference);
    meteor_tokens(&cand, &refr, params)
}

pub fn meteor_tokens(cand: &[String], refr: &[String], params: MeteorParams) -> f64 {
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }
    // alignment[i] = reference position matched to candidate position i
    let mut alignment: Vec<Option<usize>> = vec![None; cand.len()];
    let mut ref_used = vec![false; refr.len()];
    align_stage(cand, refr, &mut alignment, &mut ref_used, |w| w.clone());
    align_stage(cand, refr, &mut alignment, &mut ref_used, |w| porter_stem(w));

    let matched: Vec<usize> = alignment.iter().flatten().copied().collect();
    let m = matched.len();
    if m == 0 {
        return 0.0;
    }
    let precision = m as f64 / cand.len() as f64;
    let recall = m as f64 / refr.len() as f64;
    let fmean = precision * recall / (params.alpha * precision + (1.0 - params.alpha) * recall);
    let chunks = 1 + matched.windows(2).filter(|w| w[1] != w[0] + 1).count();
    let penalty = params.gamma * libm::pow(chunks as f64 / m as f64, params.beta);
    fmean * (1.0 - penalty)
}

fn align_stage(
    cand: &[String],
    refr: &[String],
    alignment: &mut [Option<usize>],
    ref_used: &mut [bool],
    form: impl Fn(&String) -> String,
) {
    let ref_forms: Vec<String> = refr.iter().map(&form).collect();
    for (i, w) in cand.iter().enumerate() {
        if alignment[i].is_some() {
            continue;
        }
        let f = form(w);
        if let Some(j) = (0..refr.len()).find(|&j| !ref_used[j] && ref_forms[j] == f) {
            alignment[i] = Some(j);
            ref_used[j] = true;
        }
    }
}

/// Greedy max-cosine token matching in both directions, no IDF weighting
/// and no baseline rescaling. Negative similarities count as zero.
pub fn bertscore(candidate: &str, reference: &str, embedder: &dyn Embedder) -> Result<Prf> {
    let cand = metric_tokens(candidate);
    let refr = metric_tokens(reference);
    if cand.is_empty() || refr.is_empty() {
        return Ok(Prf::default());
    }
    let texts: Vec<&str> = cand.iter().chain(refr.iter()).map(String::as_str).collect();
    let vectors = embedder.embed(&texts)?;
    if vectors.len() != texts.len() {
        return Err(BackendError::Malformed(alloc::format!(
            "expected {} vectors, got {}",
            texts.len(),
            vectors.len()
        ))
        .into());
    }
    let (cv, rv) = vectors.split_at(cand.len());
    let sims: Vec<Vec<f64>> = cv.iter().map(|c| rv.iter().map(|r| cosine(c, r)).collect()).collect();
    let precision = sims
        .iter()
        .map(|row| row.iter().copied().fold(f64::MIN, f64::max).max(0.0))
        .sum::<f64>()
        / cand.len() as f64;
    let recall = (0..refr.len())
        .map(|j| sims.iter().map(|row| row[j]).fold(f64::MIN, f64::max).max(0.0))
        .sum::<f64>()
        / refr.len() as f64;
    Ok(Prf::new(precision.min(1.0), recall.min(1.0)))
}

/// Class probabilities for a premise/hypothesis pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NliScores {
    pub entail: f64,
    pub neutral: f64,
    pub contradict: f64,
}

pub trait Nli {
    fn classify(&self, premise: &str, hypothesis: &str) -> Result<NliScores, BackendError>;
}

impl<T: Nli + ?Sized> Nli for &T {
    fn classify(&self, premise: &str, hypothesis: &str) -> Result<NliScores, BackendError> {
        (**self).classify(premise, hypothesis)
    }
}

/// Entails with probability 1 exactly when the hypothesis equals the premise
/// (ignoring surrounding whitespace), otherwise neutral.
#[derive(Debug, Clone, Copy, Default)]
pub struct VerbatimNli;

impl Nli for VerbatimNli {
    fn classify(&self, premise: &str, hypothesis: &str) -> Result<NliScores, BackendError> {
        let entail = if premise.trim() == hypothesis.trim() { 1.0 } else { 0.0 };
        Ok(NliScores {
            entail,
            neutral: 1.0 - entail,
            contradict: 0.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SummacAggregation {
    #[default]
    Mean,
    Min,
}

impl FromStr for SummacAggregation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Self::Mean),
            "min" => Ok(Self::Min),
            other => Err(Error::InvalidArgument(alloc::format!("unknown aggregation {other:?}"))),
        }
    }
}

/// For each summary sentence, the highest entailment probability over all
/// document sentences.
pub fn summac_sentence_scores(
    document: &str,
    summary: &str,
    nli: &dyn Nli,
    segmenter: &Segmenter,
) -> Result<Vec<f64>> {
    let premises = segmenter.sentences(document);
    segmenter
        .sentences(summary)
        .into_iter()
        .map(|hyp| {
            let mut best = 0.0f64;
            for p in &premises {
                best = best.max(nli.classify(p, hyp)?.entail);
                if best >= 1.0 {
                    break;
                }
            }
            Ok(best)
        })
        .collect()
}

/// Zero-shot SummaC. A summary without sentences scores 1.
pub fn summac(
    document: &str,
    summary: &str,
    nli: &dyn Nli,
    segmenter: &Segmenter,
    aggregation: SummacAggregation,
) -> Result<f64> {
    let scores = summac_sentence_scores(document, summary, nli, segmenter)?;
    if scores.is_empty() {
        return Ok(1.0);
    }
    Ok(match aggregation {
        SummacAggregation::Mean => scores.iter().sum::<f64>() / scores.len() as f64,
        SummacAggregation::Min => scores.iter().copied().fold(1.0, f64::min),
    })
}

fn keys(mentions: &[EntityMention]) -> BTreeSet<String> {
    mentions.iter().map(EntityMention::key).collect()
}

/// Fraction of distinct summary keys also present in the document; 1 when
/// the summary has none.
fn mention_precision(document: &[EntityMention], summary: &[EntityMention]) -> f64 {
    let s = keys(summary);
    if s.is_empty() {
        return 1.0;
    }
    let d = keys(document);
    s.intersection(&d).count() as f64 / s.len() as f64
}

pub fn neprec(document: &str, summary: &str, recognizer: &dyn Recognizer) -> Result<f64> {
    Ok(mention_precision(&recognizer.entities(document)?, &recognizer.entities(summary)?))
}

pub fn numprec(document: &str, summary: &str, recognizer: &dyn Recognizer) -> f64 {
    mention_precision(&recognizer.numbers(document), &recognizer.numbers(summary))
}

/// Summary mentions whose key does not occur in the document, first
/// occurrence per key, in summary order.
pub fn unmatched(document: &[EntityMention], summary: &[EntityMention]) -> Vec<EntityMention> {
    let d = keys(document);
    let mut seen = BTreeSet::new();
    summary
        .iter()
        .filter(|m| !d.contains(&m.key()) && seen.insert(m.key()))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlaggedSentence {
    pub index: usize,
    pub text: String,
    pub nli_score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditReport {
    pub flagged_sentences: Vec<FlaggedSentence>,
    pub unmatched_entities: Vec<EntityMention>,
    pub unmatched_numbers: Vec<EntityMention>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.flagged_sentences.is_empty()
            && self.unmatched_entities.is_empty()
            && self.unmatched_numbers.is_empty()
    }
}

pub const DEFAULT_NLI_THRESHOLD: f64 = 0.5;

/// Flags summary sentences whose best entailment is below `threshold` and
/// lists entities/numbers that cannot be found in the document.
pub fn audit(
    document: &str,
    summary: &str,
    recognizer: &dyn Recognizer,
    nli: &dyn Nli,
    segmenter: &Segmenter,
    threshold: f64,
) -> Result<AuditReport> {
    let scores = summac_sentence_scores(document, summary, nli, segmenter)?;
    let sentences = segmenter.sentences(summary);
    let flagged_sentences = scores
        .iter()
        .zip(sentences)
        .enumerate()
        .filter(|(_, (s, _))| **s < threshold)
        .map(|(index, (s, text))| FlaggedSentence {
            index,
            text: String::from(text),
            nli_score: *s,
        })
        .collect();
    Ok(AuditReport {
        flagged_sentences,
        unmatched_entities: unmatched(&recognizer.entities(document)?, &recognizer.entities(summary)?),
        unmatched_numbers: unmatched(&recognizer.numbers(document), &recognizer.numbers(summary)),
    })
}

/// Report columns, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Rouge2P,
    Rouge2R,
    Rouge2F1,
    RougeLP,
    RougeLR,
    RougeLF1,
    Meteor,
    BertScore,
    SummaC,
    NePrec,
    NumPrec,
}

impl Metric {
    pub const ALL: [Metric; 11] = [
        Metric::Rouge2P,
        Metric::Rouge2R,
        Metric::Rouge2F1,
        Metric::RougeLP,
        Metric::RougeLR,
        Metric::RougeLF1,
        Metric::Meteor,
        Metric::BertScore,
        Metric::SummaC,
        Metric::NePrec,
        Metric::NumPrec,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Rouge2P => "r2_p",
            Metric::Rouge2R => "r2_r",
            Metric::Rouge2F1 => "r2_f1",
            Metric::RougeLP => "rl_p",
            Metric::RougeLR => "rl_r",
            Metric::RougeLF1 => "rl_f1",
            Metric::Meteor => "meteor",
            Metric::BertScore => "bertscore",
            Metric::SummaC => "summac",
            Metric::NePrec => "neprec",
            Metric::NumPrec => "numprec",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown metric {s:?}")))
    }
}

/// Metric values for one (pair, method); absent metrics were not requested.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricReport {
    pub pair_id: String,
    pub method_id: String,
    pub values: BTreeMap<Metric, f64>,
}

impl MetricReport {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        self.values.get(&metric).copied()
    }
}

/// Backends and settings for [`Evaluator::evaluate`].
pub struct Evaluator<'a> {
    pub recognizer: &'a dyn Recognizer,
    pub embedder: &'a dyn Embedder,
    pub nli: &'a dyn Nli,
    pub segmenter: Segmenter,
    pub aggregation: SummacAggregation,
}

impl Evaluator<'_> {
    pub fn evaluate(
        &self,
        pair_id: &str,
        method_id: &str,
        document: &str,
        gold: &str,
        candidate: &str,
        metrics: &BTreeSet<Metric>,
    ) -> Result<MetricReport> {
        let wants = |ms: &[Metric]| ms.iter().any(|m| metrics.contains(m));
        let mut values = BTreeMap::new();
        if wants(&[Metric::Rouge2P, Metric::Rouge2R, Metric::Rouge2F1]) {
            let s = rouge2(candidate, gold);
            values.insert(Metric::Rouge2P, s.precision);
            values.insert(Metric::Rouge2R, s.recall);
            values.insert(Metric::Rouge2F1, s.f1);
        }
        if wants(&[Metric::RougeLP, Metric::RougeLR, Metric::RougeLF1]) {
            let s = rouge_l(candidate, gold);
            values.insert(Metric::RougeLP, s.precision);
            values.insert(Metric::RougeLR, s.recall);
            values.insert(Metric::RougeLF1, s.f1);
        }
        if wants(&[Metric::Meteor]) {
            values.insert(Metric::Meteor, meteor(candidate, gold));
        }
        if wants(&[Metric::BertScore]) {
            values.insert(Metric::BertScore, bertscore(candidate, gold, self.embedder)?.f1);
        }
        if wants(&[Metric::SummaC]) {
            let s = summac(document, candidate, self.nli, &self.segmenter, self.aggregation)?;
            values.insert(Metric::SummaC, s);
        }
        if wants(&[Metric::NePrec]) {
            values.insert(Metric::NePrec, neprec(document, candidate, self.recognizer)?);
        }
        if wants(&[Metric::NumPrec]) {
            values.insert(Metric::NumPrec, numprec(document, candidate, self.recognizer));
        }
        values.retain(|m, _| metrics.contains(m));
        Ok(MetricReport {
            pair_id: pair_id.into(),
            method_id: method_id.into(),
            values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{NgramEmbedder, OneHotEmbedder};
    use crate::recognizers::BuiltinRecognizer;
    use proptest::prelude::*;

    const EPS: f64 = 1e-12;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < EPS
    }

    #[test]
    fn rouge2_examples() {
        let s = rouge2("the appeal was dismissed", "the appeal was dismissed");
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        assert_eq!(rouge2("a b c", "x y z"), Prf::default());
        let s = rouge2("a b c", "a b d");
        assert!(close(s.precision, 0.5) && close(s.recall, 0.5) && close(s.f1, 0.5));
    }

    #[test]
    fn rouge2_multiset_and_case() {
        // cand bigrams {a a ×2}, ref {a a ×1, a b}
        let s = rouge2("A a a", "a a b");
        assert!(close(s.precision, 0.5) && close(s.recall, 0.5));
    }

    #[test]
    fn rouge_l_examples() {
        let s = rouge_l("a b c", "a b c");
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        let s = rouge_l("a x b", "a b");
        assert!(close(s.precision, 2.0 / 3.0) && close(s.recall, 1.0));
        assert!(close(s.f1, 0.8));
        assert_eq!(rouge_l("", "a b"), Prf::default());
    }

    #[test]
    fn meteor_examples() {
        let t = "the appellant was convicted under the penal code";
        let identical = meteor(t, t);
        // one chunk of 8 matches: (1 - 0.5 * (1/8)^3)
        assert!((identical - (1.0 - 0.5 / 512.0)).abs() < 1e-12);
        assert!(identical >= 0.99);
        assert_eq!(meteor("alpha beta", "gamma delta"), 0.0);
        let reversed: Vec<&str> = t.split(' ').rev().collect();
        assert!(meteor(&reversed.join(" "), t) < identical);
    }

    #[test]
    fn meteor_stem_stage() {
        // "convictions" ~ "conviction" only after stemming
        let exact = meteor("the conviction stands", "the conviction stands");
        let stemmed = meteor("the convictions stands", "the conviction stands");
        assert!(stemmed > 0.9 && stemmed <= exact);
        assert!(stemmed > meteor("the verdict stands", "the conviction stands"));
    }

    #[test]
    fn meteor_hand_computed() {
        // cand "a b c d", ref "a b x c d": m = 4, chunks = 2
        let p: f64 = 1.0;
        let r: f64 = 0.8;
        let fmean = p * r / (0.9 * p + 0.1 * r);
        let expected = fmean * (1.0 - 0.5 * (0.5f64).powi(3));
        assert!((meteor("a b c d", "a b x c d") - expected).abs() < 1e-12);
    }

    #[test]
    fn bertscore_mock_examples() {
        let s = bertscore("a b", "a c", &OneHotEmbedder).unwrap();
        assert!(close(s.precision, 0.5) && close(s.recall, 0.5));
        assert_eq!(bertscore("a b", "c d", &OneHotEmbedder).unwrap().f1, 0.0);
        let t = "the appeal is allowed";
        let s = bertscore(t, t, &NgramEmbedder::default()).unwrap();
        assert!((s.f1 - 1.0).abs() < 1e-6);
    }

    struct Broken;
    impl Embedder for Broken {
        fn embed(&self, _: &[&str]) -> core::result::Result<Vec<Vec<f32>>, BackendError> {
            Err(BackendError::Unavailable("down".into()))
        }
    }

    #[test]
    fn bertscore_embedder_unreachable() {
        assert!(matches!(
            bertscore("a", "b", &Broken),
            Err(Error::Backend(BackendError::Unavailable(_)))
        ));
    }

    #[test]
    fn summac_with_verbatim_mock() {
        let seg = Segmenter::default();
        let doc = "The appeal was filed. The court heard it. Costs were awarded.";
        let nli = VerbatimNli;
        let agg = SummacAggregation::Mean;
        assert_eq!(summac(doc, "The court heard it. Costs were awarded.", &nli, &seg, agg).unwrap(), 1.0);
        assert_eq!(summac(doc, "Something new happened.", &nli, &seg, agg).unwrap(), 0.0);
        assert_eq!(summac(doc, "The court heard it. Something new.", &nli, &seg, agg).unwrap(), 0.5);
        let min = summac(doc, "The court heard it. Something new.", &nli, &seg, SummacAggregation::Min);
        assert_eq!(min.unwrap(), 0.0);
    }

    #[test]
    fn precision_metrics() {
        let r = BuiltinRecognizer::default();
        let doc = "The accused Ramesh paid Rs. 29,500 to Suresh in Bombay.";
        assert_eq!(neprec(doc, "It was raining.", &r).unwrap(), 1.0);
        assert_eq!(numprec(doc, "It was raining.", &r), 1.0);
        assert_eq!(numprec(doc, "He paid Rs. 26,500 and Rs 27,000.", &r), 0.0);
        assert_eq!(numprec(doc, "He paid Rs 29500 and 27,000.", &r), 0.5);
        let s = "Then Ramesh met Chandrasekhar A. Lama.";
        assert_eq!(neprec(doc, s, &r).unwrap(), 0.5);
    }

    #[test]
    fn audit_lists_hallucinations() {
        let r = BuiltinRecognizer::default();
        let seg = Segmenter::default();
        let doc = "The appellant demanded Rs. 29,500 from the complainant. He was tried in Bombay.";
        let summary = "The learned Magistrate applied Section 387 of the Indian Penal Code.";
        let a = audit(doc, summary, &r, &VerbatimNli, &seg, 0.5).unwrap();
        let nums: Vec<&str> = a.unmatched_numbers.iter().map(|m| m.canonical.as_str()).collect();
        assert_eq!(nums, vec!["387"]);
        let ents: Vec<&str> = a.unmatched_entities.iter().map(|m| m.surface.as_str()).collect();
        assert_eq!(ents, vec!["Magistrate", "Section", "Indian Penal Code"]);
        assert_eq!(a.flagged_sentences.len(), 1);
        let a0 = audit(doc, summary, &r, &VerbatimNli, &seg, 0.0).unwrap();
        assert!(a0.flagged_sentences.is_empty());
        let clean = audit(doc, "He was tried in Bombay.", &r, &VerbatimNli, &seg, 0.5).unwrap();
        assert!(clean.is_clean());
    }

    #[test]
    fn evaluator_respects_selection() {
        let r = BuiltinRecognizer::default();
        let ev = Evaluator {
            recognizer: &r,
            embedder: &OneHotEmbedder,
            nli: &VerbatimNli,
            segmenter: Segmenter::default(),
            aggregation: SummacAggregation::Mean,
        };
        let only: BTreeSet<Metric> = [Metric::Rouge2F1, Metric::NumPrec].into_iter().collect();
        let rep = ev.evaluate("p", "m", "doc 1.", "gold text", "doc 1.", &only).unwrap();
        assert_eq!(rep.values.keys().copied().collect::<Vec<_>>(), vec![Metric::Rouge2F1, Metric::NumPrec]);
        let all: BTreeSet<Metric> = Metric::ALL.into_iter().collect();
        let rep = ev.evaluate("p", "m", "doc 1.", "gold text", "doc 1.", &all).unwrap();
        assert_eq!(rep.values.len(), 11);
    }

    #[test]
    fn metric_names_roundtrip() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("bleu".parse::<Metric>().is_err());
    }

    proptest! {
        #[test]
        fn f1_zero_when_either_side_zero(p in 0.0f64..1.0, r in 0.0f64..1.0) {
            prop_assert_eq!(harmonic_mean(0.0, r), 0.0);
            prop_assert_eq!(harmonic_mean(p, 0.0), 0.0);
        }

        #[test]
        fn rouge_n_matches_count_oracle(
            c in proptest::collection::vec(0u32..4, 0..90),
            r in proptest::collection::vec(0u32..4, 0..90),
            n in 1usize..5,
        ) {
            let count = |t: &[u32]| {
                let mut m: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
                for w in t.windows(n) {
                    *m.entry(w.to_vec()).or_default() += 1;
                }
                m
            };
            let (cm, rm) = (count(&c), count(&r));
            let overlap: usize = cm.iter().map(|(g, k)| (*k).min(rm.get(g).copied().unwrap_or(0))).sum();
            let want = Prf::from_counts(overlap, c.len().saturating_sub(n - 1), r.len().saturating_sub(n - 1));
            prop_assert_eq!(rouge_n_ids(&c, &r, n), want);
        }

        #[test]
        fn rouge_l_bit_parallel_matches_dp(
            c in proptest::collection::vec(0u32..5, 0..100),
            r in proptest::collection::vec(0u32..5, 0..100),
        ) {
            let want = Prf::from_counts(lcs_len(&c, &r), c.len(), r.len());
            prop_assert_eq!(rouge_l_ids(&c, &r), want);
        }

        #[test]
        fn neprec_monotone_under_removal(extra in proptest::collection::vec("[A-Z][a-z]{3,6}", 1..4)) {
            let r = BuiltinRecognizer::default();
            let doc = "Ramesh met Suresh in Bombay.";
            let base = "Later Ramesh went to Bombay";
            let with = alloc::format!("{base} with {}.", extra.join(" and "));
            let without = alloc::format!("{base} with {}.", extra[1..].join(" and "));
            let a = neprec(doc, &with, &r).unwrap();
            let b = neprec(doc, &without, &r).unwrap();
            prop_assert!(b >= a - 1e-12);
        }
    }
}
