//! Corpus records and dataset statistics (word counts, extractive coverage
//! and density).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::textproc::{tokenize_words, word_count};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Test,
    Validation,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Test, Split::Validation];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::Validation => "validation",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown split {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    InAbs,
    UkAbs,
    GovReport,
    Generic,
}

impl Source {
    pub const ALL: [Source; 4] = [Source::InAbs, Source::UkAbs, Source::GovReport, Source::Generic];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::InAbs => "in_abs",
            Source::UkAbs => "uk_abs",
            Source::GovReport => "govreport",
            Source::Generic => "generic",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_").to_lowercase();
        Source::ALL
            .into_iter()
            .find(|x| x.as_str() == norm)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown source {s:?}")))
    }
}

/// One (document, gold summary) pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CorpusRecord {
    pub id: String,
    pub document_text: String,
    pub gold_summary_text: String,
    pub split: Split,
    pub source: Source,
}

impl CorpusRecord {
    pub fn new(
        id: impl Into<String>,
        document_text: impl Into<String>,
        gold_summary_text: impl Into<String>,
        split: Split,
        source: Source,
    ) -> Result<Self> {
        let rec = Self {
            id: id.into(),
            document_text: document_text.into(),
            gold_summary_text: gold_summary_text.into(),
            split,
            source,
        };
        if rec.document_text.trim().is_empty() {
            return Err(Error::InvalidArgument(alloc::format!("record {}: empty document", rec.id)));
        }
        if rec.gold_summary_text.trim().is_empty() {
            return Err(Error::InvalidArgument(alloc::format!("record {}: empty summary", rec.id)));
        }
        Ok(rec)
    }

    pub fn doc_words(&self) -> usize {
        word_count(&self.document_text)
    }

    pub fn summary_words(&self) -> usize {
        word_count(&self.gold_summary_text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusStats {
    pub n_documents: usize,
    pub avg_doc_words: f64,
    pub avg_summary_words: f64,
    pub coverage: f64,
    pub density: f64,
}

/// Word-count averages (total words divided by number of documents) plus
/// mean coverage and density.
pub fn compute_stats(records: &[CorpusRecord]) -> Result<CorpusStats> {
    if records.is_empty() {
        return Err(Error::EmptyInput("corpus"));
    }
    let n = records.len();
    let doc_total: usize = records.iter().map(CorpusRecord::doc_words).sum();
    let sum_total: usize = records.iter().map(CorpusRecord::summary_words).sum();
    let (coverage, density) = compute_coverage_density(records)?;
    Ok(CorpusStats {
        n_documents: n,
        avg_doc_words: doc_total as f64 / n as f64,
        avg_summary_words: sum_total as f64 / n as f64,
        coverage,
        density,
    })
}

/// Extractive fragments of `summary` with respect to `article`, found by the
/// greedy longest-shared-run procedure. Returns fragment lengths.
pub fn extractive_fragments<S: AsRef<str> + Ord>(article: &[S], summary: &[S]) -> Vec<usize> {
    let mut positions: BTreeMap<&S, Vec<usize>> = BTreeMap::new();
    for (j, tok) in article.iter().enumerate() {
        positions.entry(tok).or_default().push(j);
    }
    let mut fragments = Vec::new();
    let mut i = 0;
    while i < summary.len() {
        let mut best = 0;
        if let Some(starts) = positions.get(&summary[i]) {
            let mut j_floor = 0;
            for &j in starts {
                if j < j_floor {
                    continue;
                }
                let mut len = 0;
                while i + len < summary.len()
                    && j + len < article.len()
                    && summary[i + len] == article[j + len]
                {
                    len += 1;
                }
                best = best.max(len);
                j_floor = j + len;
            }
        }
        if best > 0 {
            fragments.push(best);
        }
        i += best.max(1);
    }
    fragments
}

/// (coverage, density) of one pair on lowercased word tokens.
pub fn pair_coverage_density(document: &str, summary: &str) -> (f64, f64) {
    let doc: Vec<String> = tokenize_words(document).iter().map(|t| t.to_lowercase()).collect();
    let sum: Vec<String> = tokenize_words(summary).iter().map(|t| t.to_lowercase()).collect();
    if sum.is_empty() {
        return (0.0, 0.0);
    }
    let frags = extractive_fragments(&doc, &sum);
    let n = sum.len() as f64;
    let coverage = frags.iter().sum::<usize>() as f64 / n;
    let density = frags.iter().map(|f| (f * f) as f64).sum::<f64>() / n;
    (coverage, density)
}

/// Per-pair coverage and density averaged over the corpus.
pub fn compute_coverage_density(records: &[CorpusRecord]) -> Result<(f64, f64)> {
    if records.is_empty() {
        return Err(Error::EmptyInput("corpus"));
    }
    let (c, d) = records.iter().fold((0.0, 0.0), |(c, d), r| {
        let (pc, pd) = pair_coverage_density(&r.document_text, &r.gold_summary_text);
        (c + pc, d + pd)
    });
    let n = records.len() as f64;
    Ok((c / n, d / n))
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} documents, {:.2} words/document, {:.2} words/summary, coverage {:.2}, density {:.2}",
            self.n_documents, self.avg_doc_words, self.avg_summary_words, self.coverage, self.density
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn rec(id: &str, doc: &str, sum: &str) -> CorpusRecord {
        CorpusRecord::new(id, doc, sum, Split::Train, Source::Generic).unwrap()
    }

    /// Quadratic transcription of the greedy fragment procedure, scanning
    /// every article position.
    fn fragments_oracle(a: &[&str], s: &[&str]) -> Vec<usize> {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < s.len() {
            let mut f = 0;
            while j < a.len() {
                if s[i] == a[j] {
                    let (mut ii, mut jj) = (i, j);
                    while ii < s.len() && jj < a.len() && s[ii] == a[jj] {
                        ii += 1;
                        jj += 1;
                    }
                    f = f.max(ii - i);
                    j = jj;
                } else {
                    j += 1;
                }
            }
            i += f.max(1);
            j = 0;
            if f > 0 {
                out.push(f);
            }
        }
        out
    }

    #[test]
    fn word_count_stats() {
        let s = compute_stats(&[rec("x", "a b c", "a")]).unwrap();
        assert_eq!(s.n_documents, 1);
        assert_eq!(s.avg_doc_words, 3.0);
        assert_eq!(s.avg_summary_words, 1.0);
        assert_eq!(compute_stats(&[]), Err(Error::EmptyInput("corpus")));
    }

    #[test]
    fn averages_are_total_over_count() {
        let s = compute_stats(&[rec("x", "a b c d", "a b"), rec("y", "a b", "c")]).unwrap();
        assert_eq!(s.avg_doc_words, 3.0);
        assert_eq!(s.avg_summary_words, 1.5);
    }

    #[test]
    fn identical_and_disjoint() {
        let t = "the appeal is dismissed with costs";
        assert_eq!(pair_coverage_density(t, t), (1.0, 6.0));
        assert_eq!(pair_coverage_density(t, "nothing shared here"), (0.0, 0.0));
        assert!(compute_coverage_density(&[]).is_err());
    }

    #[test]
    fn fragments_hand_example() {
        // summary "b c x a b" against "a b c d": fragments "b c" and "a b"
        let a = ["a", "b", "c", "d"];
        let s = ["b", "c", "x", "a", "b"];
        assert_eq!(extractive_fragments(&a, &s), vec![2, 2]);
        let (c, d) = pair_coverage_density("a b c d", "b c x a b");
        assert!((c - 0.8).abs() < 1e-12 && (d - 8.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn empty_records_rejected() {
        assert!(CorpusRecord::new("x", " ", "s", Split::Test, Source::InAbs).is_err());
        assert!(CorpusRecord::new("x", "d", "", Split::Test, Source::InAbs).is_err());
    }

    #[test]
    fn enum_parsing() {
        assert_eq!("in-abs".parse::<Source>().unwrap(), Source::InAbs);
        assert_eq!("govreport".parse::<Source>().unwrap(), Source::GovReport);
        assert_eq!("validation".parse::<Split>().unwrap(), Split::Validation);
        assert!("dev".parse::<Split>().is_err());
    }

    proptest! {
        #[test]
        fn fragments_match_oracle(a in proptest::collection::vec("[a-d]", 0..30), s in proptest::collection::vec("[a-d]", 0..20)) {
            let a: Vec<&str> = a.iter().map(String::as_str).collect();
            let s: Vec<&str> = s.iter().map(String::as_str).collect();
            prop_assert_eq!(extractive_fragments(&a, &s), fragments_oracle(&a, &s));
        }

        #[test]
        fn coverage_bounds(a in "[a-d ]{1,60}", s in "[a-d ]{1,40}") {
            let (c, d) = pair_coverage_density(&a, &s);
            prop_assert!((0.0..=1.0).contains(&c));
            prop_assert!(d <= word_count(&s) as f64 + 1e-9);
        }

        #[test]
        fn stats_permutation_invariant(docs in proptest::collection::vec(("[a-c ]{0,20}[a-c]", "[a-c ]{0,10}[a-c]"), 1..6), rot in 0usize..6) {
            let recs: Vec<CorpusRecord> = docs.iter().enumerate().map(|(i, (d, s))| rec(&alloc::format!("{i}"), d, s)).collect();
            let mut rotated = recs.clone();
            rotated.rotate_left(rot % recs.len());
            let (a, b) = (compute_stats(&recs).unwrap(), compute_stats(&rotated).unwrap());
            prop_assert_eq!(a.n_documents, b.n_documents);
            prop_assert_eq!(a.avg_doc_words, b.avg_doc_words);
            prop_assert!((a.coverage - b.coverage).abs() < 1e-12);
            prop_assert!((a.density - b.density).abs() < 1e-12);
        }
    }
}
