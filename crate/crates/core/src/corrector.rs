//! Rewrites entities and numbers that a summary does not share with its
//! source document, replacing each with the most similar source mention.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::embedding::{argmax_cosine, Embedder};
use crate::error::{BackendError, Result};
use crate::recognizers::{EntityMention, MentionKind, Recognizer};

/// Rewrite passes before giving up on mentions created by earlier rewrites.
const MAX_PASSES: usize = 4;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EntitySets {
    /// Distinct document mentions, first occurrence per key.
    pub v_j: Vec<EntityMention>,
    /// Distinct summary mentions, first occurrence per key.
    pub v_s: Vec<EntityMention>,
    /// Summary mentions with no same-kind counterpart in the document.
    pub v_r: Vec<EntityMention>,
}

fn distinct(mentions: Vec<EntityMention>) -> Vec<EntityMention> {
    let mut seen = BTreeSet::new();
    mentions.into_iter().filter(|m| seen.insert((m.kind, m.key()))).collect()
}

pub fn compute_entity_sets(document: &str, summary: &str, recognizer: &dyn Recognizer) -> Result<EntitySets> {
    let v_j = distinct(recognizer.mentions(document)?);
    let v_s = distinct(recognizer.mentions(summary)?);
    let known: BTreeSet<(MentionKind, String)> = v_j.iter().map(|m| (m.kind, m.key())).collect();
    let v_r = v_s.iter().filter(|m| !known.contains(&(m.kind, m.key()))).cloned().collect();
    Ok(EntitySets { v_j, v_s, v_r })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replacement {
    pub original: EntityMention,
    pub replacement: EntityMention,
    pub similarity: f64,
    /// Byte ranges in the input summary of this pass that were rewritten.
    pub spans_rewritten: Vec<(usize, usize)>,
    /// Text written into each span.
    pub written: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplacementLedger {
    pub entries: Vec<Replacement>,
    /// Mentions with no admissible candidate (a number when the document has
    /// no numbers, anything when the document has no mentions). Left as is.
    pub unrepairable: Vec<EntityMention>,
}

impl ReplacementLedger {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.unrepairable.is_empty()
    }
}

/// Text to write for `replacement` in place of `original`. Numbers keep the
/// original's currency prefix and take the replacement's digits.
fn rewrite_text(original: &EntityMention, replacement: &EntityMention) -> String {
    if original.kind == MentionKind::Number && replacement.kind == MentionKind::Number {
        let digits_at = |s: &str| s.find(|c: char| c.is_ascii_digit()).unwrap_or(0);
        let prefix = &original.surface[..digits_at(&original.surface)];
        let body = &replacement.surface[digits_at(&replacement.surface)..];
        let mut out = String::from(prefix);
        out.push_str(body);
        out
    } else {
        replacement.surface.clone()
    }
}

fn correct_once(
    document: &str,
    summary: &str,
    recognizer: &dyn Recognizer,
    embedder: &dyn Embedder,
    skip: &BTreeSet<(MentionKind, String)>,
    ledger: &mut ReplacementLedger,
) -> Result<Option<String>> {
    let sets = compute_entity_sets(document, summary, recognizer)?;
    let v_r: Vec<&EntityMention> = sets.v_r.iter().filter(|m| !skip.contains(&(m.kind, m.key()))).collect();
    if v_r.is_empty() {
        return Ok(None);
    }
    let mut texts: Vec<&str> = v_r.iter().map(|m| m.canonical.as_str()).collect();
    texts.extend(sets.v_j.iter().map(|m| m.canonical.as_str()));
    let vectors = embedder.embed(&texts)?;
    if vectors.len() != texts.len() {
        return Err(BackendError::Malformed(alloc::format!(
            "expected {} embeddings, got {}",
            texts.len(),
            vectors.len()
        ))
        .into());
    }
    let (query_vecs, cand_vecs) = vectors.split_at(v_r.len());
    let number_idx: Vec<usize> = (0..sets.v_j.len()).filter(|&i| sets.v_j[i].kind == MentionKind::Number).collect();
    let number_vecs: Vec<Vec<f32>> = number_idx.iter().map(|&i| cand_vecs[i].clone()).collect();

    let all_mentions = recognizer.mentions(summary)?;
    let mut edits: Vec<((usize, usize), String)> = Vec::new();
    let mut any = false;
    for (q, original) in v_r.iter().enumerate() {
        let choice = if original.kind == MentionKind::Number {
            argmax_cosine(&query_vecs[q], &number_vecs).map(|(i, s)| (number_idx[i], s))
        } else {
            argmax_cosine(&query_vecs[q], cand_vecs)
        };
        let Some((j, similarity)) = choice else {
            ledger.unrepairable.push((*original).clone());
            continue;
        };
        let replacement = sets.v_j[j].clone();
        let written = rewrite_text(original, &replacement);
        let spans: Vec<(usize, usize)> = all_mentions
            .iter()
            .filter(|m| m.kind == original.kind && m.key() == original.key())
            .map(|m| m.span)
            .collect();
        edits.extend(spans.iter().map(|&sp| (sp, written.clone())));
        ledger.entries.push(Replacement {
            original: (*original).clone(),
            replacement,
            similarity,
            spans_rewritten: spans,
            written,
        });
        any = true;
    }
    if !any {
        return Ok(None);
    }
    edits.sort_by_key(|e| core::cmp::Reverse(e.0));
    let mut out = String::from(summary);
    let mut floor = usize::MAX;
    for ((s, e), text) in edits {
        // overlapping mentions: the later-starting one was applied already
        if e > floor {
            continue;
        }
        out.replace_range(s..e, &text);
        floor = s;
    }
    Ok(Some(out))
}

/// Replaces every summary mention absent from the document with its
/// argmax-cosine document mention. Numbers only take numbers; ties go to the
/// earliest document mention. Mentions that only come into existence through
/// a rewrite (for example two names fused by a comma) get further passes.
pub fn correct_summary(
    document: &str,
    summary: &str,
    recognizer: &dyn Recognizer,
    embedder: &dyn Embedder,
) -> Result<(String, ReplacementLedger)> {
    let mut ledger = ReplacementLedger::default();
    let mut text = String::from(summary);
    for _ in 0..MAX_PASSES {
        let skip: BTreeSet<(MentionKind, String)> = ledger
            .entries
            .iter()
            .map(|e| &e.original)
            .chain(&ledger.unrepairable)
            .map(|m| (m.kind, m.key()))
            .collect();
        match correct_once(document, &text, recognizer, embedder, &skip, &mut ledger)? {
            Some(next) => text = next,
            None => break,
        }
    }
    Ok((text, ledger))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{NgramEmbedder, OneHotEmbedder};
    use crate::metrics::{neprec, numprec};
    use crate::recognizers::BuiltinRecognizer;
    use alloc::format;
    use proptest::prelude::*;

    const DOC: &str = "The appellant was charged under Section 387 of the Indian Penal Code. \
        The Honorable Aiyar, N. Chandrasekhara entered judgment. \
        The demand was Rs 30,000 and the sum of Rs 29,500 was later paid.";

    struct Down;
    impl Embedder for Down {
        fn embed(&self, _: &[&str]) -> core::result::Result<Vec<Vec<f32>>, BackendError> {
            Err(BackendError::Unavailable("connection refused".into()))
        }
    }

    #[test]
    fn number_is_replaced_by_closest_number() {
        let rec = BuiltinRecognizer::default();
        let summary = "The appellant paid Rs. 26,500 as demanded.";
        let sets = compute_entity_sets(DOC, summary, &rec).unwrap();
        assert!(sets.v_r.iter().any(|m| m.canonical == "26500"));
        let (fixed, ledger) = correct_summary(DOC, summary, &rec, &NgramEmbedder::default()).unwrap();
        assert_eq!(fixed, "The appellant paid Rs. 29,500 as demanded.");
        assert_eq!(ledger.entries.len(), 1);
        assert_eq!(ledger.entries[0].replacement.canonical, "29500");
    }

    #[test]
    fn judge_name_is_replaced() {
        let rec = BuiltinRecognizer::default();
        let summary = "The appeal was heard by Chandrasekhar A. Lama in the court.";
        let (fixed, ledger) = correct_summary(DOC, summary, &rec, &NgramEmbedder::default()).unwrap();
        assert_eq!(fixed, "The appeal was heard by Aiyar, N. Chandrasekhara in the court.");
        assert_eq!(ledger.entries[0].original.surface, "Chandrasekhar A. Lama");
    }

    #[test]
    fn clean_summary_is_untouched() {
        let rec = BuiltinRecognizer::default();
        let summary = "The sum of Rs 29,500 was later paid.";
        let (fixed, ledger) = correct_summary(DOC, summary, &rec, &Down).unwrap();
        assert_eq!(fixed, summary);
        assert!(ledger.is_empty());
        let empty = compute_entity_sets(DOC, "", &rec).unwrap();
        assert!(empty.v_s.is_empty() && empty.v_r.is_empty());
    }

    #[test]
    fn every_occurrence_rewritten() {
        let rec = BuiltinRecognizer::default();
        let summary = "It cost 26,500 then. Later 26,500 again.";
        let (fixed, ledger) = correct_summary(DOC, summary, &rec, &NgramEmbedder::default()).unwrap();
        assert_eq!(fixed, "It cost 29,500 then. Later 29,500 again.");
        assert_eq!(ledger.entries[0].spans_rewritten.len(), 2);
    }

    #[test]
    fn number_without_candidates_is_unrepairable() {
        let rec = BuiltinRecognizer::default();
        let doc = "The Magistrate heard the matter.";
        let summary = "The fine was 500 paid to Bombay High Court.";
        let (fixed, ledger) = correct_summary(doc, summary, &rec, &OneHotEmbedder).unwrap();
        assert_eq!(ledger.unrepairable.len(), 1);
        assert_eq!(ledger.unrepairable[0].canonical, "500");
        assert_eq!(fixed, "The fine was 500 paid to Magistrate.");
    }

    #[test]
    fn unreachable_embedder_errors() {
        let rec = BuiltinRecognizer::default();
        let r = correct_summary(DOC, "Paid 12 to Bombay.", &rec, &Down);
        assert!(matches!(r, Err(crate::Error::Backend(BackendError::Unavailable(_)))));
    }

    fn summary_strategy() -> impl Strategy<Value = String> {
        let word = prop_oneof![
            3 => "[a-e]{1,5}",
            1 => "[A-E][a-e]{2,5}",
            1 => "[0-9]{1,3}(,[0-9]{3})?",
            1 => Just(String::from("Aiyar, N. Chandrasekhara")),
            1 => Just(String::from("W.H. King")),
        ];
        proptest::collection::vec(proptest::collection::vec(word, 1..8), 1..5)
            .prop_map(|ss| ss.into_iter().map(|s| format!("{}.", s.join(" "))).collect::<Vec<_>>().join(" "))
    }

    proptest! {
        #[test]
        fn postconditions(summary in summary_strategy()) {
            let rec = BuiltinRecognizer::default();
            let emb = NgramEmbedder::default();
            let before = compute_entity_sets(DOC, &summary, &rec).unwrap();
            let (fixed, ledger) = correct_summary(DOC, &summary, &rec, &emb).unwrap();
            // completeness: each original v_r key accounted for exactly once
            for m in &before.v_r {
                let hits = ledger.entries.iter().filter(|e| e.original.kind == m.kind && e.original.key() == m.key()).count()
                    + ledger.unrepairable.iter().filter(|u| u.kind == m.kind && u.key() == m.key()).count();
                prop_assert_eq!(hits, 1);
            }
            for e in &ledger.entries {
                prop_assert!(before.v_j.contains(&e.replacement));
                if e.original.kind == MentionKind::Number {
                    prop_assert_eq!(e.replacement.kind, MentionKind::Number);
                }
                prop_assert!((-1.0..=1.0).contains(&e.similarity));
            }
            let after = compute_entity_sets(DOC, &fixed, &rec).unwrap();
            prop_assert!(after.v_r.is_empty(), "left: {:?} in {:?}", after.v_r, fixed);
            prop_assert_eq!(neprec(DOC, &fixed, &rec).unwrap(), 1.0);
            prop_assert_eq!(numprec(DOC, &fixed, &rec), 1.0);
            let (again, ledger2) = correct_summary(DOC, &fixed, &rec, &emb).unwrap();
            prop_assert!(ledger2.is_empty());
            prop_assert_eq!(again, fixed);
        }

        #[test]
        fn text_outside_spans_is_preserved(summary in summary_strategy()) {
            let rec = BuiltinRecognizer::default();
            let (fixed, ledger) = correct_summary(DOC, &summary, &rec, &NgramEmbedder::default()).unwrap();
            if ledger.entries.len() == 1 && ledger.unrepairable.is_empty() {
                let e = &ledger.entries[0];
                let mut rebuilt = String::new();
                let mut at = 0;
                let mut spans = e.spans_rewritten.clone();
                spans.sort();
                for (s, t) in spans {
                    rebuilt.push_str(&summary[at..s]);
                    rebuilt.push_str(&e.written);
                    at = t;
                }
                rebuilt.push_str(&summary[at..]);
                prop_assert_eq!(rebuilt, fixed);
            }
        }
    }

    #[test]
    fn ledger_replacements_come_from_document() {
        let rec = BuiltinRecognizer::default();
        let v_j = compute_entity_sets(DOC, "", &rec).unwrap().v_j;
        let (_, ledger) =
            correct_summary(DOC, "Heard by Chandrasekhar A. Lama about 26,500 in Bombay.", &rec, &NgramEmbedder::default()).unwrap();
        assert_eq!(ledger.entries.len(), 3);
        for e in &ledger.entries {
            assert!(v_j.contains(&e.replacement));
        }
    }
}
