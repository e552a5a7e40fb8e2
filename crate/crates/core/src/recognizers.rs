//! Named-entity and number mentions.
//!
//! The builtin recognizer is rule based and deterministic. It works one
//! sentence at a time, so extracting from `a + "\n\n" + b` yields the
//! mentions of `a` followed by the mentions of `b` shifted by the offset.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::BackendError;
use crate::textproc::{normalize, word_spans, Segmenter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MentionKind {
    NamedEntity,
    Number,
}

impl MentionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MentionKind::NamedEntity => "named_entity",
            MentionKind::Number => "number",
        }
    }
}

/// One occurrence of an entity or number. `span` is a byte range into the
/// text the mention was extracted from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EntityMention {
    pub surface: String,
    pub kind: MentionKind,
    pub span: (usize, usize),
    pub canonical: String,
}

impl EntityMention {
    /// Mention for `text[start..end]`; the range must lie on char boundaries.
    pub fn new(text: &str, kind: MentionKind, start: usize, end: usize) -> Self {
        let surface = text[start..end].to_string();
        let canonical = match kind {
            MentionKind::NamedEntity => canonical_entity(&surface),
            MentionKind::Number => canonical_number(&surface),
        };
        Self {
            surface,
            kind,
            span: (start, end),
            canonical,
        }
    }

    /// Identity used for set operations: case-folded canonical form.
    pub fn key(&self) -> String {
        self.canonical.to_lowercase()
    }
}

pub fn canonical_entity(surface: &str) -> String {
    let norm = normalize(surface);
    let mut out = String::with_capacity(norm.len());
    for (i, w) in norm.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(w);
    }
    out.to_lowercase()
}

/// Digits and decimal point only: separators and currency markers dropped.
pub fn canonical_number(surface: &str) -> String {
    let body = surface.trim_start_matches(|c: char| !c.is_ascii_digit());
    body.chars().filter(|c| c.is_ascii_digit() || *c == '.').collect()
}

/// Source of entity and number mentions.
pub trait Recognizer {
    fn entities(&self, text: &str) -> Result<Vec<EntityMention>, BackendError>;

    fn numbers(&self, text: &str) -> Vec<EntityMention> {
        extract_numbers(text)
    }

    /// Entities and numbers ordered by span start.
    fn mentions(&self, text: &str) -> Result<Vec<EntityMention>, BackendError> {
        let mut all = self.entities(text)?;
        all.extend(self.numbers(text));
        all.sort_by_key(|m| (m.span.0, m.span.1));
        Ok(all)
    }
}

impl<T: Recognizer + ?Sized> Recognizer for &T {
    fn entities(&self, text: &str) -> Result<Vec<EntityMention>, BackendError> {
        (**self).entities(text)
    }
    fn numbers(&self, text: &str) -> Vec<EntityMention> {
        (**self).numbers(text)
    }
}

#[derive(Debug, Clone, Default)]
pub struct BuiltinRecognizer {
    segmenter: Segmenter,
}

impl BuiltinRecognizer {
    pub fn new(segmenter: Segmenter) -> Self {
        Self { segmenter }
    }
}

impl Recognizer for BuiltinRecognizer {
    fn entities(&self, text: &str) -> Result<Vec<EntityMention>, BackendError> {
        Ok(entities_with(&self.segmenter, text))
    }
}

/// Builtin named-entity extraction with the default segmenter.
pub fn extract_entities(text: &str) -> Vec<EntityMention> {
    entities_with(&Segmenter::default(), text)
}

const HONORIFICS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "hon", "honorable", "honourable", "hon'ble", "justice", "shri", "sri",
    "smt", "sh", "lord", "lady", "sir",
];

const CAPITALIZED_STOPWORDS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "in", "on", "at", "by", "for", "of", "to",
    "from", "with", "as", "and", "or", "but", "if", "when", "while", "after", "before", "since",
    "it", "its", "he", "she", "they", "we", "his", "her", "their", "our", "there", "here", "thus",
    "however", "further", "accordingly", "therefore", "hence", "also", "is", "was", "no", "not",
    "all", "any", "each", "such", "upon", "under", "i", "you", "what", "which", "who",
    "then", "later", "thereafter", "whereas", "where", "although", "though", "because", "so",
    "both", "either", "neither", "every", "some", "many", "most", "finally", "moreover",
    "meanwhile", "nevertheless", "notwithstanding", "be", "are", "were", "has", "have", "had",
    "did", "does", "do", "my", "your", "him", "them", "us", "me", "how", "why", "whether",
    "during", "against", "between", "within", "without", "about", "into", "over", "through",
    "only", "even", "yet", "nor", "hereby", "herein", "therein", "whereby", "again", "now",
];

const MONTHS: &[&str] = &[
    "january", "february", "march", "april", "may", "june", "july", "august", "september",
    "october", "november", "december", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep",
    "sept", "oct", "nov", "dec",
];

const WEEKDAYS: &[&str] = &[
    "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday",
];

const OPENERS: &[char] = &['"', '\'', '(', '[', '\u{201C}', '\u{2018}'];
const TRAILING: &[char] = &[
    '.', ',', ';', ':', '!', '?', '"', '\'', ')', ']', '\u{201D}', '\u{2019}',
];

struct Word<'a> {
    start: usize,
    end: usize,
    core: &'a str,
    /// Punctuation after the core, e.g. `","` in `Aiyar,`.
    tail: &'a str,
    /// Whether opening punctuation precedes the core.
    opened: bool,
}

fn classify<'a>(text: &'a str, ws: usize, we: usize) -> Word<'a> {
    let raw = &text[ws..we];
    let lead = raw.len() - raw.trim_start_matches(OPENERS).len();
    let body = &raw[lead..];
    let trimmed = body.trim_end_matches(TRAILING);
    // initials keep their periods: "N." / "W.H."
    let keep = {
        let no_comma = body.trim_end_matches([',', ';', ':']);
        if is_initials(no_comma) {
            no_comma.len()
        } else {
            let mut k = trimmed.len();
            for suffix in ["'s", "\u{2019}s"] {
                if trimmed.ends_with(suffix) && trimmed.len() > suffix.len() {
                    k -= suffix.len();
                }
            }
            k
        }
    };
    Word {
        start: ws + lead,
        end: ws + lead + keep,
        core: &body[..keep],
        tail: &body[keep..],
        opened: lead > 0,
    }
}

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

fn is_capitalized(core: &str) -> bool {
    let mut chars = core.chars();
    matches!(chars.next(), Some(c) if c.is_uppercase()) && !core.chars().any(|c| c.is_ascii_digit())
}

fn is_acronym(core: &str) -> bool {
    core.chars().filter(|c| c.is_alphabetic()).count() >= 2
        && core.chars().all(|c| c.is_uppercase() || c == '.' || c == '&' || c == '-')
}

fn lower_bare(core: &str) -> String {
    core.trim_end_matches('.').to_lowercase()
}

fn is_breaker(core: &str) -> bool {
    let l = lower_bare(core);
    HONORIFICS.contains(&l.as_str())
        || CAPITALIZED_STOPWORDS.contains(&l.as_str())
        || MONTHS.contains(&l.as_str())
        || WEEKDAYS.contains(&l.as_str())
}

fn entities_with(segmenter: &Segmenter, text: &str) -> Vec<EntityMention> {
    let mut out = Vec::new();
    for sentence in segmenter.split(text) {
        let words: Vec<Word<'_>> = word_spans(&text[sentence.start..sentence.end])
            .map(|(s, e)| classify(text, sentence.start + s, sentence.start + e))
            .collect();
        let mut run: Vec<usize> = Vec::new();
        let flush = |run: &mut Vec<usize>, out: &mut Vec<EntityMention>| {
            if let (Some(&first), Some(&last)) = (run.first(), run.last()) {
                let sentence_initial_only = run.len() == 1 && first == 0;
                if !sentence_initial_only || is_acronym(words[first].core) {
                    out.push(EntityMention::new(
                        text,
                        MentionKind::NamedEntity,
                        words[first].start,
                        words[last].end,
                    ));
                }
            }
            run.clear();
        };
        for (i, w) in words.iter().enumerate() {
            let member = is_initials(w.core) || (is_capitalized(w.core) && !is_breaker(w.core));
            if !member || (w.opened && !run.is_empty()) {
                flush(&mut run, &mut out);
            }
            if !member {
                continue;
            }
            run.push(i);
            let continues = match w.tail {
                "" => true,
                "," => words.get(i + 1).is_some_and(|n| is_initials(n.core) && !n.opened),
                _ => false,
            };
            if !continues {
                flush(&mut run, &mut out);
            }
        }
        flush(&mut run, &mut out);
    }
    out
}

const CURRENCY_PREFIXES: &[&str] = &["Rs.", "Rs", "INR", "$", "\u{20B9}", "\u{00A3}", "\u{20AC}"];

/// Digit groups with optional thousands separators, a decimal part and an
/// attached currency marker (`Rs.29,500`, `$40`).
pub fn extract_numbers(text: &str) -> Vec<EntityMention> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if !bytes[i].is_ascii_digit() || (i > 0 && bytes[i - 1].is_ascii_digit()) {
            i += 1;
            continue;
        }
        let start = i;
        let mut end = digits_end(bytes, i);
        while end + 1 < bytes.len() && bytes[end] == b',' && bytes[end + 1].is_ascii_digit() {
            end = digits_end(bytes, end + 1);
        }
        if end + 1 < bytes.len() && bytes[end] == b'.' && bytes[end + 1].is_ascii_digit() {
            end = digits_end(bytes, end + 1);
        }
        let prefix_start = CURRENCY_PREFIXES
            .iter()
            .find_map(|p| {
                let s = start.checked_sub(p.len())?;
                let attached = text.get(s..start) == Some(*p);
                let bounded = text[..s].chars().next_back().is_none_or(|c| !c.is_alphanumeric());
                (attached && bounded).then_some(s)
            })
            .unwrap_or(start);
        out.push(EntityMention::new(text, MentionKind::Number, prefix_start, end));
        i = end;
    }
    out
}

fn digits_end(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    i
}

/// Whether `text` mentions a calendar date: a month name, a `d/m/y` style
/// token, or a plausible year.
pub fn contains_date(text: &str) -> bool {
    let month = word_spans(text).any(|(s, e)| {
        let core = text[s..e].trim_matches(|c: char| !c.is_alphanumeric());
        core.chars().next().is_some_and(char::is_uppercase)
            && MONTHS.contains(&core.to_lowercase().as_str())
            && core != "May"
    });
    if month {
        return true;
    }
    let slash_date = word_spans(text).any(|(s, e)| {
        let tok = text[s..e].trim_end_matches(TRAILING);
        let parts: Vec<&str> = tok.split(['/', '-']).collect();
        parts.len() == 3
            && parts.iter().all(|p| !p.is_empty() && p.len() <= 4 && p.bytes().all(|b| b.is_ascii_digit()))
    });
    slash_date
        || extract_numbers(text).iter().any(|m| {
            m.canonical.len() == 4
                && m.surface.len() == 4
                && m.canonical.parse::<u32>().is_ok_and(|y| (1800..=2099).contains(&y))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn surfaces(ms: &[EntityMention]) -> Vec<&str> {
        ms.iter().map(|m| m.surface.as_str()).collect()
    }

    #[test]
    fn honorific_prefixed_judge_name() {
        let ms = extract_entities("the Honorable Aiyar, N. Chandrasekhara entered");
        assert_eq!(surfaces(&ms), vec!["Aiyar, N. Chandrasekhara"]);
        assert_eq!(ms[0].canonical, "aiyar, n. chandrasekhara");
    }

    #[test]
    fn no_entities() {
        assert!(extract_entities("").is_empty());
        assert!(extract_entities("the quick brown fox").is_empty());
        assert!(extract_entities("The quick brown fox jumped.").is_empty());
    }

    #[test]
    fn hallucinated_judge_sentence() {
        let text = "On February 1, 2019, the Honorable Chandrasekhar A. Lama of the Presidency \
                    of the United Kingdom entered a final judgment against W.H. King......";
        let ms = extract_entities(text);
        assert_eq!(
            surfaces(&ms),
            vec!["Chandrasekhar A. Lama", "Presidency", "United Kingdom", "W.H. King"]
        );
    }

    #[test]
    fn acronyms_and_initial_words() {
        let ms = extract_entities("IPC applies. Bombay High Court ruled. He then left for Delhi.");
        assert_eq!(surfaces(&ms), vec!["IPC", "Bombay High Court", "Delhi"]);
    }

    #[test]
    fn list_commas_split_entities() {
        let ms = extract_entities("Witnesses came from Delhi, Madras and Calcutta.");
        assert_eq!(surfaces(&ms), vec!["Delhi", "Madras", "Calcutta"]);
    }

    #[test]
    fn parenthesis_and_possessive() {
        let ms = extract_entities("the Court's order (Bombay) stood");
        assert_eq!(surfaces(&ms), vec!["Court", "Bombay"]);
    }

    #[test]
    fn numbers_from_hallucination_example() {
        let ms = extract_numbers("Rs 29,500 under Section 387");
        let canon: Vec<&str> = ms.iter().map(|m| m.canonical.as_str()).collect();
        assert_eq!(canon, vec!["29500", "387"]);
        assert_eq!(ms[0].surface, "29,500");
    }

    #[test]
    fn number_edge_cases() {
        assert!(extract_numbers("no numerals here").is_empty());
        let ms = extract_numbers("3.5 per cent");
        assert_eq!(ms[0].canonical, "3.5");
        let ms = extract_numbers("paid Rs.1,00,000. Then $40 and section 387.");
        assert_eq!(ms.len(), 3);
        assert_eq!(ms[0].surface, "Rs.1,00,000");
        assert_eq!(ms[0].canonical, "100000");
        assert_eq!(ms[1].surface, "$40");
        assert_eq!(ms[2].surface, "387");
        let ms = extract_numbers("February 1, 2020");
        let canon: Vec<&str> = ms.iter().map(|m| m.canonical.as_str()).collect();
        assert_eq!(canon, vec!["1", "2020"]);
    }

    #[test]
    fn dates() {
        assert!(contains_date("decided on 12 March 1951"));
        assert!(contains_date("filed 12/03/1951"));
        assert!(contains_date("in 1951 the appeal"));
        assert!(!contains_date("Rs. 29,500 was paid"));
        assert!(!contains_date("it may rain"));
    }

    #[test]
    fn mentions_are_sorted() {
        let r = BuiltinRecognizer::default();
        let ms = r.mentions("Mr. Rao paid 500 to Singh").unwrap();
        let kinds: Vec<MentionKind> = ms.iter().map(|m| m.kind).collect();
        assert_eq!(
            kinds,
            vec![MentionKind::NamedEntity, MentionKind::Number, MentionKind::NamedEntity]
        );
    }

    proptest! {
        #[test]
        fn spans_match_surface(s in "[A-Za-z0-9,. $()\n]{0,120}") {
            let r = BuiltinRecognizer::default();
            for m in r.mentions(&s).unwrap() {
                prop_assert_eq!(&s[m.span.0..m.span.1], m.surface.as_str());
                prop_assert!(!m.canonical.is_empty());
                if m.kind == MentionKind::Number {
                    prop_assert!(m.canonical.chars().all(|c| c.is_ascii_digit() || c == '.'));
                }
            }
        }

        #[test]
        fn deterministic(s in "[A-Za-z0-9,. ]{0,80}") {
            let r = BuiltinRecognizer::default();
            prop_assert_eq!(r.mentions(&s).unwrap(), r.mentions(&s).unwrap());
        }

        #[test]
        fn commutes_with_blank_line_concat(a in "[A-Z][a-zA-Z0-9, ]{0,40}\\.", b in "[A-Z][a-zA-Z0-9, ]{0,40}\\.") {
            let r = BuiltinRecognizer::default();
            let joined = alloc::format!("{a}\n\n{b}");
            let shift = a.len() + 2;
            let mut expected = r.mentions(&a).unwrap();
            expected.extend(r.mentions(&b).unwrap().into_iter().map(|mut m| {
                m.span = (m.span.0 + shift, m.span.1 + shift);
                m
            }));
            prop_assert_eq!(r.mentions(&joined).unwrap(), expected);
        }
    }
}
