//! Corpus directories and the JSON Lines interchange format.
//!
//! Directory layout: `<root>/<split>/judgement/<id>.txt` paired with
//! `<root>/<split>/summary/<id>.txt`, for any of the `train`, `test` and
//! `validation` splits that exist.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use veridict_core::corpus::{CorpusRecord, Source, Split};
use veridict_core::textproc::{parse_abbreviations, Segmenter};

use crate::error::{io_err, Error, Result};

pub const DOCUMENT_DIR: &str = "judgement";
pub const SUMMARY_DIR: &str = "summary";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonRecord {
    pub id: String,
    pub document: String,
    pub summary: String,
    pub split: String,
    pub source: String,
}

impl From<&CorpusRecord> for JsonRecord {
    fn from(r: &CorpusRecord) -> Self {
        Self {
            id: r.id.clone(),
            document: r.document_text.clone(),
            summary: r.gold_summary_text.clone(),
            split: r.split.to_string(),
            source: r.source.to_string(),
        }
    }
}

impl TryFrom<JsonRecord> for CorpusRecord {
    type Error = veridict_core::Error;
    fn try_from(j: JsonRecord) -> std::result::Result<Self, Self::Error> {
        CorpusRecord::new(j.id, j.document, j.summary, j.split.parse()?, j.source.parse()?)
    }
}

fn read_lossy(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// `<id>` for every `<id>.txt` in `dir`; empty when `dir` does not exist.
fn txt_ids(dir: &Path) -> Result<BTreeSet<String>> {
    if !dir.is_dir() {
        return Ok(BTreeSet::new());
    }
    let mut ids = BTreeSet::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.extension().is_some_and(|e| e == "txt") && path.is_file() {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                ids.insert(stem.to_string());
            }
        }
    }
    Ok(ids)
}

/// Loads every split present under `root`, sorted by id. An empty or
/// split-less directory yields no records.
pub fn load_corpus(root: &Path, source: Source) -> Result<Vec<CorpusRecord>> {
    if !root.is_dir() {
        return Err(Error::Io {
            path: root.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "corpus directory not found"),
        });
    }
    let mut records = Vec::new();
    for split in Split::ALL {
        let base = root.join(split.as_str());
        let (doc_dir, sum_dir) = (base.join(DOCUMENT_DIR), base.join(SUMMARY_DIR));
        let docs = txt_ids(&doc_dir)?;
        let sums = txt_ids(&sum_dir)?;
        if let Some(id) = docs.difference(&sums).next() {
            return Err(Error::MissingPair { dir: base, id: id.clone(), missing: "summary" });
        }
        if let Some(id) = sums.difference(&docs).next() {
            return Err(Error::MissingPair { dir: base, id: id.clone(), missing: "judgement" });
        }
        for id in docs {
            let doc_path = doc_dir.join(format!("{id}.txt"));
            let document = read_lossy(&doc_path)?;
            let summary = read_lossy(&sum_dir.join(format!("{id}.txt")))?;
            let record = CorpusRecord::new(id, document, summary, split, source)
                .map_err(|e| Error::Input(format!("{}: {e}", doc_path.display())))?;
            records.push(record);
        }
    }
    sort_and_check(&mut records)?;
    Ok(records)
}

fn sort_and_check(records: &mut [CorpusRecord]) -> Result<()> {
    records.sort_by(|a, b| a.id.cmp(&b.id).then(a.split.cmp(&b.split)));
    if let Some(w) = records.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(Error::DuplicateId(w[0].id.clone()));
    }
    Ok(())
}

pub fn write_corpus_dir(root: &Path, records: &[CorpusRecord]) -> Result<()> {
    for r in records {
        let base = root.join(r.split.as_str());
        for (sub, text) in [(DOCUMENT_DIR, &r.document_text), (SUMMARY_DIR, &r.gold_summary_text)] {
            let dir = base.join(sub);
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            let path = dir.join(format!("{}.txt", r.id));
            fs::write(&path, text).map_err(io_err(&path))?;
        }
    }
    Ok(())
}

/// Reads JSON Lines records; blank lines are skipped.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(out: &mut dyn Write, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(out);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(io_err("<output>"))?;
    }
    w.flush().map_err(io_err("<output>"))?;
    Ok(())
}

pub fn read_corpus_jsonl(path: &Path) -> Result<Vec<CorpusRecord>> {
    let rows: Vec<JsonRecord> = read_jsonl(path)?;
    let mut records = rows
        .into_iter()
        .enumerate()
        .map(|(i, j)| {
            CorpusRecord::try_from(j).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    sort_and_check(&mut records)?;
    Ok(records)
}

/// A directory is read with the split layout, a file as JSON Lines.
pub fn load_any(path: &Path, source: Source) -> Result<Vec<CorpusRecord>> {
    if path.is_file() {
        read_corpus_jsonl(path)
    } else {
        load_corpus(path, source)
    }
}

pub fn load_segmenter(abbreviations: Option<&Path>) -> Result<Segmenter> {
    match abbreviations {
        None => Ok(Segmenter::default()),
        Some(p) => Ok(Segmenter::with_abbreviations(parse_abbreviations(&read_lossy(p)?))),
    }
}

/// Files under `path` (or `path` itself) in a stable order, for hashing.
pub fn files_under(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut out = Vec::new();
    let mut stack = vec![path.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let p = entry.map_err(io_err(&dir))?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn put(root: &Path, split: &str, sub: &str, id: &str, text: &[u8]) {
        let d = root.join(split).join(sub);
        fs::create_dir_all(&d).unwrap();
        fs::write(d.join(format!("{id}.txt")), text).unwrap();
    }

    #[test]
    fn loads_pairs_sorted() {
        let t = tempfile::tempdir().unwrap();
        put(t.path(), "test", DOCUMENT_DIR, "b", b"Doc b.");
        put(t.path(), "test", SUMMARY_DIR, "b", b"Sum b.");
        put(t.path(), "train", DOCUMENT_DIR, "a", b"Doc a.");
        put(t.path(), "train", SUMMARY_DIR, "a", b"Sum \xff a.");
        let rs = load_corpus(t.path(), Source::InAbs).unwrap();
        assert_eq!(rs.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["a", "b"]);
        assert_eq!(rs[0].split, Split::Train);
        assert_eq!(rs[0].gold_summary_text, "Sum \u{FFFD} a.");
    }

    #[test]
    fn empty_directory_is_empty_corpus() {
        let t = tempfile::tempdir().unwrap();
        assert!(load_corpus(t.path(), Source::UkAbs).unwrap().is_empty());
    }

    #[test]
    fn missing_pair_names_id() {
        let t = tempfile::tempdir().unwrap();
        put(t.path(), "test", DOCUMENT_DIR, "X", b"Doc.");
        match load_corpus(t.path(), Source::InAbs) {
            Err(Error::MissingPair { id, missing, .. }) => assert_eq!((id.as_str(), missing), ("X", "summary")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_across_splits() {
        let t = tempfile::tempdir().unwrap();
        for split in ["train", "test"] {
            put(t.path(), split, DOCUMENT_DIR, "same", b"Doc.");
            put(t.path(), split, SUMMARY_DIR, "same", b"Sum.");
        }
        assert!(matches!(load_corpus(t.path(), Source::InAbs), Err(Error::DuplicateId(_))));
    }

    #[test]
    fn round_trips_through_dir_and_jsonl() {
        let t = tempfile::tempdir().unwrap();
        put(t.path(), "validation", DOCUMENT_DIR, "v1", b"The Court held.");
        put(t.path(), "validation", SUMMARY_DIR, "v1", b"Held.");
        put(t.path(), "test", DOCUMENT_DIR, "t1", b"Rs 29,500 paid.");
        put(t.path(), "test", SUMMARY_DIR, "t1", b"Paid.");
        let first = load_corpus(t.path(), Source::GovReport).unwrap();

        let copy = tempfile::tempdir().unwrap();
        write_corpus_dir(copy.path(), &first).unwrap();
        assert_eq!(load_corpus(copy.path(), Source::GovReport).unwrap(), first);

        let jl = copy.path().join("c.jsonl");
        let rows: Vec<JsonRecord> = first.iter().map(JsonRecord::from).collect();
        write_jsonl(&mut fs::File::create(&jl).unwrap(), &rows).unwrap();
        assert_eq!(read_corpus_jsonl(&jl).unwrap(), first);
        assert_eq!(load_any(&jl, Source::Generic).unwrap(), first);
    }

    #[test]
    fn bad_jsonl_reports_line() {
        let t = tempfile::tempdir().unwrap();
        let p = t.path().join("x.jsonl");
        fs::write(&p, "{\"id\":\"a\",\"document\":\"d\",\"summary\":\"s\",\"split\":\"test\",\"source\":\"generic\"}\n\nnot json\n").unwrap();
        match read_corpus_jsonl(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn abbreviation_file() {
        let t = tempfile::tempdir().unwrap();
        let p = t.path().join("abbr.txt");
        fs::write(&p, "# legal\nreg.\n").unwrap();
        let seg = load_segmenter(Some(&p)).unwrap();
        assert_eq!(seg.sentences("See reg. 5 of the Act. Done.").len(), 2);
        assert!(load_segmenter(Some(&t.path().join("nope"))).is_err());
    }
}
