//! Serialized forms of summaries, metric reports, tables, audits and
//! correction ledgers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use veridict_core::corrector::ReplacementLedger;
use veridict_core::evalreport::{
    fleiss_kappa, human_eval_aggregate, human_eval_best, paired_t_test, paired_values, ComparisonTable, HumanEvalSheet,
    HumanMetric, TTest,
};
use veridict_core::metrics::{AuditReport, Metric, MetricReport};
use veridict_core::orchestrator::CandidateSummary;
use veridict_core::recognizers::EntityMention;

use crate::error::{io_err, Error, Result};

/// One line of a summaries JSON Lines file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub pair_id: String,
    pub method_id: String,
    pub text: String,
    #[serde(default)]
    pub chunk_targets: Vec<usize>,
    #[serde(default)]
    pub backend_metadata: BTreeMap<String, String>,
}

impl From<CandidateSummary> for SummaryRecord {
    fn from(c: CandidateSummary) -> Self {
        Self {
            pair_id: c.pair_id,
            method_id: c.method_id,
            text: c.text,
            chunk_targets: c.chunk_targets,
            backend_metadata: c.backend_metadata,
        }
    }
}

/// Metrics present in any report, in column order.
pub fn present_metrics(reports: &[MetricReport]) -> Vec<Metric> {
    let seen: BTreeSet<Metric> = reports.iter().flat_map(|r| r.values.keys().copied()).collect();
    Metric::ALL.into_iter().filter(|m| seen.contains(m)).collect()
}

/// CSV with columns `pair_id, method_id` followed by one column per metric.
pub fn write_metric_csv(out: &mut dyn Write, reports: &[MetricReport]) -> Result<()> {
    let metrics = present_metrics(reports);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["pair_id".to_string(), "method_id".to_string()];
    header.extend(metrics.iter().map(|m| m.name().to_string()));
    w.write_record(&header)?;
    for r in reports {
        let mut row = vec![r.pair_id.clone(), r.method_id.clone()];
        row.extend(metrics.iter().map(|m| r.get(*m).map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&row)?;
    }
    w.flush().map_err(io_err("<output>"))?;
    Ok(())
}

pub fn read_metric_csv(path: &Path) -> Result<Vec<MetricReport>> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    read_metric_csv_from(file, path)
}

fn read_metric_csv_from(input: impl Read, path: &Path) -> Result<Vec<MetricReport>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let parse_err = |line: usize, message: String| Error::Parse { path: path.to_path_buf(), line, message };
    if headers.get(0) != Some("pair_id") || headers.get(1) != Some("method_id") {
        return Err(parse_err(1, "expected pair_id,method_id as the first columns".into()));
    }
    let metrics = headers
        .iter()
        .skip(2)
        .map(|h| h.parse::<Metric>().map_err(|e| parse_err(1, e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let mut values = BTreeMap::new();
        for (m, cell) in metrics.iter().zip(row.iter().skip(2)) {
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| parse_err(line, format!("bad value {cell:?} for {m}")))?;
            values.insert(*m, v);
        }
        out.push(MetricReport {
            pair_id: row.get(0).unwrap_or_default().to_string(),
            method_id: row.get(1).unwrap_or_default().to_string(),
            values,
        });
    }
    Ok(out)
}

pub fn metric_json(r: &MetricReport) -> Value {
    let mut m = Map::new();
    m.insert("pair_id".into(), r.pair_id.clone().into());
    m.insert("method_id".into(), r.method_id.clone().into());
    for (k, v) in &r.values {
        m.insert(k.name().into(), (*v).into());
    }
    Value::Object(m)
}

/// Paired t-test of every method against `baseline`, per metric. Only
/// methods sharing every pair id with the baseline are tested.
pub fn significance(
    reports: &[MetricReport],
    table: &ComparisonTable,
    baseline: &str,
    alpha: f64,
) -> Result<BTreeMap<(String, Metric), TTest>> {
    if !table.methods.iter().any(|m| m == baseline) {
        return Err(Error::Input(format!("baseline method {baseline} has no reports")));
    }
    let mut out = BTreeMap::new();
    for method in table.methods.iter().filter(|m| *m != baseline) {
        for &metric in &table.metrics {
            let (a, b) = paired_values(reports, method, baseline, metric)?;
            out.insert((method.clone(), metric), paired_t_test(&a, &b, alpha)?);
        }
    }
    Ok(out)
}

/// Significantly higher than the baseline: two-sided test passed and the
/// mean difference points upward.
fn higher(t: &TTest) -> bool {
    t.significant && t.t > 0.0
}

/// Markdown table; family-best cells are bold, `†` marks a significant
/// improvement over the baseline.
pub fn comparison_markdown(table: &ComparisonTable, sig: Option<&BTreeMap<(String, Metric), TTest>>) -> String {
    let mut s = String::new();
    let _ = write!(s, "| method | family |");
    for m in &table.metrics {
        let _ = write!(s, " {m} |");
    }
    s.push('\n');
    s.push_str("|---|---|");
    s.push_str(&"---:|".repeat(table.metrics.len()));
    s.push('\n');
    for method in &table.methods {
        let _ = write!(s, "| {method} | {} |", table.family_of(method));
        for &m in &table.metrics {
            let v = table.cell(method, m).unwrap_or(f64::NAN);
            let mut cell = format!("{v:.4}");
            if sig.and_then(|g| g.get(&(method.clone(), m))).is_some_and(higher) {
                cell.push('†');
            }
            if table.is_best(method, m) {
                cell = format!("**{cell}**");
            }
            let _ = write!(s, " {cell} |");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "\n{} pairs per method.", table.n_pairs);
    s
}

/// Long-format CSV: one row per (method, metric).
pub fn comparison_csv(
    out: &mut dyn Write,
    table: &ComparisonTable,
    sig: Option<&BTreeMap<(String, Metric), TTest>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method_id", "family", "metric", "mean", "best", "t", "p_value", "significantly_higher"])?;
    for method in &table.methods {
        for &m in &table.metrics {
            let t = sig.and_then(|g| g.get(&(method.clone(), m)));
            w.write_record([
                method.clone(),
                table.family_of(method).to_string(),
                m.name().to_string(),
                table.cell(method, m).map(|v| v.to_string()).unwrap_or_default(),
                table.is_best(method, m).to_string(),
                t.map(|t| t.t.to_string()).unwrap_or_default(),
                t.map(|t| t.p.to_string()).unwrap_or_default(),
                t.map(|t| higher(t).to_string()).unwrap_or_default(),
            ])?;
        }
    }
    w.flush().map_err(io_err("<output>"))?;
    Ok(())
}

#[derive(Deserialize)]
struct HumanRow {
    document_id: String,
    method_id: String,
    annotator_id: String,
    metric: String,
    score: u8,
}

/// Long-format human-evaluation CSV into one sheet per
/// (document, method, annotator); every sheet needs all four metrics.
pub fn read_human_csv(path: &Path) -> Result<Vec<HumanEvalSheet>> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut r = csv::Reader::from_reader(file);
    let parse_err = |line: usize, message: String| Error::Parse { path: path.to_path_buf(), line, message };
    let mut grouped: BTreeMap<(String, String, String), BTreeMap<HumanMetric, u8>> = BTreeMap::new();
    for (i, row) in r.deserialize::<HumanRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| parse_err(line, e.to_string()))?;
        let metric: HumanMetric = row.metric.parse().map_err(|e: veridict_core::Error| parse_err(line, e.to_string()))?;
        let slot = grouped.entry((row.document_id, row.method_id, row.annotator_id)).or_default();
        if slot.insert(metric, row.score).is_some() {
            return Err(parse_err(line, format!("duplicate {metric} score")));
        }
    }
    grouped
        .into_iter()
        .map(|((doc, method, annotator), scores)| {
            let get = |m: HumanMetric| {
                scores.get(&m).copied().ok_or_else(|| {
                    Error::Input(format!("{}: {doc}/{method}/{annotator} has no {m} score", path.display()))
                })
            };
            let (i, r, f, c) = (
                get(HumanMetric::Informativeness)?,
                get(HumanMetric::Redundancy)?,
                get(HumanMetric::Factuality)?,
                get(HumanMetric::Coherence)?,
            );
            HumanEvalSheet::new(doc, method, annotator, i, r, f, c).map_err(Error::from)
        })
        .collect()
}

/// Mean scores per method with best markers (lowest for redundancy), then
/// one Fleiss kappa per metric.
pub fn human_markdown(sheets: &[HumanEvalSheet]) -> String {
    let means = human_eval_aggregate(sheets);
    let best = human_eval_best(&means);
    let mut s = String::from("| method |");
    for m in HumanMetric::ALL {
        let _ = write!(s, " {m} |");
    }
    s.push_str("\n|---|");
    s.push_str(&"---:|".repeat(HumanMetric::ALL.len()));
    s.push('\n');
    for (method, row) in &means {
        let _ = write!(s, "| {method} |");
        for m in HumanMetric::ALL {
            let cell = format!("{:.2}", row[&m]);
            if best.contains(&(method.clone(), m)) {
                let _ = write!(s, " **{cell}** |");
            } else {
                let _ = write!(s, " {cell} |");
            }
        }
        s.push('\n');
    }
    s.push_str("\nFleiss kappa:");
    for m in HumanMetric::ALL {
        match fleiss_kappa(sheets, m) {
            Ok(k) => {
                let _ = write!(s, " {m}={k:.3}");
            }
            Err(e) => {
                let _ = write!(s, " {m}=n/a ({e})");
            }
        }
    }
    s.push('\n');
    s
}

fn mention_json(m: &EntityMention) -> Value {
    serde_json::json!({
        "surface": m.surface,
        "kind": m.kind.as_str(),
        "start": m.span.0,
        "end": m.span.1,
    })
}

pub fn audit_json(pair_id: &str, method_id: &str, a: &AuditReport) -> Value {
    serde_json::json!({
        "pair_id": pair_id,
        "method_id": method_id,
        "clean": a.is_clean(),
        "flagged_sentences": a.flagged_sentences.iter().map(|f| serde_json::json!({
            "index": f.index,
            "text": f.text,
            "nli_score": f.nli_score,
        })).collect::<Vec<_>>(),
        "unmatched_entities": a.unmatched_entities.iter().map(mention_json).collect::<Vec<_>>(),
        "unmatched_numbers": a.unmatched_numbers.iter().map(mention_json).collect::<Vec<_>>(),
    })
}

pub fn ledger_json(pair_id: &str, method_id: &str, l: &ReplacementLedger) -> Value {
    serde_json::json!({
        "pair_id": pair_id,
        "method_id": method_id,
        "replacements": l.entries.iter().map(|e| serde_json::json!({
            "original": mention_json(&e.original),
            "replacement": mention_json(&e.replacement),
            "written": e.written,
            "similarity": e.similarity,
            "spans_rewritten": e.spans_rewritten,
        })).collect::<Vec<_>>(),
        "unrepairable": l.unrepairable.iter().map(mention_json).collect::<Vec<_>>(),
    })
}
