//! Comparison tables over metric reports, paired significance tests and
//! human-evaluation aggregation with inter-annotator agreement.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::{Metric, MetricReport};

/// Per-method means over pairs with best-value markers per method family.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    /// Method ids in order of first appearance.
    pub methods: Vec<String>,
    pub metrics: Vec<Metric>,
    pub cells: BTreeMap<(String, Metric), f64>,
    /// (method, metric) cells holding the family maximum.
    pub best: BTreeSet<(String, Metric)>,
    pub families: BTreeMap<String, String>,
    pub n_pairs: usize,
}

impl ComparisonTable {
    pub fn cell(&self, method: &str, metric: Metric) -> Option<f64> {
        self.cells.get(&(method.to_string(), metric)).copied()
    }

    pub fn is_best(&self, method: &str, metric: Metric) -> bool {
        self.best.contains(&(method.to_string(), metric))
    }

    pub fn family_of(&self, method: &str) -> &str {
        self.families.get(method).map_or("", String::as_str)
    }
}

/// Averages reports per method. `families` maps method id to family name;
/// unmapped methods share the unnamed family. Every method must report the
/// same pair ids and the same metrics.
pub fn aggregate(reports: &[MetricReport], families: &BTreeMap<String, String>) -> Result<ComparisonTable> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("metric reports"));
    }
    let mut methods: Vec<String> = Vec::new();
    let mut by_method: BTreeMap<&str, BTreeMap<&str, &MetricReport>> = BTreeMap::new();
    for r in reports {
        if !by_method.contains_key(r.method_id.as_str()) {
            methods.push(r.method_id.clone());
        }
        let slot = by_method.entry(&r.method_id).or_default();
        if slot.insert(&r.pair_id, r).is_some() {
            return Err(Error::InvalidArgument(alloc::format!(
                "duplicate report for pair {} and method {}",
                r.pair_id, r.method_id
            )));
        }
    }
    let all_pairs: BTreeSet<&str> = reports.iter().map(|r| r.pair_id.as_str()).collect();
    let mut missing = Vec::new();
    for m in &methods {
        for p in &all_pairs {
            if !by_method[m.as_str()].contains_key(p) {
                missing.push((m.clone(), p.to_string()));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Coverage { missing });
    }
    let metrics: Vec<Metric> = reports.iter().flat_map(|r| r.values.keys().copied()).collect::<BTreeSet<_>>().into_iter().collect();
    for r in reports {
        if let Some(m) = metrics.iter().find(|m| !r.values.contains_key(m)) {
            return Err(Error::InvalidArgument(alloc::format!(
                "report for pair {} and method {} lacks {m}",
                r.pair_id, r.method_id
            )));
        }
    }

    let mut cells = BTreeMap::new();
    for m in &methods {
        let rows = &by_method[m.as_str()];
        for &metric in &metrics {
            let sum: f64 = rows.values().map(|r| r.values[&metric]).sum();
            cells.insert((m.clone(), metric), sum / rows.len() as f64);
        }
    }
    let family = |m: &str| families.get(m).map_or("", String::as_str);
    let mut best = BTreeSet::new();
    for &metric in &metrics {
        let mut top: BTreeMap<&str, f64> = BTreeMap::new();
        for m in &methods {
            let v = cells[&(m.clone(), metric)];
            let e = top.entry(family(m)).or_insert(v);
            *e = e.max(v);
        }
        for m in &methods {
            if cells[&(m.clone(), metric)] == top[family(m)] {
                best.insert((m.clone(), metric));
            }
        }
    }
    Ok(ComparisonTable {
        methods,
        metrics,
        cells,
        best,
        families: families.clone(),
        n_pairs: all_pairs.len(),
    })
}

/// Values of `metric` for two methods aligned on pair id.
pub fn paired_values(reports: &[MetricReport], method_a: &str, method_b: &str, metric: Metric) -> Result<(Vec<f64>, Vec<f64>)> {
    let collect = |method: &str| -> BTreeMap<&str, f64> {
        reports
            .iter()
            .filter(|r| r.method_id == method)
            .filter_map(|r| r.get(metric).map(|v| (r.pair_id.as_str(), v)))
            .collect()
    };
    let (a, b) = (collect(method_a), collect(method_b));
    let mut missing: Vec<(String, String)> = Vec::new();
    missing.extend(b.keys().filter(|p| !a.contains_key(*p)).map(|p| (method_a.to_string(), p.to_string())));
    missing.extend(a.keys().filter(|p| !b.contains_key(*p)).map(|p| (method_b.to_string(), p.to_string())));
    if !missing.is_empty() {
        return Err(Error::Coverage { missing });
    }
    Ok((a.values().copied().collect(), b.values().copied().collect()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub significant: bool,
}

/// Two-sided paired t-test on `a - b`. `significant` additionally requires
/// `mean(a) > mean(b)`.
pub fn paired_t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, got: n });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    let (t, p) = if var == 0.0 {
        if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(mean), 0.0)
        }
    } else {
        let t = mean / libm::sqrt(var / n as f64);
        (t, student_t_two_sided_p(t, (n - 1) as f64))
    };
    Ok(TTest { t, p, significant: p < alpha && mean > 0.0 })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(x, df / 2.0, 0.5).clamp(0.0, 1.0)
}

/// Lanczos approximation (g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = core::f64::consts::PI;
        return libm::log(pi / libm::sin(pi * x).abs()) - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * libm::log(2.0 * core::f64::consts::PI) + (x + 0.5) * libm::log(t) - t + libm::log(a)
}

/// `I_x(a, b)` by continued fraction (modified Lentz).
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * libm::log(x) + b * libm::log(1.0 - x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(x, a, b) / a
    } else {
        1.0 - front * beta_cf(1.0 - x, b, a) / b
    }
}

fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=1000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HumanMetric {
    Informativeness,
    Redundancy,
    Factuality,
    Coherence,
}

impl HumanMetric {
    pub const ALL: [HumanMetric; 4] = [
        HumanMetric::Informativeness,
        HumanMetric::Redundancy,
        HumanMetric::Factuality,
        HumanMetric::Coherence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HumanMetric::Informativeness => "informativeness",
            HumanMetric::Redundancy => "redundancy",
            HumanMetric::Factuality => "factuality",
            HumanMetric::Coherence => "coherence",
        }
    }

    /// Redundancy is better when lower.
    pub fn lower_is_better(self) -> bool {
        self == HumanMetric::Redundancy
    }
}

impl fmt::Display for HumanMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HumanMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        HumanMetric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown human-evaluation metric {s:?}")))
    }
}

/// One annotator's scores for one summary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HumanEvalSheet {
    pub document_id: String,
    pub method_id: String,
    pub annotator_id: String,
    scores: [u8; 4],
}

impl HumanEvalSheet {
    pub fn new(
        document_id: impl Into<String>,
        method_id: impl Into<String>,
        annotator_id: impl Into<String>,
        informativeness: u8,
        redundancy: u8,
        factuality: u8,
        coherence: u8,
    ) -> Result<Self> {
        let scores = [informativeness, redundancy, factuality, coherence];
        if let Some(&bad) = scores.iter().find(|s| !(1..=5).contains(*s)) {
            return Err(Error::ScoreOutOfRange(bad));
        }
        Ok(Self {
            document_id: document_id.into(),
            method_id: method_id.into(),
            annotator_id: annotator_id.into(),
            scores,
        })
    }

    pub fn score(&self, metric: HumanMetric) -> u8 {
        self.scores[metric as usize]
    }
}

/// Mean score per method per metric over every (document, annotator) sheet.
pub fn human_eval_aggregate(sheets: &[HumanEvalSheet]) -> BTreeMap<String, BTreeMap<HumanMetric, f64>> {
    let mut sums: BTreeMap<&str, ([u64; 4], usize)> = BTreeMap::new();
    for s in sheets {
        let e = sums.entry(&s.method_id).or_insert(([0; 4], 0));
        for (acc, v) in e.0.iter_mut().zip(s.scores) {
            *acc += u64::from(v);
        }
        e.1 += 1;
    }
    sums.into_iter()
        .map(|(m, (sum, n))| {
            let means = HumanMetric::ALL.into_iter().map(|k| (k, sum[k as usize] as f64 / n as f64)).collect();
            (m.to_string(), means)
        })
        .collect()
}

/// Methods holding the best mean per metric (minimum for redundancy).
pub fn human_eval_best(means: &BTreeMap<String, BTreeMap<HumanMetric, f64>>) -> BTreeSet<(String, HumanMetric)> {
    let mut best = BTreeSet::new();
    for k in HumanMetric::ALL {
        let vals = means.values().map(|m| m[&k]);
        let target = if k.lower_is_better() {
            vals.fold(f64::INFINITY, f64::min)
        } else {
            vals.fold(f64::NEG_INFINITY, f64::max)
        };
        best.extend(means.iter().filter(|(_, m)| m[&k] == target).map(|(name, _)| (name.clone(), k)));
    }
    best
}

/// Fleiss' kappa over an item-by-category count matrix. Every row must sum to
/// the same rater count (at least two).
pub fn fleiss_kappa_counts<R: AsRef<[usize]>>(matrix: &[R]) -> Result<f64> {
    if matrix.is_empty() {
        return Err(Error::EmptyInput("rated items"));
    }
    let n = matrix[0].as_ref().iter().sum::<usize>();
    for row in matrix {
        let r = row.as_ref().iter().sum::<usize>();
        if r != n {
            return Err(Error::UnbalancedRaters(n, r));
        }
    }
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, got: n });
    }
    let k = matrix.iter().map(|r| r.as_ref().len()).max().unwrap_or(0);
    let items = matrix.len() as f64;
    let nf = n as f64;
    let mut col = alloc::vec![0usize; k];
    let mut p_bar = 0.0;
    for row in matrix {
        let row = row.as_ref();
        let sq: usize = row.iter().map(|c| c * c).sum();
        p_bar += (sq - n) as f64 / (nf * (nf - 1.0));
        for (j, c) in row.iter().enumerate() {
            col[j] += c;
        }
    }
    p_bar /= items;
    let p_e: f64 = col.iter().map(|&c| c as f64 / (items * nf)).map(|p| p * p).sum();
    if (1.0 - p_e).abs() < 1e-15 {
        return Err(Error::DegenerateAgreement);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Fleiss' kappa for one metric, treating each (document, method) pair as an
/// item and scores 1 to 5 as categories.
pub fn fleiss_kappa(sheets: &[HumanEvalSheet], metric: HumanMetric) -> Result<f64> {
    let mut items: BTreeMap<(&str, &str), [usize; 5]> = BTreeMap::new();
    for s in sheets {
        items.entry((&s.document_id, &s.method_id)).or_insert([0; 5])[usize::from(s.score(metric)) - 1] += 1;
    }
    let matrix: Vec<[usize; 5]> = items.into_values().collect();
    fleiss_kappa_counts(&matrix)
}
