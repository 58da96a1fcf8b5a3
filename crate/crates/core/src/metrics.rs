//! TREC-style effectiveness metrics.
//!
//! Conventions: relevance > 0 is relevant; unjudged documents are non-relevant;
//! DCG uses linear gain with a `log2(rank + 1)` discount; queries judged in the
//! qrels but missing from the run score 0; run queries without judgments are
//! skipped with a warning (or rejected in strict mode). Within a query the run is
//! ordered by score descending, ties by ascending doc id.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};
use crate::ranking::{RankedList, ScoredDoc};
use crate::scalar::Scalar;

/// Graded judgments: query id -> doc id -> grade.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a judgment; returns `false` if the pair was already judged.
    pub fn insert(&mut self, query: &str, doc: &str, grade: u32) -> bool {
        let q = self.judgments.entry(query.to_string()).or_default();
        if q.contains_key(doc) {
            return false;
        }
        q.insert(doc.to_string(), grade);
        true
    }

    pub fn grade(&self, query: &str, doc: &str) -> u32 {
        self.judgments
            .get(query)
            .and_then(|q| q.get(doc))
            .copied()
            .unwrap_or(0)
    }

    pub fn query(&self, query: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(query)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, u32)> {
        self.judgments
            .iter()
            .flat_map(|(q, docs)| docs.iter().map(move |(d, &g)| (q.as_str(), d.as_str(), g)))
    }

    pub fn len(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub doc_id: String,
    pub rank: usize,
    pub score: f64,
}

/// Ranked output for many queries, in TREC run-file shape.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunFile {
    pub queries: BTreeMap<String, Vec<RunEntry>>,
}

impl RunFile {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a run from ranked lists, numbering ranks 1..n in list order.
    pub fn from_ranked<T: Scalar>(lists: &[RankedList<T>]) -> Self {
        let mut run = Self::new();
        for list in lists {
            let entries = list
                .hits
                .iter()
                .enumerate()
                .map(|(i, h)| RunEntry {
                    doc_id: h.doc_id.clone(),
                    rank: i + 1,
                    score: h.score.as_f64(),
                })
                .collect();
            run.queries.insert(list.query_id.clone(), entries);
        }
        run
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.queries.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.queries.values().all(Vec::is_empty)
    }

    /// Doc ids for `query` in evaluation order (score descending, id ascending).
    pub fn ranking(&self, query: &str) -> Vec<&str> {
        let Some(entries) = self.queries.get(query) else {
            return Vec::new();
        };
        let mut refs: Vec<&RunEntry> = entries.iter().collect();
        refs.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.doc_id.cmp(&b.doc_id))
        });
        refs.into_iter().map(|e| e.doc_id.as_str()).collect()
    }

    /// The run for one query as a ranked list (evaluation order).
    pub fn ranked_list(&self, query: &str) -> RankedList<f64> {
        let entries = self.queries.get(query);
        let mut hits: Vec<ScoredDoc<f64>> = entries
            .into_iter()
            .flatten()
            .map(|e| ScoredDoc {
                doc_id: e.doc_id.clone(),
                score: e.score,
            })
            .collect();
        hits.sort_by(|a, b| crate::ranking::rank_order(a.score, &a.doc_id, b.score, &b.doc_id));
        RankedList::new(query, hits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Mrr,
    Recall,
    Ndcg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MetricSpec {
    pub metric: Metric,
    pub k: usize,
}

impl MetricSpec {
    pub const fn new(metric: Metric, k: usize) -> Self {
        Self { metric, k }
    }

    /// MRR@10, Recall@50, Recall@1000, nDCG@10.
    pub fn standard_suite() -> Vec<MetricSpec> {
        vec![
            Self::new(Metric::Mrr, 10),
            Self::new(Metric::Recall, 50),
            Self::new(Metric::Recall, 1000),
            Self::new(Metric::Ndcg, 10),
        ]
    }

    /// MRR@10, Recall@1000, nDCG@10: the columns of the diagnostic tables.
    pub fn diagnostic_suite() -> Vec<MetricSpec> {
        vec![
            Self::new(Metric::Mrr, 10),
            Self::new(Metric::Recall, 1000),
            Self::new(Metric::Ndcg, 10),
        ]
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.metric {
            Metric::Mrr => "MRR",
            Metric::Recall => "Recall",
            Metric::Ndcg => "nDCG",
        };
        write!(f, "{name}@{}", self.k)
    }
}

impl FromStr for MetricSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad =
            || Error::InvalidConfig(format!("metric {s:?} is not NAME@K (MRR, Recall, nDCG)"));
        let (name, k) = s.split_once('@').ok_or_else(bad)?;
        let k: usize = k.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        let metric = match name.to_ascii_lowercase().as_str() {
            "mrr" => Metric::Mrr,
            "recall" | "r" => Metric::Recall,
            "ndcg" => Metric::Ndcg,
            _ => return Err(bad()),
        };
        Ok(Self { metric, k })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    /// Treat run queries absent from the qrels as an error instead of skipping them.
    pub strict_missing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub spec: MetricSpec,
    pub per_query: BTreeMap<String, f64>,
    pub aggregate: f64,
    pub query_count: usize,
}

fn mrr(ranking: &[&str], judged: &BTreeMap<String, u32>, k: usize) -> Option<f64> {
    Some(
        ranking
            .iter()
            .take(k)
            .position(|d| judged.get(*d).copied().unwrap_or(0) > 0)
            .map_or(0.0, |i| 1.0 / (i + 1) as f64),
    )
}

fn recall(ranking: &[&str], judged: &BTreeMap<String, u32>, k: usize) -> Option<f64> {
    let relevant = judged.values().filter(|&&g| g > 0).count();
    if relevant == 0 {
        return None;
    }
    let found = ranking
        .iter()
        .take(k)
        .filter(|d| judged.get(**d).copied().unwrap_or(0) > 0)
        .count();
    Some(found as f64 / relevant as f64)
}

fn ndcg(ranking: &[&str], judged: &BTreeMap<String, u32>, k: usize) -> Option<f64> {
    let discount = |i: usize| 1.0 / ((i + 2) as f64).log2();
    let dcg: f64 = ranking
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, d)| f64::from(judged.get(*d).copied().unwrap_or(0)) * discount(i))
        .sum();
    let mut ideal: Vec<u32> = judged.values().copied().filter(|&g| g > 0).collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| f64::from(g) * discount(i))
        .sum();
    Some(if idcg == 0.0 { 0.0 } else { dcg / idcg })
}

fn check_run_queries(run: &RunFile, qrels: &Qrels, opts: EvalOptions) -> Result<()> {
    for q in run.query_ids() {
        if qrels.query(q).is_none() {
            if opts.strict_missing {
                return Err(Error::QueryMissingFromQrels(q.to_string()));
            }
            warn!("query {q} is in the run but has no judgments; skipped");
        }
    }
    Ok(())
}

fn compute(run: &RunFile, qrels: &Qrels, spec: MetricSpec) -> MetricReport {
    let f = match spec.metric {
        Metric::Mrr => mrr,
        Metric::Recall => recall,
        Metric::Ndcg => ndcg,
    };
    let mut per_query = BTreeMap::new();
    for q in qrels.query_ids() {
        let judged = qrels.query(q).expect("iterating qrels keys");
        let ranking = run.ranking(q);
        match f(&ranking, judged, spec.k) {
            Some(v) => {
                per_query.insert(q.to_string(), v);
            }
            None => warn!("query {q} has no relevant documents; skipped for {spec}"),
        }
    }
    let query_count = per_query.len();
    let aggregate = if query_count == 0 {
        0.0
    } else {
        per_query.values().sum::<f64>() / query_count as f64
    };
    MetricReport {
        spec,
        per_query,
        aggregate,
        query_count,
    }
}

pub fn metric_at_k(
    run: &RunFile,
    qrels: &Qrels,
    spec: MetricSpec,
    opts: EvalOptions,
) -> Result<MetricReport> {
    check_run_queries(run, qrels, opts)?;
    Ok(compute(run, qrels, spec))
}

pub fn mrr_at_k(run: &RunFile, qrels: &Qrels, k: usize) -> Result<MetricReport> {
    metric_at_k(
        run,
        qrels,
        MetricSpec::new(Metric::Mrr, k),
        EvalOptions::default(),
    )
}

pub fn recall_at_k(run: &RunFile, qrels: &Qrels, k: usize) -> Result<MetricReport> {
    metric_at_k(
        run,
        qrels,
        MetricSpec::new(Metric::Recall, k),
        EvalOptions::default(),
    )
}

pub fn ndcg_at_k(run: &RunFile, qrels: &Qrels, k: usize) -> Result<MetricReport> {
    metric_at_k(
        run,
        qrels,
        MetricSpec::new(Metric::Ndcg, k),
        EvalOptions::default(),
    )
}

/// All requested metrics over one run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub reports: Vec<MetricReport>,
}

impl EvaluationReport {
    pub fn get(&self, spec: MetricSpec) -> Option<&MetricReport> {
        self.reports.iter().find(|r| r.spec == spec)
    }

    pub fn aggregate(&self, spec: MetricSpec) -> Option<f64> {
        self.get(spec).map(|r| r.aggregate)
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let mut queries: Vec<&str> = self
            .reports
            .iter()
            .flat_map(|r| r.per_query.keys().map(String::as_str))
            .collect();
        queries.sort_unstable();
        queries.dedup();
        let mut rows = vec![std::iter::once("query".to_string())
            .chain(self.reports.iter().map(|r| r.spec.to_string()))
            .collect::<Vec<_>>()];
        for q in queries {
            let mut row = vec![q.to_string()];
            for r in &self.reports {
                row.push(
                    r.per_query
                        .get(q)
                        .map_or_else(|| "-".to_string(), |v| format!("{v:.6}")),
                );
            }
            rows.push(row);
        }
        let mut all = vec!["all".to_string()];
        all.extend(self.reports.iter().map(|r| format!("{:.6}", r.aggregate)));
        rows.push(all);
        let mut count = vec!["num_q".to_string()];
        count.extend(self.reports.iter().map(|r| r.query_count.to_string()));
        rows.push(count);
        rows
    }

    /// Tab-separated per-query table followed by `all` and `num_q` rows.
    pub fn to_tsv(&self) -> String {
        self.rows().iter().map(|r| r.join("\t") + "\n").collect()
    }

    /// Same content, column-aligned for reading.
    pub fn to_table(&self) -> String {
        align(&self.rows())
    }
}

/// Left-aligns the first column and right-aligns the rest.
pub fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(String::len)
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, v)| {
                if c == 0 {
                    format!("{v:<w$}", w = widths[c])
                } else {
                    format!("{v:>w$}", w = widths[c])
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Computes every spec over the run. Output is ordered by query id.
pub fn evaluate_run(
    run: &RunFile,
    qrels: &Qrels,
    specs: &[MetricSpec],
    opts: EvalOptions,
) -> Result<EvaluationReport> {
    if specs.is_empty() {
        return Err(Error::InvalidConfig("no metrics requested".into()));
    }
    check_run_queries(run, qrels, opts)?;
    if run.is_empty() {
        warn!("run is empty; every metric is 0");
    }
    Ok(EvaluationReport {
        reports: specs.iter().map(|&s| compute(run, qrels, s)).collect(),
    })
}
