//! Drivers for the backend diagnostics: centroid coverage, query truncation,
//! PLAID parameter grids, and run-to-run agreement.

use std::collections::{BTreeMap, HashSet};

use log::warn;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::backend::{run_queries, PlaidBackend, Retriever};
use crate::corpus::{Corpus, QuerySet};
use crate::error::{Error, Result};
use crate::metrics::{align, evaluate_run, EvalOptions, Metric, MetricSpec, Qrels, RunFile};
use crate::plaid::{PlaidIndex, PlaidSearchParams};
use crate::scalar::Scalar;

/// Default number of documents sampled for coverage analysis.
pub const DEFAULT_COVERAGE_SAMPLE: usize = 5000;

const MRR10: MetricSpec = MetricSpec::new(Metric::Mrr, 10);
const RECALL1000: MetricSpec = MetricSpec::new(Metric::Recall, 1000);
const NDCG10: MetricSpec = MetricSpec::new(Metric::Ndcg, 10);

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

fn tsv(rows: &[Vec<String>]) -> String {
    rows.iter().map(|r| r.join("\t") + "\n").collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocCoverage {
    pub doc_id: String,
    pub unique: usize,
    pub rows: usize,
}

/// How many distinct centroids each sampled document occupies.
///
/// `coverage_fraction` is mean unique / mean rows; for fixed-length documents
/// this is unique / C.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub per_doc: Vec<DocCoverage>,
    pub mean_unique: f64,
    pub median_unique: f64,
    pub min_unique: usize,
    pub max_unique: usize,
    pub mean_rows: f64,
    pub coverage_fraction: f64,
    pub sample_size: usize,
}

impl CoverageReport {
    pub fn summary_rows(&self) -> Vec<Vec<String>> {
        vec![
            vec!["sample_size".into(), self.sample_size.to_string()],
            vec!["mean_unique".into(), fmt6(self.mean_unique)],
            vec!["median_unique".into(), fmt6(self.median_unique)],
            vec!["min_unique".into(), self.min_unique.to_string()],
            vec!["max_unique".into(), self.max_unique.to_string()],
            vec!["mean_rows".into(), fmt6(self.mean_rows)],
            vec!["coverage_fraction".into(), fmt6(self.coverage_fraction)],
        ]
    }

    /// Summary rows, then one `doc_id unique rows` row per sampled document.
    pub fn to_tsv(&self) -> String {
        let mut rows = self.summary_rows();
        rows.push(vec!["doc_id".into(), "unique".into(), "rows".into()]);
        rows.extend(
            self.per_doc
                .iter()
                .map(|d| vec![d.doc_id.clone(), d.unique.to_string(), d.rows.to_string()]),
        );
        tsv(&rows)
    }
}

fn sample_ordinals(n: usize, requested: usize, seed: u64) -> Vec<usize> {
    if requested >= n {
        if requested > n {
            warn!("coverage sample {requested} exceeds {n} documents; using all");
        }
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, n, requested).into_vec();
    picked.sort_unstable();
    picked
}

fn coverage_from_codes<'a>(
    items: impl Iterator<Item = (&'a str, &'a [u32])>,
) -> Result<CoverageReport> {
    let mut per_doc = Vec::new();
    for (id, codes) in items {
        let mut u = codes.to_vec();
        u.sort_unstable();
        u.dedup();
        per_doc.push(DocCoverage {
            doc_id: id.to_string(),
            unique: u.len(),
            rows: codes.len(),
        });
    }
    if per_doc.is_empty() {
        return Err(Error::EmptyIndex);
    }
    let n = per_doc.len() as f64;
    let mean_unique = per_doc.iter().map(|d| d.unique as f64).sum::<f64>() / n;
    let mean_rows = per_doc.iter().map(|d| d.rows as f64).sum::<f64>() / n;
    let mut sorted: Vec<usize> = per_doc.iter().map(|d| d.unique).collect();
    sorted.sort_unstable();
    let mid = sorted.len() / 2;
    let median_unique = if sorted.len() % 2 == 1 {
        sorted[mid] as f64
    } else {
        (sorted[mid - 1] + sorted[mid]) as f64 / 2.0
    };
    Ok(CoverageReport {
        mean_unique,
        median_unique,
        min_unique: sorted[0],
        max_unique: sorted[sorted.len() - 1],
        mean_rows,
        coverage_fraction: mean_unique / mean_rows,
        sample_size: per_doc.len(),
        per_doc,
    })
}

/// Coverage of the indexed documents, from their stored centroid codes.
pub fn centroid_coverage<T: Scalar>(
    index: &PlaidIndex<T>,
    sample_size: usize,
    seed: u64,
) -> Result<CoverageReport> {
    let picked = sample_ordinals(index.doc_count(), sample_size, seed);
    let codes = picked
        .iter()
        .map(|&d| {
            index
                .centroid_codes(d)
                .map(|c| (index.doc_ids()[d].as_str(), c))
        })
        .collect::<Result<Vec<_>>>()?;
    coverage_from_codes(codes.into_iter())
}

/// Coverage of another corpus (e.g. a pooled variant) under the index's centroids.
pub fn centroid_coverage_of<T: Scalar>(
    index: &PlaidIndex<T>,
    corpus: &Corpus<T>,
    sample_size: usize,
    seed: u64,
) -> Result<CoverageReport> {
    let codes = index.assign_corpus(corpus)?;
    let picked = sample_ordinals(corpus.len(), sample_size, seed);
    coverage_from_codes(
        picked
            .iter()
            .map(|&d| (corpus.doc_id(d), codes[d].as_slice())),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub length: usize,
    pub mrr_at_10: f64,
    pub recall_at_1000: f64,
    pub ndcg_at_10: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    fn cells(&self) -> Vec<Vec<String>> {
        let mut rows = vec![vec![
            "length".to_string(),
            MRR10.to_string(),
            RECALL1000.to_string(),
            NDCG10.to_string(),
        ]];
        rows.extend(self.rows.iter().map(|r| {
            vec![
                r.length.to_string(),
                fmt6(r.mrr_at_10),
                fmt6(r.recall_at_1000),
                fmt6(r.ndcg_at_10),
            ]
        }));
        rows
    }

    pub fn to_tsv(&self) -> String {
        tsv(&self.cells())
    }

    pub fn to_table(&self) -> String {
        align(&self.cells())
    }
}

fn truncate_queries<T: Scalar>(queries: &QuerySet<T>, length: usize) -> Result<QuerySet<T>> {
    let docs = queries.docs().iter().map(|q| q.prefix(length)).collect();
    Corpus::new(
        queries.doc_ids().to_vec(),
        docs,
        queries.manifest().dtype,
        queries.manifest().pooling,
    )
}

/// Evaluates the backend with every query cut to its first `min(L, rows)` rows,
/// for each `L` in `lengths` (strictly increasing, each at least 1).
pub fn truncation_ablation<T: Scalar, R: Retriever<T> + ?Sized>(
    queries: &QuerySet<T>,
    backend: &R,
    lengths: &[usize],
    k: usize,
    qrels: &Qrels,
) -> Result<AblationTable> {
    if lengths.is_empty() {
        return Err(Error::EmptyLengths);
    }
    if lengths[0] == 0 || lengths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "truncation lengths must be positive and strictly increasing".into(),
        ));
    }
    let specs = MetricSpec::diagnostic_suite();
    let mut rows = Vec::with_capacity(lengths.len());
    for &length in lengths {
        let truncated = truncate_queries(queries, length)?;
        let run = RunFile::from_ranked(&run_queries(backend, &truncated, k)?);
        let report = evaluate_run(&run, qrels, &specs, EvalOptions::default())?;
        rows.push(AblationRow {
            length,
            mrr_at_10: report.aggregate(MRR10).unwrap_or(0.0),
            recall_at_1000: report.aggregate(RECALL1000).unwrap_or(0.0),
            ndcg_at_10: report.aggregate(NDCG10).unwrap_or(0.0),
        });
    }
    Ok(AblationTable { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub ncells: usize,
    pub threshold: f64,
    pub mrr_at_10: f64,
    pub recall_at_1000: f64,
    pub ndcg_at_10: f64,
    /// Mean stage-2 candidate count per query.
    pub mean_candidates: f64,
    pub run: RunFile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub ndocs: usize,
    pub k: usize,
    pub rows: Vec<GridRow>,
}

impl GridResult {
    fn cells(&self) -> Vec<Vec<String>> {
        let mut rows = vec![vec![
            "threshold".to_string(),
            "ncells".to_string(),
            "ndocs".to_string(),
            MRR10.to_string(),
            RECALL1000.to_string(),
            NDCG10.to_string(),
            "mean_candidates".to_string(),
        ]];
        rows.extend(self.rows.iter().map(|r| {
            vec![
                r.threshold.to_string(),
                r.ncells.to_string(),
                self.ndocs.to_string(),
                fmt6(r.mrr_at_10),
                fmt6(r.recall_at_1000),
                fmt6(r.ndcg_at_10),
                format!("{:.2}", r.mean_candidates),
            ]
        }));
        rows
    }

    pub fn to_tsv(&self) -> String {
        tsv(&self.cells())
    }

    pub fn to_table(&self) -> String {
        align(&self.cells())
    }
}

/// Evaluates every `(ncells, threshold)` pair at fixed `ndocs`, sorted by
/// threshold then ncells.
pub fn grid_search<T: Scalar>(
    index: &PlaidIndex<T>,
    queries: &QuerySet<T>,
    qrels: &Qrels,
    ncells_set: &[usize],
    threshold_set: &[f64],
    ndocs: usize,
    k: usize,
) -> Result<GridResult> {
    if ncells_set.is_empty() || threshold_set.is_empty() {
        return Err(Error::InvalidConfig(
            "grid needs at least one ncells and one threshold".into(),
        ));
    }
    if ndocs < k {
        return Err(Error::NDocsTooSmall { ndocs, k });
    }
    let mut pairs: Vec<(f64, usize)> = threshold_set
        .iter()
        .flat_map(|&t| ncells_set.iter().map(move |&n| (t, n)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let specs = MetricSpec::diagnostic_suite();
    let mut rows = Vec::with_capacity(pairs.len());
    for (threshold, ncells) in pairs {
        let params = PlaidSearchParams {
            ncells: Some(ncells),
            centroid_score_threshold: Some(threshold),
            ndocs: Some(ndocs),
        };
        let backend = PlaidBackend { index, params };
        let run = RunFile::from_ranked(&run_queries(&backend, queries, k)?);
        let mut candidates = 0usize;
        for q in queries.docs() {
            candidates += index.trace(q, k, params)?.candidates.len();
        }
        let report = evaluate_run(&run, qrels, &specs, EvalOptions::default())?;
        rows.push(GridRow {
            ncells,
            threshold,
            mrr_at_10: report.aggregate(MRR10).unwrap_or(0.0),
            recall_at_1000: report.aggregate(RECALL1000).unwrap_or(0.0),
            ndcg_at_10: report.aggregate(NDCG10).unwrap_or(0.0),
            mean_candidates: candidates as f64 / queries.len() as f64,
            run,
        });
    }
    Ok(GridResult { ndocs, k, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricDelta {
    pub spec: MetricSpec,
    pub a: f64,
    pub b: f64,
    /// `a - b`.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    pub k: usize,
    /// Jaccard overlap of the top-k doc sets per shared query.
    pub per_query: BTreeMap<String, f64>,
    pub mean_overlap: f64,
    pub deltas: Vec<MetricDelta>,
}

impl AgreementReport {
    pub fn to_tsv(&self) -> String {
        let mut rows = vec![vec![
            "metric".to_string(),
            "run_a".into(),
            "run_b".into(),
            "delta".into(),
        ]];
        rows.extend(
            self.deltas
                .iter()
                .map(|d| vec![d.spec.to_string(), fmt6(d.a), fmt6(d.b), fmt6(d.delta)]),
        );
        rows.push(vec![
            format!("Jaccard@{}", self.k),
            fmt6(self.mean_overlap),
            String::new(),
            String::new(),
        ]);
        rows.push(vec!["query".into(), format!("Jaccard@{}", self.k)]);
        rows.extend(
            self.per_query
                .iter()
                .map(|(q, v)| vec![q.clone(), fmt6(*v)]),
        );
        tsv(&rows)
    }
}

/// Per-query top-k overlap and metric deltas (A minus B) between two runs.
pub fn compare_runs(
    run_a: &RunFile,
    run_b: &RunFile,
    qrels: &Qrels,
    k: usize,
) -> Result<AgreementReport> {
    let shared: Vec<&str> = run_a
        .query_ids()
        .filter(|q| run_b.queries.contains_key(*q))
        .collect();
    if shared.is_empty() {
        return Err(Error::NoSharedQueries);
    }
    let mut per_query = BTreeMap::new();
    for q in shared {
        let a: HashSet<&str> = run_a.ranking(q).into_iter().take(k).collect();
        let b: HashSet<&str> = run_b.ranking(q).into_iter().take(k).collect();
        let union = a.union(&b).count();
        let overlap = if union == 0 {
            1.0
        } else {
            a.intersection(&b).count() as f64 / union as f64
        };
        per_query.insert(q.to_string(), overlap);
    }
    let mean_overlap = per_query.values().sum::<f64>() / per_query.len() as f64;
    let specs = MetricSpec::diagnostic_suite();
    let ra = evaluate_run(run_a, qrels, &specs, EvalOptions::default())?;
    let rb = evaluate_run(run_b, qrels, &specs, EvalOptions::default())?;
    let deltas = specs
        .iter()
        .map(|&spec| {
            let a = ra.aggregate(spec).unwrap_or(0.0);
            let b = rb.aggregate(spec).unwrap_or(0.0);
            MetricDelta {
                spec,
                a,
                b,
                delta: a - b,
            }
        })
        .collect();
    Ok(AgreementReport {
        k,
        per_query,
        mean_overlap,
        deltas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Dtype, Pooling};
    use crate::matrix::TokenMatrix;
    use crate::metrics::RunEntry;
    use crate::plaid::{build_plaid, PlaidConfig};
    use std::sync::Arc;

    fn basis(dim: usize, i: usize) -> Vec<f32> {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        v
    }

    #[test]
    fn identical_rows_cover_one_centroid() {
        let same = TokenMatrix::from_rows(&vec![basis(4, 0); 32]).unwrap();
        let spread =
            TokenMatrix::from_rows(&(0..32).map(|i| basis(4, i % 4)).collect::<Vec<_>>()).unwrap();
        let corpus = Corpus::new(
            vec!["same".into(), "spread".into()],
            vec![same, spread],
            Dtype::Float32,
            Pooling::Fixed(32),
        )
        .unwrap();
        let cfg = PlaidConfig {
            num_centroids: 4,
            ncells: 1,
            ..PlaidConfig::default()
        };
        let idx = build_plaid(Arc::new(corpus), cfg).unwrap();
        let r = centroid_coverage(&idx, 10, 0).unwrap();
        assert_eq!(r.sample_size, 2);
        assert_eq!(r.per_doc[0].unique, 1);
        assert_eq!(
            r.per_doc[0].unique as f64 / r.per_doc[0].rows as f64,
            0.03125
        );
        assert_eq!(r.per_doc[1].unique, 4);
        assert_eq!(r.mean_unique, 2.5);
        assert_eq!(r.median_unique, 2.5);
        assert!(r.min_unique as f64 <= r.mean_unique && r.mean_unique <= r.max_unique as f64);
    }

    fn run(entries: &[(&str, &[&str])]) -> RunFile {
        let mut r = RunFile::new();
        for (q, docs) in entries {
            r.queries.insert(
                q.to_string(),
                docs.iter()
                    .enumerate()
                    .map(|(i, d)| RunEntry {
                        doc_id: d.to_string(),
                        rank: i + 1,
                        score: 10.0 - i as f64,
                    })
                    .collect(),
            );
        }
        r
    }

    #[test]
    fn agreement_identical_and_disjoint() {
        let mut qrels = Qrels::new();
        qrels.insert("q", "a", 1);
        let a = run(&[("q", &["a", "b"])]);
        let same = compare_runs(&a, &a, &qrels, 10).unwrap();
        assert_eq!(same.mean_overlap, 1.0);
        assert!(same.deltas.iter().all(|d| d.delta == 0.0));

        let b = run(&[("q", &["c", "d"])]);
        let diff = compare_runs(&a, &b, &qrels, 10).unwrap();
        assert_eq!(diff.mean_overlap, 0.0);
        let back = compare_runs(&b, &a, &qrels, 10).unwrap();
        for (x, y) in diff.deltas.iter().zip(&back.deltas) {
            assert_eq!(x.delta, -y.delta);
        }
        let other = run(&[("z", &["a"])]);
        assert!(matches!(
            compare_runs(&a, &other, &qrels, 10),
            Err(Error::NoSharedQueries)
        ));
    }

    #[test]
    fn empty_lengths_rejected() {
        let c = Corpus::new(
            vec!["d".into()],
            vec![TokenMatrix::from_rows(&[basis(2, 0)]).unwrap()],
            Dtype::Float32,
            Pooling::None,
        )
        .unwrap();
        let backend = crate::backend::ExactBackend(&c);
        let qrels = Qrels::new();
        assert!(matches!(
            truncation_ablation(&c, &backend, &[], 10, &qrels),
            Err(Error::EmptyLengths)
        ));
        assert!(truncation_ablation(&c, &backend, &[2, 2], 10, &qrels).is_err());
    }
}
