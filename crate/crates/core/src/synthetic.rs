//! Planted-relevance synthetic corpora.
//!
//! Documents are bags of perturbed copies of a few random "concept" directions.
//! Each query targets one document: its first `signal_tokens` rows are perturbed
//! copies of the target's rows, followed by filler rows drawn around a small pool
//! of background directions shared by all queries. Filler therefore matches every
//! document weakly and adds near-uniform noise to MaxSim.
//!
//! The planted guarantee is checked by exhaustive scoring: for every query prefix
//! that contains all signal rows (including the full query), the target must
//! outscore every other document by at least `margin`. Queries that fail are
//! redrawn; generation fails after `max_retries` redraws.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::corpus::{Corpus, Dtype, Pooling, QuerySet};
use crate::error::{Error, Result};
use crate::matrix::TokenMatrix;
use crate::metrics::Qrels;
use crate::scalar::{dot, normalize_in_place, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub doc_count: usize,
    /// Inclusive range of rows per document.
    pub tokens_per_doc: (usize, usize),
    pub dim: usize,
    pub num_concepts: usize,
    /// Inclusive range of distinct concepts per document.
    pub concepts_per_doc: (usize, usize),
    pub queries: usize,
    pub signal_tokens: usize,
    /// Fraction of each query's rows that are filler, in `[0, 1)`.
    pub filler_fraction: f64,
    /// Minimum exact-MaxSim gap between the target and the best other document.
    pub margin: f64,
    /// Gaussian perturbation (relative norm) applied to document tokens.
    pub doc_noise: f64,
    /// Perturbation applied to signal rows copied from the target.
    pub query_noise: f64,
    /// Number of shared background directions filler is drawn around.
    pub filler_pool: usize,
    pub filler_noise: f64,
    pub max_retries: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            doc_count: 1000,
            tokens_per_doc: (16, 32),
            dim: 128,
            num_concepts: 64,
            concepts_per_doc: (2, 4),
            queries: 50,
            signal_tokens: 8,
            filler_fraction: 0.0,
            margin: 0.05,
            doc_noise: 0.5,
            query_noise: 0.15,
            filler_pool: 16,
            filler_noise: 0.5,
            max_retries: 64,
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(format!("synthetic spec: {m}")));
        if self.margin.is_nan() || self.margin <= 0.0 {
            return fail("margin must be positive");
        }
        if self.signal_tokens == 0 {
            return fail("signal_tokens must be at least 1");
        }
        if !(0.0..1.0).contains(&self.filler_fraction) {
            return fail("filler_fraction must lie in [0, 1)");
        }
        if self.doc_count == 0 || self.queries == 0 || self.dim == 0 {
            return fail("doc_count, queries and dim must be at least 1");
        }
        let (lo, hi) = self.tokens_per_doc;
        if lo == 0 || lo > hi {
            return fail("tokens_per_doc must be a non-empty range starting at 1 or more");
        }
        let (clo, chi) = self.concepts_per_doc;
        if clo == 0 || clo > chi || chi > self.num_concepts {
            return fail("concepts_per_doc must be a non-empty range within num_concepts");
        }
        if self.filler_fraction > 0.0 && self.filler_pool == 0 {
            return fail("filler needs a non-empty filler_pool");
        }
        if self.doc_noise < 0.0 || self.query_noise < 0.0 || self.filler_noise < 0.0 {
            return fail("noise levels must be non-negative");
        }
        Ok(())
    }

    /// Filler rows appended to each query.
    pub fn filler_tokens(&self) -> usize {
        let f = self.filler_fraction;
        (self.signal_tokens as f64 * f / (1.0 - f)).round() as usize
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData<T> {
    pub corpus: Corpus<T>,
    pub queries: QuerySet<T>,
    pub qrels: Qrels,
    /// The planted concept directions.
    pub concepts: TokenMatrix<T>,
    /// Concept id behind every document row.
    pub token_concepts: Vec<Vec<usize>>,
    /// Target document ordinal of each query.
    pub targets: Vec<usize>,
    /// Redraws needed to satisfy the margin, summed over queries.
    pub redraws: usize,
}

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        if normalize_in_place(&mut v) {
            return v;
        }
    }
}

/// `center` plus Gaussian noise of expected norm `noise`, renormalized.
fn perturb(rng: &mut ChaCha8Rng, center: &[f64], noise: f64) -> Vec<f64> {
    let scale = noise / (center.len() as f64).sqrt();
    loop {
        let mut v: Vec<f64> = center
            .iter()
            .map(|c| c + scale * Distribution::<f64>::sample(&StandardNormal, rng))
            .collect::<Vec<f64>>();
        if normalize_in_place(&mut v) {
            return v;
        }
    }
}

fn width(n: usize) -> usize {
    n.saturating_sub(1).to_string().len()
}

fn to_matrix<T: Scalar>(rows: &[Vec<f64>]) -> Result<TokenMatrix<T>> {
    let cast: Vec<Vec<T>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| T::from_f64_lossy(x)).collect())
        .collect();
    TokenMatrix::from_rows_normalized(&cast)
}

pub fn generate_synthetic<T: Scalar>(spec: &SyntheticSpec) -> Result<SyntheticData<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dim = spec.dim;

    let concepts: Vec<Vec<f64>> = (0..spec.num_concepts)
        .map(|_| unit(&mut rng, dim))
        .collect();
    let background: Vec<Vec<f64>> = (0..spec.filler_pool).map(|_| unit(&mut rng, dim)).collect();

    let mut doc_rows: Vec<Vec<Vec<f64>>> = Vec::with_capacity(spec.doc_count);
    let mut token_concepts = Vec::with_capacity(spec.doc_count);
    for _ in 0..spec.doc_count {
        let n = rng.random_range(spec.tokens_per_doc.0..=spec.tokens_per_doc.1);
        let m = rng.random_range(spec.concepts_per_doc.0..=spec.concepts_per_doc.1);
        let chosen = sample(&mut rng, spec.num_concepts, m).into_vec();
        let assigned: Vec<usize> = (0..n).map(|i| chosen[i % m]).collect();
        let rows = assigned
            .iter()
            .map(|&c| perturb(&mut rng, &concepts[c], spec.doc_noise))
            .collect();
        doc_rows.push(rows);
        token_concepts.push(assigned);
    }
    let dw = width(spec.doc_count);
    let doc_ids: Vec<String> = (0..spec.doc_count).map(|i| format!("d{i:0dw$}")).collect();
    let docs = doc_rows
        .iter()
        .map(|r| to_matrix::<T>(r))
        .collect::<Result<Vec<_>>>()?;
    let corpus = Corpus::new(doc_ids, docs, Dtype::Float32, Pooling::None)?;

    let targets: Vec<usize> = if spec.queries <= spec.doc_count {
        sample(&mut rng, spec.doc_count, spec.queries).into_vec()
    } else {
        (0..spec.queries).map(|i| i % spec.doc_count).collect()
    };

    let filler = spec.filler_tokens();
    let margin = T::from_f64_lossy(spec.margin);
    let qw = width(spec.queries);
    let mut query_ids = Vec::with_capacity(spec.queries);
    let mut queries = Vec::with_capacity(spec.queries);
    let mut qrels = Qrels::new();
    let mut redraws = 0;
    for (qi, &target) in targets.iter().enumerate() {
        let source = &doc_rows[target];
        let mut attempt = 0;
        let query = loop {
            let mut rows: Vec<Vec<f64>> = (0..spec.signal_tokens)
                .map(|j| perturb(&mut rng, &source[j % source.len()], spec.query_noise))
                .collect();
            for _ in 0..filler {
                let b = &background[rng.random_range(0..background.len())];
                rows.push(perturb(&mut rng, b, spec.filler_noise));
            }
            let q = to_matrix::<T>(&rows)?;
            let gap = min_prefix_gap(&corpus, &q, target, spec.signal_tokens);
            if gap >= margin {
                break q;
            }
            attempt += 1;
            if attempt > spec.max_retries {
                return Err(Error::SpecInfeasible(format!(
                    "query {qi}: best gap {gap} below margin {} after {} redraws",
                    spec.margin, spec.max_retries
                )));
            }
        };
        redraws += attempt;
        let id = format!("q{qi:0qw$}");
        qrels.insert(&id, corpus.doc_id(target), 1);
        query_ids.push(id);
        queries.push(query);
    }
    let queries = Corpus::new(query_ids, queries, Dtype::Float32, Pooling::None)?;
    let concepts = to_matrix::<T>(&concepts)?;
    Ok(SyntheticData {
        corpus,
        queries,
        qrels,
        concepts,
        token_concepts,
        targets,
        redraws,
    })
}

/// Smallest `score(target) - max other score` over every prefix of `query` with
/// at least `signal` rows. Prefix sums accumulate row by row from zero, matching
/// MaxSim's own accumulation order.
fn min_prefix_gap<T: Scalar>(
    corpus: &Corpus<T>,
    query: &TokenMatrix<T>,
    target: usize,
    signal: usize,
) -> T {
    let per_doc: Vec<Vec<T>> = corpus
        .docs()
        .par_iter()
        .map(|doc| {
            let mut sums = Vec::with_capacity(query.rows());
            let mut total = T::zero();
            for q in query.iter_rows() {
                let best = doc
                    .iter_rows()
                    .map(|d| dot(q, d))
                    .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
                total = total + best;
                sums.push(total);
            }
            sums
        })
        .collect();
    let mut worst = T::infinity();
    for p in signal.min(query.rows())..=query.rows() {
        let t = per_doc[target][p - 1];
        let rival = per_doc
            .iter()
            .enumerate()
            .filter(|(d, _)| *d != target)
            .map(|(_, s)| s[p - 1])
            .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
        let gap = t - rival;
        if gap < worst {
            worst = gap;
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            doc_count: 10,
            queries: 5,
            dim: 32,
            num_concepts: 8,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn deterministic() {
        let a = generate_synthetic::<f32>(&small()).unwrap();
        let b = generate_synthetic::<f32>(&small()).unwrap();
        assert_eq!(a.corpus, b.corpus);
        assert_eq!(a.queries, b.queries);
        assert_eq!(a.qrels, b.qrels);
    }

    #[test]
    fn shapes_follow_spec() {
        let spec = SyntheticSpec {
            filler_fraction: 0.5,
            ..small()
        };
        let d = generate_synthetic::<f64>(&spec).unwrap();
        assert_eq!(d.corpus.len(), 10);
        assert_eq!(d.queries.len(), 5);
        assert!(d.queries.docs().iter().all(|q| q.rows() == 16));
        assert!(d
            .corpus
            .docs()
            .iter()
            .all(|m| (16..=32).contains(&m.rows())));
        assert_eq!(d.qrels.len(), 5);
        for (q, &t) in d.queries.doc_ids().iter().zip(&d.targets) {
            assert_eq!(d.qrels.grade(q, d.corpus.doc_id(t)), 1);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(SyntheticSpec {
            margin: 0.0,
            ..small()
        }
        .validate()
        .is_err());
        assert!(SyntheticSpec {
            signal_tokens: 0,
            ..small()
        }
        .validate()
        .is_err());
        assert!(SyntheticSpec {
            filler_fraction: 1.0,
            ..small()
        }
        .validate()
        .is_err());
        assert!(SyntheticSpec {
            concepts_per_doc: (1, 9),
            ..small()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn unreachable_margin_is_infeasible() {
        let spec = SyntheticSpec {
            margin: 100.0,
            max_retries: 2,
            ..small()
        };
        assert!(matches!(
            generate_synthetic::<f32>(&spec),
            Err(Error::SpecInfeasible(_))
        ));
    }
}
