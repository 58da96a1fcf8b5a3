//! Inverted-file backend for multi-vector search.
//!
//! Every token vector in the corpus is assigned to its nearest of `nlist`
//! spherical k-means centroids. A query probes, for each of its rows, the
//! `nprobe` nearest lists, keeps the `per_token_candidates` best-matching tokens
//! of each probed list, and unions their source documents. Candidates are then
//! rescored with exact MaxSim, so only candidate generation is approximate.

use std::sync::Arc;

use rayon::prelude::*;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::kmeans::{assign, train_kmeans};
use crate::matrix::TokenMatrix;
use crate::maxsim::maxsim_unchecked;
use crate::ranking::{top_k, RankedList};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IvfConfig {
    pub nlist: usize,
    pub nprobe: usize,
    /// Cap on token matches kept from each probed list for one query row.
    pub per_token_candidates: usize,
    pub kmeans_iters: usize,
    pub seed: u64,
}

impl Default for IvfConfig {
    /// Desk-scale defaults: small enough to build in seconds.
    fn default() -> Self {
        Self {
            nlist: 64,
            nprobe: 8,
            per_token_candidates: 256,
            kmeans_iters: 20,
            seed: 42,
        }
    }
}

impl IvfConfig {
    /// Configuration for corpora of millions of documents (nlist 4096, nprobe 128).
    pub fn large_scale() -> Self {
        Self {
            nlist: 4096,
            nprobe: 128,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nlist == 0 || self.nprobe == 0 || self.nprobe > self.nlist {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= nprobe <= nlist, got nprobe={} nlist={}",
                self.nprobe, self.nlist
            )));
        }
        if self.per_token_candidates == 0 {
            return Err(Error::InvalidConfig(
                "per_token_candidates must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Per-search overrides of the probe depth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IvfSearchParams {
    pub nprobe: Option<usize>,
    pub per_token_candidates: Option<usize>,
}

/// Location of a token vector: (document ordinal, row within the document).
pub type TokenRef = (u32, u32);

#[derive(Debug, Clone)]
pub struct IvfIndex<T> {
    config: IvfConfig,
    centroids: TokenMatrix<T>,
    /// List id of every corpus vector in document order.
    assignments: Vec<u32>,
    lists: Vec<Vec<TokenRef>>,
    corpus: Arc<Corpus<T>>,
}

/// Trains centroids on every token vector and files each vector under its
/// argmax centroid.
pub fn build_ivf<T: Scalar>(corpus: Arc<Corpus<T>>, config: IvfConfig) -> Result<IvfIndex<T>> {
    config.validate()?;
    let total = corpus.manifest().total_vectors;
    if total < config.nlist {
        return Err(Error::TooFewVectors {
            needed: config.nlist,
            available: total,
        });
    }
    let flat = corpus.flat_vectors();
    let dim = corpus.dim();
    let centroids = train_kmeans(&flat, dim, config.nlist, config.kmeans_iters, config.seed)?;
    let assignments = assign(&flat, dim, &centroids);
    IvfIndex::from_parts(corpus, centroids, assignments, config)
}

impl<T: Scalar> IvfIndex<T> {
    /// Reassembles an index from stored parts, checking shapes.
    pub fn from_parts(
        corpus: Arc<Corpus<T>>,
        centroids: TokenMatrix<T>,
        assignments: Vec<u32>,
        config: IvfConfig,
    ) -> Result<Self> {
        config.validate()?;
        if centroids.rows() != config.nlist {
            return Err(Error::InvalidConfig(format!(
                "{} centroids stored for nlist={}",
                centroids.rows(),
                config.nlist
            )));
        }
        if centroids.dim() != corpus.dim() {
            return Err(Error::DimensionMismatch {
                expected: corpus.dim(),
                found: centroids.dim(),
            });
        }
        if assignments.len() != corpus.manifest().total_vectors {
            return Err(Error::InvalidConfig(format!(
                "{} assignments for {} vectors",
                assignments.len(),
                corpus.manifest().total_vectors
            )));
        }
        let mut lists = vec![Vec::new(); config.nlist];
        let mut it = assignments.iter();
        for (d, doc) in corpus.docs().iter().enumerate() {
            for r in 0..doc.rows() {
                let &a = it.next().expect("length checked above");
                let list = lists
                    .get_mut(a as usize)
                    .ok_or_else(|| Error::InvalidConfig(format!("assignment {a} out of range")))?;
                list.push((d as u32, r as u32));
            }
        }
        Ok(Self {
            config,
            centroids,
            assignments,
            lists,
            corpus,
        })
    }

    pub fn config(&self) -> &IvfConfig {
        &self.config
    }

    pub fn centroids(&self) -> &TokenMatrix<T> {
        &self.centroids
    }

    pub fn assignments(&self) -> &[u32] {
        &self.assignments
    }

    pub fn lists(&self) -> &[Vec<TokenRef>] {
        &self.lists
    }

    pub fn corpus(&self) -> &Arc<Corpus<T>> {
        &self.corpus
    }

    fn resolve(&self, params: IvfSearchParams) -> Result<(usize, usize)> {
        let nprobe = params.nprobe.unwrap_or(self.config.nprobe);
        let per_token = params
            .per_token_candidates
            .unwrap_or(self.config.per_token_candidates);
        IvfConfig {
            nprobe,
            per_token_candidates: per_token,
            ..self.config
        }
        .validate()?;
        Ok((nprobe, per_token))
    }

    /// Candidate document ordinals (ascending) gathered for `query`.
    pub fn candidates(
        &self,
        query: &TokenMatrix<T>,
        params: IvfSearchParams,
    ) -> Result<Vec<usize>> {
        if query.dim() != self.corpus.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.corpus.dim(),
                found: query.dim(),
            });
        }
        let (nprobe, per_token) = self.resolve(params)?;
        let mut hit = vec![false; self.corpus.len()];
        for q in query.iter_rows() {
            for list in probe(q, &self.centroids, nprobe) {
                let entries = &self.lists[list];
                if entries.len() <= per_token {
                    for &(d, _) in entries {
                        hit[d as usize] = true;
                    }
                    continue;
                }
                let mut scored: Vec<(T, TokenRef)> = entries
                    .iter()
                    .map(|&(d, r)| (dot(q, self.corpus.doc(d as usize).row(r as usize)), (d, r)))
                    .collect();
                let cmp = |a: &(T, TokenRef), b: &(T, TokenRef)| {
                    b.0.partial_cmp(&a.0)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.1.cmp(&b.1))
                };
                scored.select_nth_unstable_by(per_token - 1, cmp);
                for &(_, (d, _)) in &scored[..per_token] {
                    hit[d as usize] = true;
                }
            }
        }
        Ok(hit
            .iter()
            .enumerate()
            .filter_map(|(i, &h)| h.then_some(i))
            .collect())
    }

    /// Top-`k` documents after exact MaxSim rescoring of the gathered candidates.
    pub fn search(
        &self,
        query: &TokenMatrix<T>,
        k: usize,
        params: IvfSearchParams,
    ) -> Result<RankedList<T>> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        let cands = self.candidates(query, params)?;
        let scored: Vec<(usize, T)> = cands
            .par_iter()
            .map(|&d| (d, maxsim_unchecked(query, self.corpus.doc(d))))
            .collect();
        Ok(RankedList::new(
            "",
            top_k(scored, k, |i| self.corpus.doc_id(i)),
        ))
    }
}

/// Convenience wrapper matching the free-function style of the other backends.
pub fn ivf_search<T: Scalar>(
    index: &IvfIndex<T>,
    query: &TokenMatrix<T>,
    k: usize,
    params: IvfSearchParams,
) -> Result<RankedList<T>> {
    index.search(query, k, params)
}

/// The `n` centroids with the largest dot product against `q` (lowest id on ties).
pub(crate) fn probe<T: Scalar>(q: &[T], centroids: &TokenMatrix<T>, n: usize) -> Vec<usize> {
    let scores: Vec<T> = centroids.iter_rows().map(|c| dot(q, c)).collect();
    top_centroids(&scores, n)
}

pub(crate) fn top_centroids<T: Scalar>(scores: &[T], n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    let cmp = |a: &usize, b: &usize| {
        scores[*b]
            .partial_cmp(&scores[*a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(b))
    };
    let n = n.min(order.len());
    if n == 0 {
        return Vec::new();
    }
    if n < order.len() {
        order.select_nth_unstable_by(n - 1, cmp);
        order.truncate(n);
    }
    order.sort_unstable_by(cmp);
    order
}
