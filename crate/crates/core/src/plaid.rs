//! PLAID-style staged centroid retrieval.
//!
//! Every document vector is coded by its nearest centroid, and an inverted map
//! lists the documents touching each centroid. A search runs four stages:
//!
//! 1. each query row probes its `ncells` best centroids; probes scoring below
//!    `centroid_score_threshold` (absolute cosine) are dropped,
//! 2. the inverted lists of the surviving centroids are unioned into candidates,
//! 3. candidates are scored with MaxSim against their centroid-substituted
//!    vectors and the best `ndocs` survive,
//! 4. survivors are rescored exactly, from the corpus or from decoded residuals.

use std::sync::Arc;

use rayon::prelude::*;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::ivf::top_centroids;
use crate::kmeans::{assign, train_kmeans};
use crate::matrix::{TokenMatrix, F16_UNIT_NORM_TOLERANCE};
use crate::maxsim::maxsim_unchecked;
use crate::ranking::{rank_order, top_k, RankedList};
use crate::residual::{check_bits, decode_residual, encode_residual, ResidualCode, StorageReport};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaidConfig {
    pub num_centroids: usize,
    pub ncells: usize,
    pub centroid_score_threshold: f64,
    pub ndocs: usize,
    /// 0 disables residual compression; 1 or 2 bits per dimension otherwise.
    pub residual_bits: u8,
    pub kmeans_iters: usize,
    pub seed: u64,
}

impl Default for PlaidConfig {
    /// Documented search defaults (ncells 4, threshold 0.4, ndocs 4096) over a
    /// desk-scale 256-centroid space.
    fn default() -> Self {
        Self {
            num_centroids: 256,
            ncells: 4,
            centroid_score_threshold: 0.4,
            ndocs: 4096,
            residual_bits: 0,
            kmeans_iters: 20,
            seed: 42,
        }
    }
}

impl PlaidConfig {
    /// Same search defaults over a 32K-centroid space.
    pub fn large_scale() -> Self {
        Self {
            num_centroids: 32_768,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_centroids == 0 || self.ncells == 0 || self.ncells > self.num_centroids {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= ncells <= num_centroids, got ncells={} num_centroids={}",
                self.ncells, self.num_centroids
            )));
        }
        if !self.centroid_score_threshold.is_finite() {
            return Err(Error::InvalidConfig(
                "centroid_score_threshold must be finite".into(),
            ));
        }
        if self.ndocs == 0 {
            return Err(Error::InvalidConfig("ndocs must be at least 1".into()));
        }
        if self.residual_bits != 0 {
            check_bits(self.residual_bits)?;
        }
        Ok(())
    }
}

/// Per-search overrides of the stage knobs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PlaidSearchParams {
    pub ncells: Option<usize>,
    pub centroid_score_threshold: Option<f64>,
    pub ndocs: Option<usize>,
}

/// What each stage produced for one query; exposed for diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageTrace {
    /// Centroid probes before threshold pruning (rows x ncells).
    pub probes: usize,
    /// Probes that passed the threshold, counted per query row.
    pub surviving_probes: usize,
    /// Distinct centroids that survived pruning, ascending.
    pub surviving_centroids: Vec<usize>,
    /// Stage-2 candidate document ordinals, ascending.
    pub candidates: Vec<usize>,
    /// Stage-3 survivors in approximate-score order.
    pub survivors: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PlaidIndex<T> {
    config: PlaidConfig,
    dim: usize,
    centroids: TokenMatrix<T>,
    doc_ids: Vec<String>,
    /// Start of each document's vectors in the flat code arrays; `len + 1` entries.
    offsets: Vec<usize>,
    codes: Vec<u32>,
    unique_codes: Vec<Vec<u32>>,
    inverted: Vec<Vec<u32>>,
    residuals: Option<Vec<ResidualCode>>,
    corpus: Option<Arc<Corpus<T>>>,
}

/// Trains the centroid space and codes every corpus vector. With residuals on,
/// vectors are stored compressed and the corpus reference is dropped.
pub fn build_plaid<T: Scalar>(
    corpus: Arc<Corpus<T>>,
    config: PlaidConfig,
) -> Result<PlaidIndex<T>> {
    config.validate()?;
    let total = corpus.manifest().total_vectors;
    if total < config.num_centroids {
        return Err(Error::TooFewVectors {
            needed: config.num_centroids,
            available: total,
        });
    }
    let dim = corpus.dim();
    let flat = corpus.flat_vectors();
    let centroids = train_kmeans(
        &flat,
        dim,
        config.num_centroids,
        config.kmeans_iters,
        config.seed,
    )?;
    let codes = assign(&flat, dim, &centroids);
    let rows: Vec<usize> = corpus.docs().iter().map(TokenMatrix::rows).collect();

    if config.residual_bits == 0 {
        return PlaidIndex::from_parts(
            config,
            centroids,
            corpus.doc_ids().to_vec(),
            &rows,
            codes,
            None,
            Some(corpus),
        );
    }
    let residuals = flat
        .par_chunks_exact(dim)
        .zip(codes.par_iter())
        .map(|(v, &c)| encode_residual(v, centroids.row(c as usize), config.residual_bits))
        .collect::<Result<Vec<_>>>()?;
    PlaidIndex::from_parts(
        config,
        centroids,
        corpus.doc_ids().to_vec(),
        &rows,
        codes,
        Some(residuals),
        None,
    )
}

impl<T: Scalar> PlaidIndex<T> {
    /// Reassembles an index from stored parts. Exactly one of `residuals` and
    /// `corpus` supplies the vectors used for exact rescoring.
    pub fn from_parts(
        config: PlaidConfig,
        centroids: TokenMatrix<T>,
        doc_ids: Vec<String>,
        rows: &[usize],
        codes: Vec<u32>,
        residuals: Option<Vec<ResidualCode>>,
        corpus: Option<Arc<Corpus<T>>>,
    ) -> Result<Self> {
        config.validate()?;
        if doc_ids.is_empty() {
            return Err(Error::EmptyIndex);
        }
        if centroids.rows() != config.num_centroids {
            return Err(Error::InvalidConfig(format!(
                "{} centroids stored for num_centroids={}",
                centroids.rows(),
                config.num_centroids
            )));
        }
        if doc_ids.len() != rows.len() {
            return Err(Error::InvalidConfig(
                "doc id and row count tables differ".into(),
            ));
        }
        let mut seen = std::collections::HashSet::with_capacity(doc_ids.len());
        for id in &doc_ids {
            crate::corpus::check_id(id)?;
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidCorpus(format!("duplicate doc id {id:?}")));
            }
        }
        let dim = centroids.dim();
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        for &r in rows {
            if r == 0 {
                return Err(Error::EmptyMatrix);
            }
            offsets.push(offsets.last().copied().unwrap_or(0) + r);
        }
        let total = *offsets.last().unwrap_or(&0);
        if codes.len() != total {
            return Err(Error::InvalidConfig(format!(
                "{} codes for {total} vectors",
                codes.len()
            )));
        }
        if let Some(&bad) = codes.iter().find(|&&c| c as usize >= config.num_centroids) {
            return Err(Error::InvalidConfig(format!(
                "centroid code {bad} out of range"
            )));
        }
        match (&residuals, &corpus) {
            (Some(r), None) => {
                if config.residual_bits == 0 || r.len() != total {
                    return Err(Error::InvalidConfig(
                        "residual table does not match config".into(),
                    ));
                }
            }
            (None, Some(c)) => {
                let rows_match = c.docs().iter().zip(rows).all(|(m, &r)| m.rows() == r);
                if c.doc_ids() != doc_ids.as_slice() || c.dim() != dim || !rows_match {
                    return Err(Error::InvalidConfig(
                        "corpus does not match index tables".into(),
                    ));
                }
            }
            _ => {
                return Err(Error::InvalidConfig(
                    "index needs exactly one of residuals or corpus".into(),
                ))
            }
        }
        let mut unique_codes = Vec::with_capacity(rows.len());
        let mut inverted = vec![Vec::new(); config.num_centroids];
        for d in 0..rows.len() {
            let mut u = codes[offsets[d]..offsets[d + 1]].to_vec();
            u.sort_unstable();
            u.dedup();
            for &c in &u {
                inverted[c as usize].push(d as u32);
            }
            unique_codes.push(u);
        }
        Ok(Self {
            config,
            dim,
            centroids,
            doc_ids,
            offsets,
            codes,
            unique_codes,
            inverted,
            residuals,
            corpus,
        })
    }

    pub fn config(&self) -> &PlaidConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centroids(&self) -> &TokenMatrix<T> {
        &self.centroids
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_rows(&self, doc: usize) -> Result<usize> {
        self.check_doc(doc)?;
        Ok(self.offsets[doc + 1] - self.offsets[doc])
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn inverted(&self) -> &[Vec<u32>] {
        &self.inverted
    }

    pub fn residuals(&self) -> Option<&[ResidualCode]> {
        self.residuals.as_deref()
    }

    pub fn corpus(&self) -> Option<&Arc<Corpus<T>>> {
        self.corpus.as_ref()
    }

    pub fn storage_report(&self) -> StorageReport {
        StorageReport::compute(
            self.codes.len(),
            self.dim,
            self.config.residual_bits,
            self.config.num_centroids,
        )
    }

    fn check_doc(&self, doc: usize) -> Result<()> {
        if doc >= self.doc_ids.len() {
            return Err(Error::UnknownDoc(doc));
        }
        Ok(())
    }

    /// Stored centroid id of each of the document's rows, in row order.
    pub fn centroid_codes(&self, doc: usize) -> Result<&[u32]> {
        self.check_doc(doc)?;
        Ok(&self.codes[self.offsets[doc]..self.offsets[doc + 1]])
    }

    /// Distinct centroid ids occupied by the document, ascending.
    pub fn unique_centroids(&self, doc: usize) -> Result<&[u32]> {
        self.check_doc(doc)?;
        Ok(&self.unique_codes[doc])
    }

    /// The vectors used for exact rescoring: original, or decoded from residuals.
    pub fn doc_vectors(&self, doc: usize) -> Result<TokenMatrix<T>> {
        self.check_doc(doc)?;
        match (&self.corpus, &self.residuals) {
            (Some(c), _) => Ok(c.doc(doc).clone()),
            (None, Some(res)) => {
                let (lo, hi) = (self.offsets[doc], self.offsets[doc + 1]);
                let mut data = Vec::with_capacity((hi - lo) * self.dim);
                for (code, r) in self.codes[lo..hi].iter().zip(&res[lo..hi]) {
                    let centroid = self.centroids.row(*code as usize);
                    data.extend(decode_residual(r, centroid, self.config.residual_bits)?);
                }
                // decoded rows are renormalized in T but f32 scale rounding can leave
                // them marginally off when T is wider
                TokenMatrix::with_tolerance(hi - lo, self.dim, data, F16_UNIT_NORM_TOLERANCE)
            }
            (None, None) => unreachable!("from_parts guarantees a vector source"),
        }
    }

    /// Centroid codes for a different corpus under this index's centroid space.
    pub fn assign_corpus(&self, corpus: &Corpus<T>) -> Result<Vec<Vec<u32>>> {
        if corpus.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: corpus.dim(),
            });
        }
        Ok(corpus
            .docs()
            .iter()
            .map(|d| assign(d.as_slice(), self.dim, &self.centroids))
            .collect())
    }

    fn query_centroid_scores(&self, query: &TokenMatrix<T>) -> Result<Vec<Vec<T>>> {
        if query.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: query.dim(),
            });
        }
        Ok(query
            .iter_rows()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|q| self.centroids.iter_rows().map(|c| dot(q, c)).collect())
            .collect())
    }

    fn approx_from_scores(scores: &[Vec<T>], unique: &[u32]) -> T {
        let mut total = T::zero();
        for row in scores {
            let best = unique
                .iter()
                .map(|&c| row[c as usize])
                .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
            total = total + best;
        }
        total
    }

    /// Stage-3 kernel: MaxSim of `query` against the document's centroid vectors.
    pub fn approx_doc_score(&self, query: &TokenMatrix<T>, doc: usize) -> Result<T> {
        self.check_doc(doc)?;
        let scores = self.query_centroid_scores(query)?;
        Ok(Self::approx_from_scores(&scores, &self.unique_codes[doc]))
    }

    fn resolve(&self, params: PlaidSearchParams, k: usize) -> Result<(usize, f64, usize)> {
        let cfg = PlaidConfig {
            ncells: params.ncells.unwrap_or(self.config.ncells),
            centroid_score_threshold: params
                .centroid_score_threshold
                .unwrap_or(self.config.centroid_score_threshold),
            ndocs: params.ndocs.unwrap_or(self.config.ndocs),
            ..self.config
        };
        cfg.validate()?;
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if cfg.ndocs < k {
            return Err(Error::NDocsTooSmall {
                ndocs: cfg.ndocs,
                k,
            });
        }
        Ok((cfg.ncells, cfg.centroid_score_threshold, cfg.ndocs))
    }

    /// Runs stages 1-3 and reports what each produced.
    pub fn trace(
        &self,
        query: &TokenMatrix<T>,
        k: usize,
        params: PlaidSearchParams,
    ) -> Result<StageTrace> {
        let (ncells, threshold, ndocs) = self.resolve(params, k)?;
        let scores = self.query_centroid_scores(query)?;

        let mut alive = vec![false; self.config.num_centroids];
        let mut surviving_probes = 0;
        for row in &scores {
            for c in top_centroids(row, ncells) {
                let s = row[c].as_f64().clamp(-1.0, 1.0);
                if s >= threshold {
                    alive[c] = true;
                    surviving_probes += 1;
                }
            }
        }
        let surviving_centroids: Vec<usize> = alive
            .iter()
            .enumerate()
            .filter_map(|(c, &a)| a.then_some(c))
            .collect();

        let mut hit = vec![false; self.doc_ids.len()];
        for &c in &surviving_centroids {
            for &d in &self.inverted[c] {
                hit[d as usize] = true;
            }
        }
        let candidates: Vec<usize> = hit
            .iter()
            .enumerate()
            .filter_map(|(d, &h)| h.then_some(d))
            .collect();

        let mut approx: Vec<(usize, T)> = candidates
            .par_iter()
            .map(|&d| (d, Self::approx_from_scores(&scores, &self.unique_codes[d])))
            .collect();
        approx
            .sort_unstable_by(|a, b| rank_order(a.1, &self.doc_ids[a.0], b.1, &self.doc_ids[b.0]));
        approx.truncate(ndocs);

        Ok(StageTrace {
            probes: scores.len() * ncells.min(self.config.num_centroids),
            surviving_probes,
            surviving_centroids,
            candidates,
            survivors: approx.into_iter().map(|(d, _)| d).collect(),
        })
    }

    pub fn search(
        &self,
        query: &TokenMatrix<T>,
        k: usize,
        params: PlaidSearchParams,
    ) -> Result<RankedList<T>> {
        let trace = self.trace(query, k, params)?;
        let scored = trace
            .survivors
            .par_iter()
            .map(|&d| -> Result<(usize, T)> {
                let s = match &self.corpus {
                    Some(c) => maxsim_unchecked(query, c.doc(d)),
                    None => maxsim_unchecked(query, &self.doc_vectors(d)?),
                };
                Ok((d, s))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RankedList::new(
            "",
            top_k(scored, k, |i| self.doc_ids[i].as_str()),
        ))
    }
}

pub fn plaid_search<T: Scalar>(
    index: &PlaidIndex<T>,
    query: &TokenMatrix<T>,
    k: usize,
    params: PlaidSearchParams,
) -> Result<RankedList<T>> {
    index.search(query, k, params)
}

pub fn approx_doc_score<T: Scalar>(
    index: &PlaidIndex<T>,
    query: &TokenMatrix<T>,
    doc: usize,
) -> Result<T> {
    index.approx_doc_score(query, doc)
}

pub fn centroid_codes<T: Scalar>(index: &PlaidIndex<T>, doc: usize) -> Result<&[u32]> {
    index.centroid_codes(doc)
}
