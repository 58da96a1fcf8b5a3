//! A common handle over the three search backends, for drivers that should not
//! care which one they run.

use rayon::prelude::*;

use crate::corpus::{Corpus, QuerySet};
use crate::error::Result;
use crate::ivf::{IvfIndex, IvfSearchParams};
use crate::matrix::TokenMatrix;
use crate::maxsim::exact_search;
use crate::plaid::{PlaidIndex, PlaidSearchParams};
use crate::ranking::RankedList;
use crate::scalar::Scalar;

pub trait Retriever<T: Scalar>: Sync {
    fn retrieve(&self, query: &TokenMatrix<T>, k: usize) -> Result<RankedList<T>>;

    /// One-line description of the backend and its resolved parameters.
    fn describe(&self) -> String;
}

pub struct ExactBackend<'a, T>(pub &'a Corpus<T>);

impl<T: Scalar> Retriever<T> for ExactBackend<'_, T> {
    fn retrieve(&self, query: &TokenMatrix<T>, k: usize) -> Result<RankedList<T>> {
        exact_search(self.0, query, k)
    }

    fn describe(&self) -> String {
        format!("exact docs={}", self.0.len())
    }
}

pub struct IvfBackend<'a, T> {
    pub index: &'a IvfIndex<T>,
    pub params: IvfSearchParams,
}

impl<T: Scalar> Retriever<T> for IvfBackend<'_, T> {
    fn retrieve(&self, query: &TokenMatrix<T>, k: usize) -> Result<RankedList<T>> {
        self.index.search(query, k, self.params)
    }

    fn describe(&self) -> String {
        let c = self.index.config();
        format!(
            "ivf nlist={} nprobe={} per_token_candidates={}",
            c.nlist,
            self.params.nprobe.unwrap_or(c.nprobe),
            self.params
                .per_token_candidates
                .unwrap_or(c.per_token_candidates)
        )
    }
}

pub struct PlaidBackend<'a, T> {
    pub index: &'a PlaidIndex<T>,
    pub params: PlaidSearchParams,
}

impl<T: Scalar> Retriever<T> for PlaidBackend<'_, T> {
    fn retrieve(&self, query: &TokenMatrix<T>, k: usize) -> Result<RankedList<T>> {
        self.index.search(query, k, self.params)
    }

    fn describe(&self) -> String {
        let c = self.index.config();
        format!(
            "plaid num_centroids={} ncells={} centroid_score_threshold={} ndocs={} residual_bits={}",
            c.num_centroids,
            self.params.ncells.unwrap_or(c.ncells),
            self.params.centroid_score_threshold.unwrap_or(c.centroid_score_threshold),
            self.params.ndocs.unwrap_or(c.ndocs),
            c.residual_bits
        )
    }
}

/// Runs every query, tagging each list with its query id. Output follows query order.
pub fn run_queries<T: Scalar, R: Retriever<T> + ?Sized>(
    backend: &R,
    queries: &QuerySet<T>,
    k: usize,
) -> Result<Vec<RankedList<T>>> {
    queries
        .doc_ids()
        .par_iter()
        .zip(queries.docs().par_iter())
        .map(|(id, q)| backend.retrieve(q, k).map(|r| r.with_query_id(id.as_str())))
        .collect()
}
