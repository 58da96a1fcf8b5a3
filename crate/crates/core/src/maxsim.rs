//! The MaxSim late-interaction kernel and the exhaustive search built on it.

use rayon::prelude::*;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::matrix::TokenMatrix;
use crate::ranking::{top_k, RankedList};
use crate::scalar::{dot, Scalar};

/// Sum over query rows of the best dot product against any document row.
///
/// Accumulation is query-row-major and sequential, so the value is bit-stable
/// for fixed inputs. No length normalization is applied.
pub fn maxsim_score<T: Scalar>(query: &TokenMatrix<T>, doc: &TokenMatrix<T>) -> Result<T> {
    if query.dim() != doc.dim() {
        return Err(Error::DimensionMismatch {
            expected: query.dim(),
            found: doc.dim(),
        });
    }
    Ok(maxsim_unchecked(query, doc))
}

#[inline]
pub(crate) fn maxsim_unchecked<T: Scalar>(query: &TokenMatrix<T>, doc: &TokenMatrix<T>) -> T {
    let mut total = T::zero();
    for q in query.iter_rows() {
        let mut best = T::neg_infinity();
        for d in doc.iter_rows() {
            let s = dot(q, d);
            if s > best {
                best = s;
            }
        }
        total = total + best;
    }
    total
}

/// Scores every document and returns the top `k`. Documents are scored in
/// parallel; the ranking does not depend on evaluation order.
pub fn exact_search<T: Scalar>(
    corpus: &Corpus<T>,
    query: &TokenMatrix<T>,
    k: usize,
) -> Result<RankedList<T>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if query.dim() != corpus.dim() {
        return Err(Error::DimensionMismatch {
            expected: corpus.dim(),
            found: query.dim(),
        });
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let scored: Vec<(usize, T)> = corpus
        .docs()
        .par_iter()
        .enumerate()
        .map(|(i, d)| (i, maxsim_unchecked(query, d)))
        .collect();
    Ok(RankedList::new("", top_k(scored, k, |i| corpus.doc_id(i))))
}
