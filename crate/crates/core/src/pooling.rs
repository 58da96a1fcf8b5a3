//! Fixed-length document representations.
//!
//! [`pool_fixed`] is a deterministic stand-in for learned fixed-length pooling:
//! it compresses a document into exactly `C` vectors by averaging contiguous
//! chunks of token vectors. It reproduces the structural property (few, averaged
//! vectors per document) without any trained projection.

use crate::corpus::{Corpus, Pooling};
use crate::error::{Error, Result};
use crate::matrix::TokenMatrix;
use crate::scalar::{normalize_in_place, Scalar};

/// Pools `doc` into exactly `slots` unit-norm rows.
///
/// Rows are split into `slots` contiguous chunks; the first `rows % slots` chunks
/// get one extra row. Each chunk mean is renormalized. Documents shorter than
/// `slots` are first extended by cycling their rows. A chunk whose mean vanishes
/// (antipodal rows) falls back to its first row.
pub fn pool_fixed<T: Scalar>(doc: &TokenMatrix<T>, slots: usize) -> Result<TokenMatrix<T>> {
    if slots == 0 {
        return Err(Error::InvalidConfig(
            "pooling slot count C must be at least 1".into(),
        ));
    }
    let dim = doc.dim();
    let n = doc.rows().max(slots);
    let source = |i: usize| doc.row(i % doc.rows());

    let base = n / slots;
    let extra = n % slots;
    let mut data = Vec::with_capacity(slots * dim);
    let mut start = 0;
    for chunk in 0..slots {
        let len = base + usize::from(chunk < extra);
        let mut mean = vec![T::zero(); dim];
        for r in start..start + len {
            for (m, x) in mean.iter_mut().zip(source(r)) {
                *m = *m + *x;
            }
        }
        if !normalize_in_place(&mut mean) {
            mean.copy_from_slice(source(start));
        }
        data.extend_from_slice(&mean);
        start += len;
    }
    TokenMatrix::new(slots, dim, data)
}

/// Applies [`pool_fixed`] to every document, tagging the result as fixed-pooled.
pub fn pool_corpus<T: Scalar>(corpus: &Corpus<T>, slots: usize) -> Result<Corpus<T>> {
    let docs = corpus
        .docs()
        .iter()
        .map(|d| pool_fixed(d, slots))
        .collect::<Result<Vec<_>>>()?;
    Corpus::new(
        corpus.doc_ids().to_vec(),
        docs,
        corpus.manifest().dtype,
        Pooling::Fixed(slots),
    )
}
