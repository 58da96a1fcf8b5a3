//! Document collections and their manifests.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::TokenMatrix;
use crate::scalar::Scalar;

/// Precision a corpus is stored at on disk. In memory everything is `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dtype {
    Float32,
    Float16,
}

impl Dtype {
    pub fn bytes(self) -> usize {
        match self {
            Dtype::Float32 => 4,
            Dtype::Float16 => 2,
        }
    }
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dtype::Float32 => "float32",
            Dtype::Float16 => "float16",
        })
    }
}

impl FromStr for Dtype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "float32" => Ok(Dtype::Float32),
            "float16" => Ok(Dtype::Float16),
            other => Err(Error::InvalidConfig(format!("unknown dtype {other:?}"))),
        }
    }
}

/// Whether documents carry one vector per token or a fixed number of pooled slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pooling {
    None,
    Fixed(usize),
}

impl Pooling {
    pub fn slots(self) -> Option<usize> {
        match self {
            Pooling::None => None,
            Pooling::Fixed(c) => Some(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusManifest {
    pub dim: usize,
    pub dtype: Dtype,
    pub pooling: Pooling,
    pub doc_count: usize,
    pub total_vectors: usize,
}

/// An ordered collection of uniquely identified documents.
///
/// Also used for query sets: a query set is a corpus whose ids are query ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus<T> {
    manifest: CorpusManifest,
    doc_ids: Vec<String>,
    docs: Vec<TokenMatrix<T>>,
}

/// A set of named query matrices. Shares the corpus representation and file format.
pub type QuerySet<T> = Corpus<T>;

impl<T: Scalar> Corpus<T> {
    pub fn new(
        doc_ids: Vec<String>,
        docs: Vec<TokenMatrix<T>>,
        dtype: Dtype,
        pooling: Pooling,
    ) -> Result<Self> {
        if doc_ids.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if doc_ids.len() != docs.len() {
            return Err(Error::InvalidCorpus(format!(
                "{} ids for {} documents",
                doc_ids.len(),
                docs.len()
            )));
        }
        let mut seen = HashSet::with_capacity(doc_ids.len());
        for id in &doc_ids {
            check_id(id)?;
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidCorpus(format!(
                    "duplicate document id {id:?}"
                )));
            }
        }
        let dim = docs[0].dim();
        if let Some(d) = docs.iter().find(|d| d.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: d.dim(),
            });
        }
        if let Pooling::Fixed(c) = pooling {
            if c == 0 {
                return Err(Error::InvalidCorpus("fixed pooling with C = 0".into()));
            }
            if let Some(i) = docs.iter().position(|d| d.rows() != c) {
                return Err(Error::InvalidCorpus(format!(
                    "document {:?} has {} rows, fixed pooling requires {c}",
                    doc_ids[i],
                    docs[i].rows()
                )));
            }
        }
        let manifest = CorpusManifest {
            dim,
            dtype,
            pooling,
            doc_count: docs.len(),
            total_vectors: docs.iter().map(TokenMatrix::rows).sum(),
        };
        Ok(Self {
            manifest,
            doc_ids,
            docs,
        })
    }

    pub fn manifest(&self) -> &CorpusManifest {
        &self.manifest
    }

    pub fn dim(&self) -> usize {
        self.manifest.dim
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_id(&self, ordinal: usize) -> &str {
        &self.doc_ids[ordinal]
    }

    pub fn docs(&self) -> &[TokenMatrix<T>] {
        &self.docs
    }

    pub fn doc(&self, ordinal: usize) -> &TokenMatrix<T> {
        &self.docs[ordinal]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &TokenMatrix<T>)> {
        self.doc_ids.iter().map(String::as_str).zip(&self.docs)
    }

    /// All token vectors concatenated in document order.
    pub fn flat_vectors(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.manifest.total_vectors * self.manifest.dim);
        for d in &self.docs {
            out.extend_from_slice(d.as_slice());
        }
        out
    }

    /// Same corpus tagged with a different storage dtype.
    pub fn with_dtype(mut self, dtype: Dtype) -> Self {
        self.manifest.dtype = dtype;
        self
    }

    /// Reorders documents; used by permutation-invariance checks.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let ids = order.iter().map(|&i| self.doc_ids[i].clone()).collect();
        let docs = order.iter().map(|&i| self.docs[i].clone()).collect();
        Self::new(ids, docs, self.manifest.dtype, self.manifest.pooling)
    }

    pub fn into_parts(self) -> (CorpusManifest, Vec<String>, Vec<TokenMatrix<T>>) {
        (self.manifest, self.doc_ids, self.docs)
    }
}

/// Identifiers travel through whitespace-delimited text formats, so they must be
/// non-empty and free of whitespace.
pub(crate) fn check_id(id: &str) -> Result<()> {
    if id.is_empty() || id.chars().any(char::is_whitespace) {
        return Err(Error::InvalidCorpus(format!(
            "identifier {id:?} must be non-empty and contain no whitespace"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: usize, dim: usize) -> TokenMatrix<f32> {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        TokenMatrix::new(1, dim, v).unwrap()
    }

    #[test]
    fn manifest_counts_vectors() {
        let c = Corpus::new(
            vec!["a".into(), "b".into()],
            vec![
                e(0, 3),
                TokenMatrix::from_rows(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap(),
            ],
            Dtype::Float32,
            Pooling::None,
        )
        .unwrap();
        assert_eq!(c.manifest().doc_count, 2);
        assert_eq!(c.manifest().total_vectors, 3);
    }

    #[test]
    fn rejects_duplicates_and_bad_ids() {
        let dup = Corpus::new(
            vec!["a".into(), "a".into()],
            vec![e(0, 2), e(1, 2)],
            Dtype::Float32,
            Pooling::None,
        );
        assert!(matches!(dup, Err(Error::InvalidCorpus(_))));
        let ws = Corpus::new(
            vec!["a b".into()],
            vec![e(0, 2)],
            Dtype::Float32,
            Pooling::None,
        );
        assert!(matches!(ws, Err(Error::InvalidCorpus(_))));
        let empty = Corpus::<f32>::new(vec![], vec![], Dtype::Float32, Pooling::None);
        assert!(matches!(empty, Err(Error::EmptyCorpus)));
    }

    #[test]
    fn fixed_pooling_requires_exact_rows() {
        let bad = Corpus::new(
            vec!["a".into()],
            vec![e(0, 2)],
            Dtype::Float32,
            Pooling::Fixed(2),
        );
        assert!(bad.is_err());
        let ok = Corpus::new(
            vec!["a".into()],
            vec![e(0, 2)],
            Dtype::Float32,
            Pooling::Fixed(1),
        );
        assert!(ok.is_ok());
    }
}
