//! Ranked result lists and the ordering contract shared by every backend.

use std::cmp::Ordering;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc<T> {
    pub doc_id: String,
    pub score: T,
}

/// Top-k results for one query: scores non-increasing, ties by ascending doc id,
/// no duplicate ids.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList<T> {
    pub query_id: String,
    pub hits: Vec<ScoredDoc<T>>,
}

impl<T: Scalar> RankedList<T> {
    pub fn new(query_id: impl Into<String>, hits: Vec<ScoredDoc<T>>) -> Self {
        Self {
            query_id: query_id.into(),
            hits,
        }
    }

    pub fn empty() -> Self {
        Self {
            query_id: String::new(),
            hits: Vec::new(),
        }
    }

    pub fn with_query_id(mut self, query_id: impl Into<String>) -> Self {
        self.query_id = query_id.into();
        self
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.hits.iter().map(|h| h.doc_id.as_str())
    }

    /// Checks the ordering contract. Used by tests and by run-file conversion.
    pub fn is_well_ordered(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.hits.iter().all(|h| seen.insert(h.doc_id.as_str()))
            && self.hits.windows(2).all(|w| {
                rank_order(w[0].score, &w[0].doc_id, w[1].score, &w[1].doc_id) != Ordering::Greater
            })
    }
}

/// Total order used for every ranking: higher score first, then ascending id.
#[inline]
pub fn rank_order<T: Scalar>(sa: T, ida: &str, sb: T, idb: &str) -> Ordering {
    sb.partial_cmp(&sa)
        .unwrap_or(Ordering::Equal)
        .then_with(|| ida.cmp(idb))
}

/// Selects the best `k` of `(ordinal, score)` pairs under [`rank_order`], resolving
/// ordinals to ids through `id_of`. The result does not depend on input order.
pub fn top_k<'a, T, F>(mut scored: Vec<(usize, T)>, k: usize, id_of: F) -> Vec<ScoredDoc<T>>
where
    T: Scalar,
    F: Fn(usize) -> &'a str,
{
    let cmp = |a: &(usize, T), b: &(usize, T)| rank_order(a.1, id_of(a.0), b.1, id_of(b.0));
    if k == 0 || scored.is_empty() {
        return Vec::new();
    }
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, cmp);
        scored.truncate(k);
    }
    scored.sort_unstable_by(cmp);
    scored
        .into_iter()
        .map(|(i, s)| ScoredDoc {
            doc_id: id_of(i).to_string(),
            score: s,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_break_by_ascending_id() {
        let ids = ["c", "a", "b"];
        let top = top_k(vec![(0, 1.0f32), (1, 1.0), (2, 2.0)], 3, |i| ids[i]);
        let got: Vec<_> = top.iter().map(|h| h.doc_id.as_str()).collect();
        assert_eq!(got, ["b", "a", "c"]);
    }

    #[test]
    fn truncates_to_k_independent_of_input_order() {
        let ids = ["a", "b", "c", "d", "e"];
        let scores = [0.5f64, 0.9, 0.1, 0.9, 0.3];
        let fwd: Vec<_> = (0..5).map(|i| (i, scores[i])).collect();
        let rev: Vec<_> = (0..5).rev().map(|i| (i, scores[i])).collect();
        let a = top_k(fwd, 3, |i| ids[i]);
        let b = top_k(rev, 3, |i| ids[i]);
        assert_eq!(a, b);
        assert_eq!(
            a.iter().map(|h| h.doc_id.as_str()).collect::<Vec<_>>(),
            ["b", "d", "a"]
        );
        assert!(RankedList::new("q", a).is_well_ordered());
    }
}
