//! Brute-force reference computations shared by the integration tests. These
//! deliberately avoid the library's kernels: plain f64 loops, no lanes, no
//! pruning, no rayon.
#![allow(dead_code)]

use std::collections::HashSet;

use latebench_core::{
    generate_synthetic, Corpus, RankedList, SyntheticData, SyntheticSpec, TokenMatrix,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn naive_dot(a: &[f32], b: &[f32]) -> f64 {
    let mut s = 0.0f64;
    for i in 0..a.len() {
        s += a[i] as f64 * b[i] as f64;
    }
    s
}

pub fn naive_maxsim(q: &TokenMatrix<f32>, d: &TokenMatrix<f32>) -> f64 {
    let mut total = 0.0;
    for i in 0..q.rows() {
        let mut best = f64::NEG_INFINITY;
        for j in 0..d.rows() {
            let mut s = 0.0f64;
            for t in 0..q.dim() {
                s += q.row(i)[t] as f64 * d.row(j)[t] as f64;
            }
            if s > best {
                best = s;
            }
        }
        total += best;
    }
    total
}

/// Every document scored with the naive kernel, best first, ids ascending on ties.
pub fn naive_ranking(corpus: &Corpus<f32>, q: &TokenMatrix<f32>) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = (0..corpus.len())
        .map(|d| (d, naive_maxsim(q, corpus.doc(d))))
        .collect();
    all.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| corpus.doc_id(a.0).cmp(corpus.doc_id(b.0)))
    });
    all
}

/// Argmax-dot centroid with the lowest index winning exact ties.
pub fn naive_argmax(v: &[f32], centroids: &TokenMatrix<f32>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for c in 0..centroids.rows() {
        let s = naive_dot(v, centroids.row(c));
        if s > best.1 {
            best = (c, s);
        }
    }
    best
}

/// True when `got` is the naive argmax or scores within float noise of it.
pub fn same_assignment(v: &[f32], centroids: &TokenMatrix<f32>, got: usize) -> bool {
    let (want, best) = naive_argmax(v, centroids);
    got == want || best - naive_dot(v, centroids.row(got)) < 1e-5
}

pub fn random_unit_rows(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> Vec<Vec<f32>> {
    (0..rows)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| (x / n) as f32).collect()
        })
        .collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> TokenMatrix<f32> {
    TokenMatrix::from_rows_normalized(&random_unit_rows(rng, rows, dim)).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn planted(spec: SyntheticSpec) -> SyntheticData<f32> {
    generate_synthetic(&spec).unwrap()
}

/// A small planted corpus: 300 documents of 8-24 rows, dim 32, 20 queries.
pub fn small_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        doc_count: 300,
        tokens_per_doc: (8, 24),
        dim: 32,
        num_concepts: 24,
        queries: 20,
        seed,
        ..SyntheticSpec::default()
    }
}

/// Fraction of `truth`'s top-`k` ids present in `got`'s top-`k`.
pub fn recall_against<T: latebench_core::Scalar, U: latebench_core::Scalar>(
    truth: &RankedList<T>,
    got: &RankedList<U>,
    k: usize,
) -> f64 {
    let want: HashSet<&str> = truth.doc_ids().take(k).collect();
    if want.is_empty() {
        return 1.0;
    }
    let have: HashSet<&str> = got.doc_ids().take(k).collect();
    want.intersection(&have).count() as f64 / want.len() as f64
}
