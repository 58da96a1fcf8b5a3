//! Seeded spherical k-means shared by both approximate backends.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::TokenMatrix;
use crate::scalar::{dot, normalize_in_place, Scalar};

/// Index of the centroid with the largest dot product (lowest index on ties),
/// together with that dot product.
#[inline]
pub fn nearest_centroid<T: Scalar>(v: &[T], centroids: &TokenMatrix<T>) -> (u32, T) {
    let mut best = (0u32, T::neg_infinity());
    for (c, row) in centroids.iter_rows().enumerate() {
        let s = dot(v, row);
        if s > best.1 {
            best = (c as u32, s);
        }
    }
    best
}

/// Argmax-dot assignment of every vector in `vectors` (row-major, `dim` wide).
pub fn assign<T: Scalar>(vectors: &[T], dim: usize, centroids: &TokenMatrix<T>) -> Vec<u32> {
    vectors
        .par_chunks_exact(dim)
        .map(|v| nearest_centroid(v, centroids).0)
        .collect()
}

/// Spherical k-means over unit vectors.
///
/// Greedy k-means++ seeding (squared chord distance `2 - 2 q.c`, best of
/// `2 + ln k` sampled candidates per step) from `seed`, then Lloyd
/// iterations with argmax-dot assignment and renormalized-mean updates. Stops after
/// `iters` updates or when an assignment pass changes nothing. A cluster that goes
/// empty is reseeded with the vector farthest from its own centroid.
pub fn train_kmeans<T: Scalar>(
    vectors: &[T],
    dim: usize,
    k: usize,
    iters: usize,
    seed: u64,
) -> Result<TokenMatrix<T>> {
    if dim == 0 || !vectors.len().is_multiple_of(dim) {
        return Err(Error::InvalidConfig(
            "vector buffer is not a whole number of rows".into(),
        ));
    }
    let n = vectors.len() / dim;
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if n < k {
        return Err(Error::TooFewVectors {
            needed: k,
            available: n,
        });
    }
    let row = |i: usize| &vectors[i * dim..(i + 1) * dim];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<usize> = Vec::with_capacity(k);
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    centers.push(first);
    chosen[first] = true;
    let mut d2: Vec<f64> = (0..n).map(|i| chord2(row(i), row(first))).collect();
    let trials = 2 + (k as f64).ln() as usize;
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let candidates: Vec<usize> = if total > 0.0 {
            (0..trials)
                .map(|_| sample_weighted(&d2, rng.random::<f64>() * total))
                .collect()
        } else {
            // every remaining vector duplicates a center; pick uniformly among unused
            let unused: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            vec![unused[rng.random_range(0..unused.len())]]
        };
        // keep the candidate that leaves the smallest total potential (first on ties)
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for &cand in &candidates {
            let c = row(cand);
            let next: Vec<f64> = d2
                .par_iter()
                .enumerate()
                .map(|(i, &w)| w.min(chord2(row(i), c)))
                .collect();
            let pot: f64 = next.iter().sum();
            if best.as_ref().is_none_or(|b| pot < b.1) {
                best = Some((cand, pot, next));
            }
        }
        let (pick, _, next) = best.expect("at least one candidate");
        centers.push(pick);
        chosen[pick] = true;
        d2 = next;
    }

    let mut centroid_data: Vec<T> = Vec::with_capacity(k * dim);
    for &c in &centers {
        centroid_data.extend_from_slice(row(c));
    }
    let mut centroids = TokenMatrix::new(k, dim, centroid_data)?;
    let mut assignment: Vec<u32> = Vec::new();

    for _ in 0..iters {
        let scored: Vec<(u32, T)> = vectors
            .par_chunks_exact(dim)
            .map(|v| nearest_centroid(v, &centroids))
            .collect();
        let next: Vec<u32> = scored.iter().map(|s| s.0).collect();
        if next == assignment {
            break;
        }
        assignment = next;

        let mut sums = vec![0.0f64; k * dim];
        let mut counts = vec![0usize; k];
        for (i, &a) in assignment.iter().enumerate() {
            let a = a as usize;
            counts[a] += 1;
            for (s, x) in sums[a * dim..(a + 1) * dim].iter_mut().zip(row(i)) {
                *s += x.as_f64();
            }
        }

        let mut data = centroids.as_slice().to_vec();
        let mut reseeded = vec![false; n];
        for c in 0..k {
            let slot = &mut data[c * dim..(c + 1) * dim];
            if counts[c] == 0 {
                // farthest vector from its current centroid, not already reused
                let far = scored
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !reseeded[*i])
                    .min_by(|a, b| {
                        a.1 .1
                            .partial_cmp(&b.1 .1)
                            .unwrap_or(std::cmp::Ordering::Equal)
                    })
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                reseeded[far] = true;
                slot.copy_from_slice(row(far));
                continue;
            }
            let mut mean: Vec<T> = sums[c * dim..(c + 1) * dim]
                .iter()
                .map(|&s| T::from_f64_lossy(s))
                .collect();
            if normalize_in_place(&mut mean) {
                slot.copy_from_slice(&mean);
            }
        }
        centroids = TokenMatrix::new(k, dim, data)?;
    }
    Ok(centroids)
}

/// Index whose cumulative positive weight first exceeds `target`.
fn sample_weighted(weights: &[f64], mut target: f64) -> usize {
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        if target < w {
            return i;
        }
        target -= w;
    }
    // round-off can run off the end; take the last positive weight
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

#[inline]
fn chord2<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    (2.0 - 2.0 * dot(a, b).as_f64()).max(0.0)
}
