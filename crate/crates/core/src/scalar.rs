//! Scalar abstraction shared by every numeric kernel in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point element type for embeddings: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy narrowing used by the on-disk formats, which always store 32 or 16 bits.
    fn to_f32_lossy(self) -> f32 {
        self.to_f32().unwrap_or(f32::NAN)
    }

    fn from_f32_exact(v: f32) -> Self {
        Self::from_f32(v).unwrap_or_else(Self::nan)
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Dot product with eight independent partial sums.
///
/// The lane layout is fixed, so the result is bit-stable for a given input on a
/// given platform, and the compiler is free to vectorize the inner loop.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 8];
    let chunks_a = a.chunks_exact(8);
    let chunks_b = b.chunks_exact(8);
    let tail_a = chunks_a.remainder();
    let tail_b = chunks_b.remainder();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for lane in 0..8 {
            acc[lane] = acc[lane] + ca[lane] * cb[lane];
        }
    }
    let mut tail = T::zero();
    for (x, y) in tail_a.iter().zip(tail_b) {
        tail = tail + *x * *y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Scales `v` to unit length in place. Returns `false` (leaving `v` untouched)
/// when the vector is too short to normalize.
pub fn normalize_in_place<T: Scalar>(v: &mut [T]) -> bool {
    let n = norm(v);
    if !n.is_finite() || n <= T::from_f64_lossy(1e-12) {
        return false;
    }
    for x in v.iter_mut() {
        *x = *x / n;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive_sum_for_odd_lengths() {
        for len in [1usize, 7, 8, 9, 17, 128, 131] {
            let a: Vec<f64> = (0..len).map(|i| (i as f64 * 0.37).sin()).collect();
            let b: Vec<f64> = (0..len).map(|i| (i as f64 * 0.11).cos()).collect();
            let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            assert!((dot(&a, &b) - naive).abs() < 1e-12, "len {len}");
        }
    }

    #[test]
    fn normalize_rejects_zero_vector() {
        let mut v = [0.0f32; 4];
        assert!(!normalize_in_place(&mut v));
        let mut w = [3.0f32, 4.0];
        assert!(normalize_in_place(&mut w));
        assert!((w[0] - 0.6).abs() < 1e-7 && (w[1] - 0.8).abs() < 1e-7);
    }
}
