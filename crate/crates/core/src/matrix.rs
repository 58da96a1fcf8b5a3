//! Row-major embedding matrices with a validated unit-norm contract.

use crate::error::{Error, Result};
use crate::scalar::{norm, normalize_in_place, Scalar};

/// Maximum allowed deviation of a row norm from 1.0.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-4;

/// Tolerance used for matrices decoded from 16-bit storage, whose per-component
/// rounding alone can move a norm by a few parts in 10^4.
pub const F16_UNIT_NORM_TOLERANCE: f64 = 2e-3;

/// One text's multi-vector representation: one row per token or pooled slot.
///
/// Construction validates every invariant, so a `TokenMatrix` in hand always has
/// `rows >= 1`, `dim >= 1`, finite entries, and unit-norm rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenMatrix<T> {
    rows: usize,
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> TokenMatrix<T> {
    pub fn new(rows: usize, dim: usize, data: Vec<T>) -> Result<Self> {
        Self::with_tolerance(rows, dim, data, UNIT_NORM_TOLERANCE)
    }

    pub(crate) fn with_tolerance(rows: usize, dim: usize, data: Vec<T>, tol: f64) -> Result<Self> {
        check(rows, dim, &data, tol)?;
        Ok(Self { rows, dim, data })
    }

    /// Builds a matrix from raw rows, scaling each to unit length first.
    pub fn from_rows_normalized(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            let mut r = r.clone();
            if !normalize_in_place(&mut r) {
                return Err(Error::NotNormalized {
                    row: i,
                    norm: norm(&r).as_f64(),
                });
            }
            data.extend_from_slice(&r);
        }
        Self::new(rows.len(), dim, data)
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), dim, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> std::slice::ChunksExact<'_, T> {
        self.data.chunks_exact(self.dim)
    }

    /// The first `min(n, rows)` rows. `n == 0` is clamped to one row so the result
    /// stays a valid matrix.
    pub fn prefix(&self, n: usize) -> Self {
        let keep = n.clamp(1, self.rows);
        Self {
            rows: keep,
            dim: self.dim,
            data: self.data[..keep * self.dim].to_vec(),
        }
    }

    /// Converts every entry to another scalar type, re-validating the result.
    pub fn cast<U: Scalar>(&self) -> Result<TokenMatrix<U>> {
        let data = self
            .data
            .iter()
            .map(|x| U::from_f64_lossy(x.as_f64()))
            .collect();
        TokenMatrix::new(self.rows, self.dim, data)
    }
}

/// Checks every `TokenMatrix` invariant on raw parts without taking ownership.
pub fn validate_matrix<T: Scalar>(rows: usize, dim: usize, data: &[T]) -> Result<()> {
    check(rows, dim, data, UNIT_NORM_TOLERANCE)
}

fn check<T: Scalar>(rows: usize, dim: usize, data: &[T], tol: f64) -> Result<()> {
    if rows == 0 || dim == 0 {
        return Err(Error::EmptyMatrix);
    }
    if data.len() != rows * dim {
        return Err(Error::ShapeMismatch {
            rows,
            dim,
            len: data.len(),
        });
    }
    for (r, row) in data.chunks_exact(dim).enumerate() {
        if let Some(c) = row.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: r, col: c });
        }
        let n = norm(row).as_f64();
        if (n - 1.0).abs() > tol {
            return Err(Error::NotNormalized { row: r, norm: n });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_basis_vector_is_valid() {
        assert!(TokenMatrix::new(1, 4, vec![1.0f32, 0.0, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn unnormalized_row_reports_index_and_norm() {
        match TokenMatrix::new(1, 4, vec![1.0f32, 1.0, 0.0, 0.0]) {
            Err(Error::NotNormalized { row, norm }) => {
                assert_eq!(row, 0);
                assert!((norm - std::f64::consts::SQRT_2).abs() < 1e-6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_rows_is_empty() {
        assert!(matches!(
            TokenMatrix::<f32>::new(0, 128, vec![]),
            Err(Error::EmptyMatrix)
        ));
        assert!(matches!(
            validate_matrix::<f64>(0, 128, &[]),
            Err(Error::EmptyMatrix)
        ));
    }

    #[test]
    fn non_finite_entry_is_located() {
        let data = vec![1.0f64, 0.0, 0.0, f64::NAN];
        assert!(matches!(
            TokenMatrix::new(2, 2, data),
            Err(Error::NonFinite { row: 1, col: 1 })
        ));
    }

    #[test]
    fn validation_does_not_mutate() {
        let data = vec![0.6f32, 0.8, 1.0, 1.0];
        let copy = data.clone();
        assert!(validate_matrix(2, 2, &data).is_err());
        assert_eq!(data, copy);
    }

    #[test]
    fn prefix_clamps() {
        let m = TokenMatrix::from_rows(&[vec![1.0f32, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(m.prefix(1).rows(), 1);
        assert_eq!(m.prefix(10).rows(), 2);
        assert_eq!(m.prefix(0).rows(), 1);
    }
}
