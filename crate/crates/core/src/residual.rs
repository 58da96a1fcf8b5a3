//! Low-bit residual codec: a vector is stored as its centroid id plus a
//! per-vector symmetric uniform quantization of `vector - centroid`.
//!
//! With scale `s = max |r_i|`, one bit maps each component to `{-s, +s}` and two
//! bits map it to the nearest of `{-s, -s/3, +s/3, +s}`. Codes are packed
//! little-endian within each byte, component 0 in the lowest bits.

use crate::error::{Error, Result};
use crate::scalar::{normalize_in_place, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualCode {
    pub scale: f32,
    pub packed: Vec<u8>,
}

pub fn check_bits(bits: u8) -> Result<()> {
    match bits {
        1 | 2 => Ok(()),
        other => Err(Error::UnsupportedBits(other)),
    }
}

/// Bytes of packed codes for one `dim`-wide vector.
pub fn packed_len(dim: usize, bits: u8) -> usize {
    (dim * bits as usize).div_ceil(8)
}

/// Level index for one component. Zero-scale residuals encode as all-zero codes.
fn level<T: Scalar>(r: T, scale: T, bits: u8) -> u8 {
    if scale == T::zero() {
        return 0;
    }
    match bits {
        1 => u8::from(r >= T::zero()),
        _ => {
            let two_thirds = scale * T::from_f64_lossy(2.0 / 3.0);
            if r < -two_thirds {
                0
            } else if r < T::zero() {
                1
            } else if r < two_thirds {
                2
            } else {
                3
            }
        }
    }
}

fn value<T: Scalar>(code: u8, scale: T, bits: u8) -> T {
    if scale == T::zero() {
        return T::zero();
    }
    let third = scale / T::from_f64_lossy(3.0);
    match (bits, code) {
        (1, 0) => -scale,
        (1, _) => scale,
        (_, 0) => -scale,
        (_, 1) => -third,
        (_, 2) => third,
        _ => scale,
    }
}

pub fn quantize_residual<T: Scalar>(residual: &[T], bits: u8) -> Result<ResidualCode> {
    check_bits(bits)?;
    let scale = residual.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    // quantize against the scale as it will be stored
    let stored = scale.to_f32_lossy();
    let s = T::from_f32_exact(stored);
    let mut packed = vec![0u8; packed_len(residual.len(), bits)];
    for (i, &r) in residual.iter().enumerate() {
        let bit = i * bits as usize;
        packed[bit / 8] |= level(r, s, bits) << (bit % 8);
    }
    Ok(ResidualCode {
        scale: stored,
        packed,
    })
}

pub fn dequantize_residual<T: Scalar>(code: &ResidualCode, dim: usize, bits: u8) -> Result<Vec<T>> {
    check_bits(bits)?;
    if code.packed.len() != packed_len(dim, bits) {
        return Err(Error::TruncatedPayload {
            expected: packed_len(dim, bits),
            found: code.packed.len(),
        });
    }
    let s = T::from_f32_exact(code.scale);
    let mask = (1u8 << bits) - 1;
    Ok((0..dim)
        .map(|i| {
            let bit = i * bits as usize;
            value((code.packed[bit / 8] >> (bit % 8)) & mask, s, bits)
        })
        .collect())
}

pub fn encode_residual<T: Scalar>(vector: &[T], centroid: &[T], bits: u8) -> Result<ResidualCode> {
    if vector.len() != centroid.len() {
        return Err(Error::DimensionMismatch {
            expected: centroid.len(),
            found: vector.len(),
        });
    }
    let r: Vec<T> = vector.iter().zip(centroid).map(|(v, c)| *v - *c).collect();
    quantize_residual(&r, bits)
}

/// Reconstructs `centroid + residual` and renormalizes it.
pub fn decode_residual<T: Scalar>(code: &ResidualCode, centroid: &[T], bits: u8) -> Result<Vec<T>> {
    let r = dequantize_residual::<T>(code, centroid.len(), bits)?;
    let mut v: Vec<T> = centroid.iter().zip(&r).map(|(c, x)| *c + *x).collect();
    if !normalize_in_place(&mut v) {
        v.copy_from_slice(centroid);
    }
    Ok(v)
}

/// Byte accounting for an index's vector payload. Centroid tables are listed
/// separately since they do not scale with corpus size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageReport {
    pub vectors: usize,
    pub dim: usize,
    pub residual_bits: u8,
    pub raw_float32_bytes: u64,
    pub raw_float16_bytes: u64,
    /// Per-vector payload: 4-byte centroid id, packed codes, 4-byte scale.
    /// Equal to the float16 size when residuals are off.
    pub compressed_bytes: u64,
    pub centroid_bytes: u64,
    pub ratio: f64,
}

/// Bytes stored per vector at a given bit width (centroid id + codes + scale).
pub fn bytes_per_vector(dim: usize, bits: u8) -> usize {
    4 + packed_len(dim, bits) + 4
}

impl StorageReport {
    pub fn compute(vectors: usize, dim: usize, residual_bits: u8, num_centroids: usize) -> Self {
        let raw32 = (vectors * dim * 4) as u64;
        let raw16 = (vectors * dim * 2) as u64;
        let compressed = if residual_bits == 0 {
            raw16
        } else {
            (vectors * bytes_per_vector(dim, residual_bits)) as u64
        };
        Self {
            vectors,
            dim,
            residual_bits,
            raw_float32_bytes: raw32,
            raw_float16_bytes: raw16,
            compressed_bytes: compressed,
            centroid_bytes: (num_centroids * dim * 4) as u64,
            ratio: if compressed == 0 {
                0.0
            } else {
                raw16 as f64 / compressed as f64
            },
        }
    }

    /// Two-column text table.
    pub fn to_table(&self) -> String {
        let rows = [
            ("vectors", self.vectors.to_string()),
            ("dim", self.dim.to_string()),
            ("residual_bits", self.residual_bits.to_string()),
            ("raw_float32_bytes", self.raw_float32_bytes.to_string()),
            ("raw_float16_bytes", self.raw_float16_bytes.to_string()),
            ("compressed_bytes", self.compressed_bytes.to_string()),
            ("centroid_bytes", self.centroid_bytes.to_string()),
            ("ratio_vs_float16", format!("{:.4}", self.ratio)),
        ];
        let mut out = String::new();
        for (k, v) in rows {
            out.push_str(&format!("{k:<20}{v:>16}\n"));
        }
        out
    }
}
