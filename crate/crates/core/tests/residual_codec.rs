mod common;

use std::sync::Arc;

use common::*;
use latebench_core::io::{read_plaid_index, write_plaid_index};
use latebench_core::residual::{bytes_per_vector, decode_residual, encode_residual};
use latebench_core::{build_plaid, PlaidConfig, PlaidSearchParams, StorageReport, TokenMatrix};
use rand::Rng;

/// Standalone 2-bit quantizer: levels {-s, -s/3, s/3, s} with s = max |r_i|,
/// nearest level per component, result renormalized.
fn naive_two_bit(v: &[f32], c: &[f32]) -> Vec<f64> {
    let r: Vec<f64> = v
        .iter()
        .zip(c)
        .map(|(a, b)| *a as f64 - *b as f64)
        .collect();
    let s = r.iter().fold(0.0f64, |m, x| m.max(x.abs())) as f32 as f64;
    let levels = [-s, -s / 3.0, s / 3.0, s];
    let mut out: Vec<f64> = r
        .iter()
        .zip(c)
        .map(|(x, cc)| {
            let mut best = levels[0];
            for l in levels {
                if (x - l).abs() < (x - best).abs() {
                    best = l;
                }
            }
            *cc as f64 + best
        })
        .collect();
    let n = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    out.iter_mut().for_each(|x| *x /= n);
    out
}

fn cosine(a: &[f32], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| *x as f64 * y).sum()
}

/// Regression floor: first measurement was 0.969762 for both the library and
/// the standalone quantizer on this seed.
const MEAN_COSINE_FLOOR: f64 = 0.969;

#[test]
fn two_bit_mean_cosine_matches_standalone_quantizer() {
    let mut r = rng(4);
    let dim = 128;
    let centroids = random_unit_rows(&mut r, 64, dim);
    let (mut lib, mut naive, n) = (0.0, 0.0, 4000);
    for _ in 0..n {
        let c = &centroids[r.random_range(0..64)];
        let noise = random_unit_rows(&mut r, 1, dim).remove(0);
        let v: Vec<f32> = c.iter().zip(&noise).map(|(a, b)| a + 0.5 * b).collect();
        let v = TokenMatrix::from_rows_normalized(&[v]).unwrap().into_vec();
        let code = encode_residual(&v, c, 2).unwrap();
        let decoded: Vec<f32> = decode_residual(&code, c, 2).unwrap();
        let decoded: Vec<f64> = decoded.iter().map(|&x| x as f64).collect();
        lib += cosine(&v, &decoded);
        naive += cosine(&v, &naive_two_bit(&v, c));
    }
    let (lib, naive) = (lib / n as f64, naive / n as f64);
    eprintln!("mean cosine: library {lib:.6} standalone {naive:.6}");
    assert!((lib - naive).abs() < 1e-5);
    assert!(lib >= MEAN_COSINE_FLOOR, "{lib}");
}

#[test]
fn storage_for_ten_thousand_vectors() {
    let rep = StorageReport::compute(10_000, 128, 2, 256);
    // independent arithmetic: 4-byte code + 128*2/8 packed bytes + 4-byte scale
    assert_eq!(bytes_per_vector(128, 2), 4 + 32 + 4);
    assert_eq!(rep.compressed_bytes, 10_000 * 40);
    assert_eq!(rep.raw_float16_bytes, 10_000 * 256);
    assert_eq!(rep.raw_float32_bytes, 10_000 * 512);
    assert_eq!(rep.centroid_bytes, 256 * 128 * 4);
    assert!(rep.ratio >= 6.0, "{}", rep.ratio);
    assert!((rep.ratio - 6.4).abs() < 1e-12);
}

#[test]
fn residual_index_round_trips_and_rebuilds_identically() {
    let data = planted(small_spec(9));
    let corpus = Arc::new(data.corpus);
    let cfg = PlaidConfig {
        num_centroids: 32,
        residual_bits: 2,
        ..PlaidConfig::default()
    };
    let a = build_plaid(corpus.clone(), cfg).unwrap();
    let b = build_plaid(corpus.clone(), cfg).unwrap();
    let bytes = write_plaid_index(&a, &[]);
    assert_eq!(bytes, write_plaid_index(&b, &[]));
    let back = read_plaid_index::<f32>(&bytes).unwrap();
    assert_eq!(write_plaid_index(&back, &[]), bytes);
    assert!(back.corpus().is_none());
    let p = PlaidSearchParams::default();
    for q in data.queries.docs() {
        assert_eq!(back.search(q, 10, p).unwrap(), a.search(q, 10, p).unwrap());
    }
}

#[test]
fn residual_rescoring_keeps_planted_targets() {
    let data = planted(small_spec(10));
    let corpus = Arc::new(data.corpus);
    let cfg = PlaidConfig {
        num_centroids: 32,
        residual_bits: 2,
        ..PlaidConfig::default()
    };
    let idx = build_plaid(corpus.clone(), cfg).unwrap();
    for (qi, q) in data.queries.docs().iter().enumerate() {
        let got = idx.search(q, 10, PlaidSearchParams::default()).unwrap();
        assert_eq!(got.hits[0].doc_id, corpus.doc_id(data.targets[qi]));
    }
}
