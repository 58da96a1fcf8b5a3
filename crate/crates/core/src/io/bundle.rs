use half::f16;

use super::header::{push_comments, Header, END};
use crate::corpus::{Corpus, Dtype, Pooling};
use crate::error::{Error, Result};
use crate::matrix::{TokenMatrix, F16_UNIT_NORM_TOLERANCE, UNIT_NORM_TOLERANCE};
use crate::scalar::Scalar;

pub const BUNDLE_MAGIC: &str = "LATEBENCH-BUNDLE";
pub const BUNDLE_VERSION: u32 = 1;

/// Serializes a corpus:
///
/// ```text
/// LATEBENCH-BUNDLE
/// version 1
/// dim <dim>
/// dtype float32|float16
/// pooling none|fixed
/// c <C, 0 when pooling is none>
/// doc_count <n>
/// total_vectors <m>
/// doc <id> <rows> <byte offset into payload>     (n lines)
/// end_header
/// <payload: row-major little-endian matrices in document order>
/// ```
pub fn write_bundle<T: Scalar>(corpus: &Corpus<T>) -> Vec<u8> {
    write_bundle_with_comments(corpus, &[])
}

pub fn write_bundle_with_comments<T: Scalar>(corpus: &Corpus<T>, comments: &[String]) -> Vec<u8> {
    let m = corpus.manifest();
    let mut head = format!("{BUNDLE_MAGIC}\nversion {BUNDLE_VERSION}\n");
    push_comments(&mut head, comments);
    let (pooling, c) = match m.pooling {
        Pooling::None => ("none", 0),
        Pooling::Fixed(c) => ("fixed", c),
    };
    head.push_str(&format!(
        "dim {}\ndtype {}\npooling {pooling}\nc {c}\ndoc_count {}\ntotal_vectors {}\n",
        m.dim, m.dtype, m.doc_count, m.total_vectors
    ));
    let mut offset = 0usize;
    for (id, doc) in corpus.iter() {
        head.push_str(&format!("doc {id} {} {offset}\n", doc.rows()));
        offset += doc.rows() * m.dim * m.dtype.bytes();
    }
    head.push_str(END);
    head.push('\n');

    let mut out = head.into_bytes();
    out.reserve(offset);
    for doc in corpus.docs() {
        for &x in doc.as_slice() {
            match m.dtype {
                Dtype::Float32 => out.extend_from_slice(&x.to_f32_lossy().to_le_bytes()),
                Dtype::Float16 => {
                    out.extend_from_slice(&f16::from_f32(x.to_f32_lossy()).to_le_bytes())
                }
            }
        }
    }
    out
}

/// Parses a bundle that must span all of `bytes`.
pub fn read_bundle<T: Scalar>(bytes: &[u8]) -> Result<Corpus<T>> {
    let (corpus, used) = read_bundle_prefix(bytes)?;
    if used != bytes.len() {
        return Err(Error::MalformedHeader(format!(
            "{} trailing bytes after payload",
            bytes.len() - used
        )));
    }
    Ok(corpus)
}

/// Parses a bundle at the start of `bytes`, returning it and the bytes consumed.
pub fn read_bundle_prefix<T: Scalar>(bytes: &[u8]) -> Result<(Corpus<T>, usize)> {
    let mut h = Header::parse(bytes, BUNDLE_MAGIC, BUNDLE_VERSION)?;
    let dim: usize = h.take_parsed("dim")?;
    let dtype: Dtype = h
        .take("dtype")?
        .parse()
        .map_err(|_| Error::MalformedHeader("bad dtype".into()))?;
    let pooling_kind = h.take("pooling")?;
    let c: usize = h.take_parsed("c")?;
    let pooling = match pooling_kind.as_str() {
        "none" => Pooling::None,
        "fixed" => Pooling::Fixed(c),
        other => return Err(Error::MalformedHeader(format!("bad pooling {other:?}"))),
    };
    let doc_count: usize = h.take_parsed("doc_count")?;
    let total_vectors: usize = h.take_parsed("total_vectors")?;
    if dim == 0 {
        return Err(Error::MalformedHeader("dim must be at least 1".into()));
    }

    let mut table = Vec::with_capacity(doc_count);
    let mut expected_offset = 0usize;
    for _ in 0..doc_count {
        let line = h.take("doc")?;
        let parts: Vec<&str> = line.split(' ').collect();
        let [id, rows, offset] = parts[..] else {
            return Err(Error::MalformedHeader(format!("bad doc line {line:?}")));
        };
        let rows: usize = rows
            .parse()
            .map_err(|_| Error::MalformedHeader(format!("bad rows in {line:?}")))?;
        let offset: usize = offset
            .parse()
            .map_err(|_| Error::MalformedHeader(format!("bad offset in {line:?}")))?;
        if offset < expected_offset {
            return Err(Error::OffsetOverlap {
                doc: id.to_string(),
            });
        }
        if offset > expected_offset {
            return Err(Error::MalformedHeader(format!(
                "gap before document {id:?}"
            )));
        }
        expected_offset = offset + rows * dim * dtype.bytes();
        table.push((id.to_string(), rows, offset));
    }
    h.finish()?;

    let payload = &bytes[h.len..];
    if payload.len() < expected_offset {
        return Err(Error::TruncatedPayload {
            expected: expected_offset,
            found: payload.len(),
        });
    }
    let tol = match dtype {
        Dtype::Float32 => UNIT_NORM_TOLERANCE,
        Dtype::Float16 => F16_UNIT_NORM_TOLERANCE,
    };
    let mut ids = Vec::with_capacity(doc_count);
    let mut docs = Vec::with_capacity(doc_count);
    for (id, rows, offset) in table {
        let raw = &payload[offset..offset + rows * dim * dtype.bytes()];
        let data: Vec<T> = match dtype {
            Dtype::Float32 => raw
                .chunks_exact(4)
                .map(|b| T::from_f32_exact(f32::from_le_bytes([b[0], b[1], b[2], b[3]])))
                .collect(),
            Dtype::Float16 => raw
                .chunks_exact(2)
                .map(|b| T::from_f32_exact(f16::from_le_bytes([b[0], b[1]]).to_f32()))
                .collect(),
        };
        docs.push(TokenMatrix::with_tolerance(rows, dim, data, tol)?);
        ids.push(id);
    }
    let corpus = Corpus::new(ids, docs, dtype, pooling)?;
    if corpus.manifest().total_vectors != total_vectors {
        return Err(Error::MalformedHeader(format!(
            "total_vectors {total_vectors} disagrees with document table ({})",
            corpus.manifest().total_vectors
        )));
    }
    Ok((corpus, h.len + expected_offset))
}
