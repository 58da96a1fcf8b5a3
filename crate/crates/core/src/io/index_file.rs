//! Index files. The header records the kind and every build parameter; the
//! payload holds centroids (f32), one u32 centroid/list id per corpus vector, and
//! then either the embedded corpus bundle or, for residual-compressed PLAID
//! indexes, one `f32 scale + packed codes` record per vector.

use std::sync::Arc;

use super::bundle::{read_bundle_prefix, write_bundle};
use super::header::{push_comments, Header, END};
use crate::error::{Error, Result};
use crate::ivf::{IvfConfig, IvfIndex};
use crate::matrix::TokenMatrix;
use crate::plaid::{PlaidConfig, PlaidIndex};
use crate::residual::{packed_len, ResidualCode};
use crate::scalar::Scalar;

pub const INDEX_MAGIC: &str = "LATEBENCH-INDEX";
pub const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub enum AnyIndex<T> {
    Ivf(IvfIndex<T>),
    Plaid(PlaidIndex<T>),
}

fn put_centroids<T: Scalar>(out: &mut Vec<u8>, c: &TokenMatrix<T>) {
    for &x in c.as_slice() {
        out.extend_from_slice(&x.to_f32_lossy().to_le_bytes());
    }
}

fn put_u32s(out: &mut Vec<u8>, xs: &[u32]) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

pub fn write_ivf_index<T: Scalar>(index: &IvfIndex<T>, comments: &[String]) -> Vec<u8> {
    let c = index.config();
    let mut head = format!("{INDEX_MAGIC}\nversion {INDEX_VERSION}\n");
    push_comments(&mut head, comments);
    head.push_str(&format!(
        "kind ivf\ndim {}\nnlist {}\nnprobe {}\nper_token_candidates {}\nkmeans_iters {}\nseed {}\ntotal_vectors {}\n{END}\n",
        index.corpus().dim(),
        c.nlist,
        c.nprobe,
        c.per_token_candidates,
        c.kmeans_iters,
        c.seed,
        index.assignments().len(),
    ));
    let mut out = head.into_bytes();
    put_centroids(&mut out, index.centroids());
    put_u32s(&mut out, index.assignments());
    out.extend(write_bundle(index.corpus().as_ref()));
    out
}

pub fn write_plaid_index<T: Scalar>(index: &PlaidIndex<T>, comments: &[String]) -> Vec<u8> {
    let c = index.config();
    let mut head = format!("{INDEX_MAGIC}\nversion {INDEX_VERSION}\n");
    push_comments(&mut head, comments);
    head.push_str(&format!(
        "kind plaid\ndim {}\nnum_centroids {}\nncells {}\ncentroid_score_threshold {}\nndocs {}\n\
         residual_bits {}\nkmeans_iters {}\nseed {}\ndoc_count {}\ntotal_vectors {}\n",
        index.dim(),
        c.num_centroids,
        c.ncells,
        c.centroid_score_threshold,
        c.ndocs,
        c.residual_bits,
        c.kmeans_iters,
        c.seed,
        index.doc_count(),
        index.codes().len(),
    ));
    if index.residuals().is_some() {
        head.push_str("vectors residual\n");
        for (d, id) in index.doc_ids().iter().enumerate() {
            let rows = index.doc_rows(d).expect("ordinal in range");
            head.push_str(&format!("doc {id} {rows}\n"));
        }
    } else {
        head.push_str("vectors embedded\n");
    }
    head.push_str(END);
    head.push('\n');
    let mut out = head.into_bytes();
    put_centroids(&mut out, index.centroids());
    put_u32s(&mut out, index.codes());
    match (index.residuals(), index.corpus()) {
        (Some(res), _) => {
            for r in res {
                out.extend_from_slice(&r.scale.to_le_bytes());
                out.extend_from_slice(&r.packed);
            }
        }
        (None, Some(corpus)) => out.extend(write_bundle(corpus.as_ref())),
        (None, None) => unreachable!("index always has a vector source"),
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::TruncatedPayload {
                expected: self.pos + n,
                found: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn f32s<T: Scalar>(&mut self, n: usize) -> Result<Vec<T>> {
        Ok(self
            .take(n * 4)?
            .chunks_exact(4)
            .map(|b| T::from_f32_exact(f32::from_le_bytes([b[0], b[1], b[2], b[3]])))
            .collect())
    }

    fn u32s(&mut self, n: usize) -> Result<Vec<u32>> {
        Ok(self
            .take(n * 4)?
            .chunks_exact(4)
            .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect())
    }

    fn rest(&self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }
}

pub fn read_index<T: Scalar>(bytes: &[u8]) -> Result<AnyIndex<T>> {
    let mut h = Header::parse(bytes, INDEX_MAGIC, INDEX_VERSION)?;
    match h.take("kind")?.as_str() {
        "ivf" => read_ivf(h, bytes).map(AnyIndex::Ivf),
        "plaid" => read_plaid(h, bytes).map(AnyIndex::Plaid),
        other => Err(Error::MalformedHeader(format!(
            "unknown index kind {other:?}"
        ))),
    }
}

pub fn read_ivf_index<T: Scalar>(bytes: &[u8]) -> Result<IvfIndex<T>> {
    match read_index(bytes)? {
        AnyIndex::Ivf(i) => Ok(i),
        AnyIndex::Plaid(_) => Err(Error::MalformedHeader(
            "expected an ivf index, found plaid".into(),
        )),
    }
}

pub fn read_plaid_index<T: Scalar>(bytes: &[u8]) -> Result<PlaidIndex<T>> {
    match read_index(bytes)? {
        AnyIndex::Plaid(i) => Ok(i),
        AnyIndex::Ivf(_) => Err(Error::MalformedHeader(
            "expected a plaid index, found ivf".into(),
        )),
    }
}

fn read_ivf<T: Scalar>(mut h: Header, bytes: &[u8]) -> Result<IvfIndex<T>> {
    let dim: usize = h.take_parsed("dim")?;
    let config = IvfConfig {
        nlist: h.take_parsed("nlist")?,
        nprobe: h.take_parsed("nprobe")?,
        per_token_candidates: h.take_parsed("per_token_candidates")?,
        kmeans_iters: h.take_parsed("kmeans_iters")?,
        seed: h.take_parsed("seed")?,
    };
    let total: usize = h.take_parsed("total_vectors")?;
    h.finish()?;
    config.validate()?;
    let mut cur = Cursor { bytes, pos: h.len };
    let centroids = TokenMatrix::new(config.nlist, dim, cur.f32s(config.nlist * dim)?)?;
    let assignments = cur.u32s(total)?;
    let (corpus, used) = read_bundle_prefix::<T>(cur.rest())?;
    if used != cur.rest().len() {
        return Err(Error::MalformedHeader(
            "trailing bytes after embedded corpus".into(),
        ));
    }
    IvfIndex::from_parts(Arc::new(corpus), centroids, assignments, config)
}

fn read_plaid<T: Scalar>(mut h: Header, bytes: &[u8]) -> Result<PlaidIndex<T>> {
    let dim: usize = h.take_parsed("dim")?;
    let config = PlaidConfig {
        num_centroids: h.take_parsed("num_centroids")?,
        ncells: h.take_parsed("ncells")?,
        centroid_score_threshold: h.take_parsed("centroid_score_threshold")?,
        ndocs: h.take_parsed("ndocs")?,
        residual_bits: h.take_parsed("residual_bits")?,
        kmeans_iters: h.take_parsed("kmeans_iters")?,
        seed: h.take_parsed("seed")?,
    };
    let doc_count: usize = h.take_parsed("doc_count")?;
    let total: usize = h.take_parsed("total_vectors")?;
    let mode = h.take("vectors")?;
    let mut table = Vec::new();
    if mode == "residual" {
        for _ in 0..doc_count {
            let line = h.take("doc")?;
            let (id, rows) = line
                .split_once(' ')
                .and_then(|(id, r)| r.parse::<usize>().ok().map(|r| (id.to_string(), r)))
                .ok_or_else(|| Error::MalformedHeader(format!("bad doc line {line:?}")))?;
            table.push((id, rows));
        }
    } else if mode != "embedded" {
        return Err(Error::MalformedHeader(format!(
            "unknown vectors mode {mode:?}"
        )));
    }
    h.finish()?;
    config.validate()?;

    let mut cur = Cursor { bytes, pos: h.len };
    let centroids = TokenMatrix::new(
        config.num_centroids,
        dim,
        cur.f32s(config.num_centroids * dim)?,
    )?;
    let codes = cur.u32s(total)?;
    if mode == "embedded" {
        let (corpus, used) = read_bundle_prefix::<T>(cur.rest())?;
        if used != cur.rest().len() {
            return Err(Error::MalformedHeader(
                "trailing bytes after embedded corpus".into(),
            ));
        }
        let rows: Vec<usize> = corpus.docs().iter().map(TokenMatrix::rows).collect();
        let ids = corpus.doc_ids().to_vec();
        return PlaidIndex::from_parts(
            config,
            centroids,
            ids,
            &rows,
            codes,
            None,
            Some(Arc::new(corpus)),
        );
    }
    let plen = packed_len(dim, config.residual_bits);
    let mut residuals = Vec::with_capacity(total);
    for _ in 0..total {
        let s = cur.take(4)?;
        let scale = f32::from_le_bytes([s[0], s[1], s[2], s[3]]);
        residuals.push(ResidualCode {
            scale,
            packed: cur.take(plen)?.to_vec(),
        });
    }
    if !cur.rest().is_empty() {
        return Err(Error::MalformedHeader(
            "trailing bytes after residuals".into(),
        ));
    }
    let rows: Vec<usize> = table.iter().map(|t| t.1).collect();
    let ids: Vec<String> = table.into_iter().map(|t| t.0).collect();
    PlaidIndex::from_parts(config, centroids, ids, &rows, codes, Some(residuals), None)
}
