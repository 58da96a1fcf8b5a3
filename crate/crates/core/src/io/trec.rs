//! TREC text formats.
//!
//! qrels: `qid 0 docid grade`; run: `qid Q0 docid rank score tag`. Columns are
//! whitespace-delimited (repeated whitespace tolerated); blank lines and lines
//! starting with `#` are skipped. Column counts are strict.

use log::warn;

use crate::error::{Error, Result};
use crate::metrics::{Qrels, RunEntry, RunFile};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let t = l.trim();
        (!t.is_empty() && !t.starts_with('#')).then(|| (i + 1, t.split_whitespace().collect()))
    })
}

fn malformed(line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedLine {
        line,
        reason: reason.into(),
    }
}

pub fn parse_qrels(text: &str) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for (line, cols) in content_lines(text) {
        let [q, _iter, d, g] = cols[..] else {
            return Err(malformed(
                line,
                format!("expected 4 columns, found {}", cols.len()),
            ));
        };
        let grade: u32 = g
            .parse()
            .map_err(|_| malformed(line, format!("grade {g:?} is not a non-negative integer")))?;
        if !qrels.insert(q, d, grade) {
            return Err(Error::DuplicateJudgment {
                line,
                query: q.into(),
                doc: d.into(),
            });
        }
    }
    Ok(qrels)
}

pub fn write_qrels(qrels: &Qrels) -> String {
    qrels
        .iter()
        .map(|(q, d, g)| format!("{q} 0 {d} {g}\n"))
        .collect()
}

/// Parses a run file. Ranks that are not 1..n in score order only warn.
pub fn parse_run(text: &str) -> Result<RunFile> {
    let mut run = RunFile::new();
    for (line, cols) in content_lines(text) {
        let [q, _q0, d, rank, score, _tag] = cols[..] else {
            return Err(malformed(
                line,
                format!("expected 6 columns, found {}", cols.len()),
            ));
        };
        let rank: usize = rank
            .parse()
            .map_err(|_| malformed(line, format!("bad rank {rank:?}")))?;
        let score: f64 = score
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| malformed(line, format!("bad score {score:?}")))?;
        let entries = run.queries.entry(q.to_string()).or_default();
        if entries.iter().any(|e| e.doc_id == d) {
            return Err(malformed(
                line,
                format!("document {d} repeated for query {q}"),
            ));
        }
        entries.push(RunEntry {
            doc_id: d.to_string(),
            rank,
            score,
        });
    }
    for (q, entries) in &run.queries {
        if !ranks_contiguous(entries) {
            warn!("query {q}: ranks are not contiguous 1..n in score order");
        }
    }
    Ok(run)
}

fn ranks_contiguous(entries: &[RunEntry]) -> bool {
    entries.iter().enumerate().all(|(i, e)| e.rank == i + 1)
        && entries.windows(2).all(|w| {
            w[0].score > w[1].score || (w[0].score == w[1].score && w[0].doc_id < w[1].doc_id)
        })
}

/// Serializes a run. Every query's entries must already be ranked 1..n in score
/// order with ties by ascending doc id. Scores use the shortest representation
/// that reads back to the same value.
pub fn write_run(run: &RunFile, tag: &str) -> Result<String> {
    if tag.is_empty() || tag.chars().any(char::is_whitespace) {
        return Err(Error::InvalidConfig(format!(
            "run tag {tag:?} must be one non-empty word"
        )));
    }
    let mut out = String::new();
    for (q, entries) in &run.queries {
        if !ranks_contiguous(entries) {
            return Err(Error::NonContiguousRanks { query: q.clone() });
        }
        for e in entries {
            out.push_str(&format!(
                "{q} Q0 {} {} {} {tag}\n",
                e.doc_id, e.rank, e.score
            ));
        }
    }
    Ok(out)
}
