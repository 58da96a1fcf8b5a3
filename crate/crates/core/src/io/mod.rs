//! On-disk formats: embedding bundles, index files, and TREC text formats.
//!
//! Binary files start with a human-readable header of `key value` lines closed
//! by an `end_header` line; lines starting with `#` are comments and carry the
//! producing command. All multi-byte numbers in payloads are little-endian and
//! floats are IEEE-754.

mod bundle;
mod header;
mod index_file;
mod trec;

pub use bundle::{
    read_bundle, read_bundle_prefix, write_bundle, write_bundle_with_comments, BUNDLE_MAGIC,
    BUNDLE_VERSION,
};
pub use header::header_comments;
pub use index_file::{
    read_index, read_ivf_index, read_plaid_index, write_ivf_index, write_plaid_index, AnyIndex,
    INDEX_MAGIC, INDEX_VERSION,
};
pub use trec::{parse_qrels, parse_run, write_qrels, write_run};
