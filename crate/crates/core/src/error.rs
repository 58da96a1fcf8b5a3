use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the engine can report. Variants carry enough context to locate
/// the offending row, line, or parameter.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is empty (rows and dim must both be at least 1)")]
    EmptyMatrix,
    #[error("matrix shape {rows}x{dim} does not match data length {len}")]
    ShapeMismatch { rows: usize, dim: usize, len: usize },
    #[error("row {row} is not unit norm (norm {norm})")]
    NotNormalized { row: usize, norm: f64 },
    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),
    #[error("need at least {needed} vectors, have {available}")]
    TooFewVectors { needed: usize, available: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("ndocs {ndocs} is smaller than k {k}")]
    NDocsTooSmall { ndocs: usize, k: usize },
    #[error("unknown document ordinal {0}")]
    UnknownDoc(usize),
    #[error("unsupported residual bit width {0} (expected 1 or 2)")]
    UnsupportedBits(u8),
    #[error("query {0} has no judgments in qrels")]
    QueryMissingFromQrels(String),
    #[error("runs share no query ids")]
    NoSharedQueries,
    #[error("index holds no documents")]
    EmptyIndex,
    #[error("no truncation lengths given")]
    EmptyLengths,
    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: String, expected: u32 },
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("offset of document {doc} overlaps or is out of order")]
    OffsetOverlap { doc: String },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: malformed input: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: duplicate judgment for ({query}, {doc})")]
    DuplicateJudgment {
        line: usize,
        query: String,
        doc: String,
    },
    #[error("query {query}: ranks are not contiguous 1..n in score order")]
    NonContiguousRanks { query: String },
    #[error("synthetic spec infeasible: {0}")]
    SpecInfeasible(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyMatrix => "EmptyMatrix",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::NonFinite { .. } => "NonFinite",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::EmptyCorpus => "EmptyCorpus",
            Error::InvalidCorpus(_) => "InvalidCorpus",
            Error::TooFewVectors { .. } => "TooFewVectors",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::NDocsTooSmall { .. } => "NDocsTooSmall",
            Error::UnknownDoc(_) => "UnknownDoc",
            Error::UnsupportedBits(_) => "UnsupportedBits",
            Error::QueryMissingFromQrels(_) => "QueryMissingFromQrels",
            Error::NoSharedQueries => "NoSharedQueries",
            Error::EmptyIndex => "EmptyIndex",
            Error::EmptyLengths => "EmptyLengths",
            Error::BadMagic { .. } => "BadMagic",
            Error::VersionMismatch { .. } => "VersionMismatch",
            Error::TruncatedPayload { .. } => "TruncatedPayload",
            Error::OffsetOverlap { .. } => "OffsetOverlap",
            Error::MalformedHeader(_) => "MalformedHeader",
            Error::MalformedLine { .. } => "MalformedLine",
            Error::DuplicateJudgment { .. } => "DuplicateJudgment",
            Error::NonContiguousRanks { .. } => "NonContiguousRanks",
            Error::SpecInfeasible(_) => "SpecInfeasible",
            Error::Io(_) => "Io",
        }
    }
}
