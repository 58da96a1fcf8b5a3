//! Late-interaction retrieval primitives: exact MaxSim scoring, IVF and
//! PLAID-style candidate generation, residual compression, IR metrics, and
//! the diagnostics built on top of them.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*F32` / `*F64` aliases below name the common instantiations.

pub mod backend;
pub mod corpus;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod ivf;
pub mod kmeans;
pub mod matrix;
pub mod maxsim;
pub mod metrics;
pub mod plaid;
pub mod pooling;
pub mod ranking;
pub mod residual;
pub mod scalar;
pub mod synthetic;

pub use backend::{run_queries, ExactBackend, IvfBackend, PlaidBackend, Retriever};
pub use corpus::{Corpus, CorpusManifest, Dtype, Pooling, QuerySet};
pub use diagnostics::{
    centroid_coverage, centroid_coverage_of, compare_runs, grid_search, truncation_ablation,
    AblationRow, AblationTable, AgreementReport, CoverageReport, DocCoverage, GridResult, GridRow,
    MetricDelta, DEFAULT_COVERAGE_SAMPLE,
};
pub use error::{Error, Result};
pub use ivf::{build_ivf, ivf_search, IvfConfig, IvfIndex, IvfSearchParams};
pub use kmeans::train_kmeans;
pub use matrix::{validate_matrix, TokenMatrix, F16_UNIT_NORM_TOLERANCE, UNIT_NORM_TOLERANCE};
pub use maxsim::{exact_search, maxsim_score};
pub use metrics::{
    evaluate_run, metric_at_k, mrr_at_k, ndcg_at_k, recall_at_k, EvalOptions, EvaluationReport,
    Metric, MetricReport, MetricSpec, Qrels, RunEntry, RunFile,
};
pub use plaid::{
    approx_doc_score, build_plaid, plaid_search, PlaidConfig, PlaidIndex, PlaidSearchParams,
    StageTrace,
};
pub use pooling::{pool_corpus, pool_fixed};
pub use ranking::{RankedList, ScoredDoc};
pub use residual::{decode_residual, encode_residual, ResidualCode, StorageReport};
pub use scalar::{dot, Scalar};
pub use synthetic::{generate_synthetic, SyntheticData, SyntheticSpec};

pub type TokenMatrixF32 = TokenMatrix<f32>;
pub type TokenMatrixF64 = TokenMatrix<f64>;
pub type CorpusF32 = Corpus<f32>;
pub type CorpusF64 = Corpus<f64>;
pub type IvfIndexF32 = IvfIndex<f32>;
pub type IvfIndexF64 = IvfIndex<f64>;
pub type PlaidIndexF32 = PlaidIndex<f32>;
pub type PlaidIndexF64 = PlaidIndex<f64>;
pub type RankedListF32 = RankedList<f32>;
pub type RankedListF64 = RankedList<f64>;
