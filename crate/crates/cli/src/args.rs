use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use latebench_core::{Dtype, MetricSpec};

#[derive(Parser, Debug)]
#[command(
    name = "latebench",
    version,
    about = "Late-interaction retrieval experiments: generate, index, search, evaluate, diagnose",
    after_help = "LATEBENCH_THREADS caps the worker pool. RUST_LOG controls log verbosity."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a planted-relevance corpus, queries and qrels into a directory.
    Generate(GenerateArgs),
    /// Build an IVF or PLAID index file from a corpus bundle.
    Build(BuildArgs),
    /// Retrieve the top-k documents for every query and write a TREC run.
    Search(SearchArgs),
    /// Score a run against qrels.
    Evaluate(EvaluateArgs),
    /// Coverage, parameter-grid, truncation and agreement diagnostics.
    #[command(subcommand)]
    Diagnose(DiagnoseCommand),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Exact,
    Ivf,
    Plaid,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Ivf => "ivf",
            Backend::Plaid => "plaid",
        }
    }
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub docs: Option<usize>,
    #[arg(long)]
    pub min_tokens: Option<usize>,
    #[arg(long)]
    pub max_tokens: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub concepts: Option<usize>,
    #[arg(long)]
    pub min_concepts: Option<usize>,
    #[arg(long)]
    pub max_concepts: Option<usize>,
    #[arg(long)]
    pub queries: Option<usize>,
    #[arg(long)]
    pub signal_tokens: Option<usize>,
    #[arg(long)]
    pub filler_fraction: Option<f64>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub doc_noise: Option<f64>,
    #[arg(long)]
    pub query_noise: Option<f64>,
    #[arg(long)]
    pub filler_pool: Option<usize>,
    #[arg(long)]
    pub filler_noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Storage type of the written bundles.
    #[arg(long, default_value = "float32", value_parser = parse_dtype)]
    pub dtype: Dtype,
    /// Also write corpus.pooled.bundle with every document pooled to C rows.
    #[arg(long)]
    pub pool_c: Option<usize>,
}

/// Index construction knobs; unset values take the backend defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct BuildParams {
    #[arg(long)]
    pub nlist: Option<usize>,
    #[arg(long)]
    pub num_centroids: Option<usize>,
    #[arg(long)]
    pub residual_bits: Option<u8>,
    #[arg(long)]
    pub kmeans_iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Search knobs; unset values take the index's stored defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct SearchParams {
    #[arg(long)]
    pub nprobe: Option<usize>,
    #[arg(long)]
    pub per_token_candidates: Option<usize>,
    #[arg(long)]
    pub ncells: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub ndocs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum)]
    pub backend: Backend,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub build: BuildParams,
    #[command(flatten)]
    pub search: SearchParams,
}

/// Where documents come from: a built index, or a bundle searched directly
/// (exact) or indexed in memory first (ivf, plaid).
#[derive(Args, Debug, Clone)]
pub struct SourceArgs {
    #[arg(long, conflicts_with = "corpus")]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub backend: Option<Backend>,
    #[command(flatten)]
    pub build: BuildParams,
    #[command(flatten)]
    pub search: SearchParams,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub k: usize,
    /// Run tag written in the last column.
    #[arg(long, default_value = "latebench")]
    pub tag: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    /// NAME@K, repeatable; defaults to MRR@10, Recall@50, Recall@1000, nDCG@10.
    #[arg(long = "metric", value_parser = parse_metric)]
    pub metrics: Vec<MetricSpec>,
    /// Fail when a run query has no judgments instead of skipping it.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum DiagnoseCommand {
    /// Unique centroids occupied per document.
    Coverage(CoverageArgs),
    /// PLAID metrics over an ncells x threshold grid at fixed ndocs.
    Grid(GridArgs),
    /// Metrics with queries truncated to each length.
    Ablation(AblationArgs),
    /// Top-k overlap and metric deltas between two runs.
    Agreement(AgreementArgs),
}

#[derive(Args, Debug)]
pub struct CoverageArgs {
    /// PLAID index whose centroids define coverage.
    #[arg(long)]
    pub index: PathBuf,
    /// Measure this bundle under the index's centroids instead of the indexed docs.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value_t = latebench_core::DEFAULT_COVERAGE_SAMPLE)]
    pub sample: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub ncells: Vec<usize>,
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_hyphen_values = true
    )]
    pub threshold: Vec<f64>,
    #[arg(long)]
    pub ndocs: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AblationArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub lengths: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AgreementArgs {
    #[arg(long)]
    pub run_a: PathBuf,
    #[arg(long)]
    pub run_b: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_dtype(s: &str) -> Result<Dtype, String> {
    s.parse()
        .map_err(|_| format!("unknown dtype {s:?} (float32 or float16)"))
}

fn parse_metric(s: &str) -> Result<MetricSpec, String> {
    s.parse().map_err(|e: latebench_core::Error| e.to_string())
}
