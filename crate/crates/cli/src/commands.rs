use std::path::Path;
use std::sync::Arc;

use latebench_core::io::{
    parse_qrels, parse_run, read_bundle, read_index, read_plaid_index, write_bundle_with_comments,
    write_ivf_index, write_plaid_index, write_qrels, write_run, AnyIndex,
};
use latebench_core::{
    build_ivf, build_plaid, centroid_coverage, centroid_coverage_of, compare_runs, evaluate_run,
    generate_synthetic, grid_search, pool_corpus, run_queries, truncation_ablation, CorpusF32,
    EvalOptions, ExactBackend, IvfBackend, IvfConfig, IvfIndexF32, IvfSearchParams, MetricSpec,
    PlaidBackend, PlaidConfig, PlaidIndexF32, PlaidSearchParams, Qrels, Retriever, RunFile,
    SyntheticSpec,
};

use crate::args::*;
use crate::output::{
    read_bytes, read_text, write_atomic, CliError, CliResult, Context, Provenance,
};

fn load_bundle(path: &Path) -> CliResult<CorpusF32> {
    read_bundle(&read_bytes(path)?).at(path)
}

fn load_qrels(path: &Path) -> CliResult<Qrels> {
    parse_qrels(&read_text(path)?).at(path)
}

fn load_run(path: &Path) -> CliResult<RunFile> {
    parse_run(&read_text(path)?).at(path)
}

/// Fails when any flag in `flags` was given; they have no meaning for `what`.
fn reject(flags: &[(&str, bool)], what: &str) -> CliResult<()> {
    match flags.iter().find(|(_, given)| *given) {
        Some((name, _)) => Err(CliError::usage(format!(
            "--{name} does not apply to {what}"
        ))),
        None => Ok(()),
    }
}

fn ivf_only(s: &SearchParams, b: &BuildParams) -> [(&'static str, bool); 3] {
    [
        ("nlist", b.nlist.is_some()),
        ("nprobe", s.nprobe.is_some()),
        ("per-token-candidates", s.per_token_candidates.is_some()),
    ]
}

fn plaid_only(s: &SearchParams, b: &BuildParams) -> [(&'static str, bool); 5] {
    [
        ("num-centroids", b.num_centroids.is_some()),
        ("residual-bits", b.residual_bits.is_some()),
        ("ncells", s.ncells.is_some()),
        ("threshold", s.threshold.is_some()),
        ("ndocs", s.ndocs.is_some()),
    ]
}

fn build_flags(b: &BuildParams) -> [(&'static str, bool); 5] {
    [
        ("nlist", b.nlist.is_some()),
        ("num-centroids", b.num_centroids.is_some()),
        ("residual-bits", b.residual_bits.is_some()),
        ("kmeans-iters", b.kmeans_iters.is_some()),
        ("seed", b.seed.is_some()),
    ]
}

fn check_flags(backend: Backend, s: &SearchParams, b: &BuildParams) -> CliResult<()> {
    let what = format!("backend {}", backend.name());
    match backend {
        Backend::Exact => {
            reject(&build_flags(b), &what)?;
            reject(&ivf_only(s, b), &what)?;
            reject(&plaid_only(s, b), &what)
        }
        Backend::Ivf => reject(&plaid_only(s, b), &what),
        Backend::Plaid => reject(&ivf_only(s, b), &what),
    }
}

fn ivf_config(b: &BuildParams, s: &SearchParams) -> IvfConfig {
    let d = IvfConfig::default();
    IvfConfig {
        nlist: b.nlist.unwrap_or(d.nlist),
        nprobe: s.nprobe.unwrap_or(d.nprobe),
        per_token_candidates: s.per_token_candidates.unwrap_or(d.per_token_candidates),
        kmeans_iters: b.kmeans_iters.unwrap_or(d.kmeans_iters),
        seed: b.seed.unwrap_or(d.seed),
    }
}

fn plaid_config(b: &BuildParams, s: &SearchParams) -> PlaidConfig {
    let d = PlaidConfig::default();
    PlaidConfig {
        num_centroids: b.num_centroids.unwrap_or(d.num_centroids),
        ncells: s.ncells.unwrap_or(d.ncells),
        centroid_score_threshold: s.threshold.unwrap_or(d.centroid_score_threshold),
        ndocs: s.ndocs.unwrap_or(d.ndocs),
        residual_bits: b.residual_bits.unwrap_or(d.residual_bits),
        kmeans_iters: b.kmeans_iters.unwrap_or(d.kmeans_iters),
        seed: b.seed.unwrap_or(d.seed),
    }
}

fn record_ivf_build(p: &mut Provenance, c: &IvfConfig) {
    p.flag("nlist", c.nlist)
        .flag("kmeans-iters", c.kmeans_iters)
        .flag("seed", c.seed);
}

fn record_plaid_build(p: &mut Provenance, c: &PlaidConfig) {
    p.flag("num-centroids", c.num_centroids)
        .flag("residual-bits", c.residual_bits)
        .flag("kmeans-iters", c.kmeans_iters)
        .flag("seed", c.seed);
}

fn record_ivf_search(p: &mut Provenance, s: &IvfSearchParams) {
    p.opt_flag("nprobe", s.nprobe)
        .opt_flag("per-token-candidates", s.per_token_candidates);
}

fn record_plaid_search(p: &mut Provenance, s: &PlaidSearchParams) {
    p.opt_flag("ncells", s.ncells)
        .opt_flag("threshold", s.centroid_score_threshold)
        .opt_flag("ndocs", s.ndocs);
}

/// A loaded backend with its search parameters fully resolved.
pub enum Source {
    Exact(CorpusF32),
    Ivf(IvfIndexF32, IvfSearchParams),
    Plaid(PlaidIndexF32, PlaidSearchParams),
}

impl Source {
    pub fn dim(&self) -> usize {
        match self {
            Source::Exact(c) => c.dim(),
            Source::Ivf(index, _) => index.corpus().dim(),
            Source::Plaid(index, _) => index.dim(),
        }
    }

    /// Loads a query bundle and checks it against the document dimension.
    fn queries(&self, path: &Path) -> CliResult<CorpusF32> {
        let q = load_bundle(path)?;
        if q.dim() != self.dim() {
            return Err(latebench_core::Error::DimensionMismatch {
                expected: self.dim(),
                found: q.dim(),
            })
            .at(path);
        }
        Ok(q)
    }

    pub fn retriever(&self) -> Box<dyn Retriever<f32> + '_> {
        match self {
            Source::Exact(c) => Box::new(ExactBackend(c)),
            Source::Ivf(index, params) => Box::new(IvfBackend {
                index,
                params: *params,
            }),
            Source::Plaid(index, params) => Box::new(PlaidBackend {
                index,
                params: *params,
            }),
        }
    }
}

fn resolve_ivf(index: &IvfIndexF32, s: &SearchParams) -> IvfSearchParams {
    IvfSearchParams {
        nprobe: Some(s.nprobe.unwrap_or(index.config().nprobe)),
        per_token_candidates: Some(
            s.per_token_candidates
                .unwrap_or(index.config().per_token_candidates),
        ),
    }
}

fn resolve_plaid(index: &PlaidIndexF32, s: &SearchParams) -> PlaidSearchParams {
    let c = index.config();
    PlaidSearchParams {
        ncells: Some(s.ncells.unwrap_or(c.ncells)),
        centroid_score_threshold: Some(s.threshold.unwrap_or(c.centroid_score_threshold)),
        ndocs: Some(s.ndocs.unwrap_or(c.ndocs)),
    }
}

/// Flag checks happen before any file is opened.
fn validate_source(src: &SourceArgs) -> CliResult<()> {
    match (&src.index, &src.corpus) {
        (None, None) => Err(CliError::usage("one of --index or --corpus is required")),
        (Some(_), _) => reject(&build_flags(&src.build), "a prebuilt --index"),
        (None, Some(_)) => check_flags(
            src.backend.unwrap_or(Backend::Exact),
            &src.search,
            &src.build,
        ),
    }
}

fn load_source(src: &SourceArgs, p: &mut Provenance) -> CliResult<Source> {
    if let Some(path) = &src.index {
        let index = read_index::<f32>(&read_bytes(path)?).at(path)?;
        p.path("index", path);
        return match index {
            AnyIndex::Ivf(idx) => {
                if src.backend.is_some_and(|b| b != Backend::Ivf) {
                    return Err(CliError::usage(format!(
                        "{} holds an ivf index",
                        path.display()
                    )));
                }
                reject(&plaid_only(&src.search, &src.build), "an ivf index")?;
                let params = resolve_ivf(&idx, &src.search);
                p.flag("backend", "ivf");
                record_ivf_search(p, &params);
                Ok(Source::Ivf(idx, params))
            }
            AnyIndex::Plaid(idx) => {
                if src.backend.is_some_and(|b| b != Backend::Plaid) {
                    return Err(CliError::usage(format!(
                        "{} holds a plaid index",
                        path.display()
                    )));
                }
                reject(&ivf_only(&src.search, &src.build), "a plaid index")?;
                let params = resolve_plaid(&idx, &src.search);
                p.flag("backend", "plaid");
                record_plaid_search(p, &params);
                Ok(Source::Plaid(idx, params))
            }
        };
    }
    let path = src.corpus.as_ref().expect("validated");
    let corpus = load_bundle(path)?;
    p.path("corpus", path);
    let backend = src.backend.unwrap_or(Backend::Exact);
    p.flag("backend", backend.name());
    match backend {
        Backend::Exact => Ok(Source::Exact(corpus)),
        Backend::Ivf => {
            let cfg = ivf_config(&src.build, &src.search);
            record_ivf_build(p, &cfg);
            let idx = build_ivf(Arc::new(corpus), cfg)?;
            let params = resolve_ivf(&idx, &src.search);
            record_ivf_search(p, &params);
            Ok(Source::Ivf(idx, params))
        }
        Backend::Plaid => {
            let cfg = plaid_config(&src.build, &src.search);
            record_plaid_build(p, &cfg);
            let idx = build_plaid(Arc::new(corpus), cfg)?;
            let params = resolve_plaid(&idx, &src.search);
            record_plaid_search(p, &params);
            Ok(Source::Plaid(idx, params))
        }
    }
}

/// Writes `body` under the provenance header and echoes the configuration.
fn emit(p: &Provenance, out: &Path, body: &str) -> CliResult<()> {
    p.echo();
    write_atomic(out, p.with_header(body).as_bytes())
}

pub fn generate(a: &GenerateArgs) -> CliResult<()> {
    let d = SyntheticSpec::default();
    let spec = SyntheticSpec {
        doc_count: a.docs.unwrap_or(d.doc_count),
        tokens_per_doc: (
            a.min_tokens.unwrap_or(d.tokens_per_doc.0),
            a.max_tokens.unwrap_or(d.tokens_per_doc.1),
        ),
        dim: a.dim.unwrap_or(d.dim),
        num_concepts: a.concepts.unwrap_or(d.num_concepts),
        concepts_per_doc: (
            a.min_concepts.unwrap_or(d.concepts_per_doc.0),
            a.max_concepts.unwrap_or(d.concepts_per_doc.1),
        ),
        queries: a.queries.unwrap_or(d.queries),
        signal_tokens: a.signal_tokens.unwrap_or(d.signal_tokens),
        filler_fraction: a.filler_fraction.unwrap_or(d.filler_fraction),
        margin: a.margin.unwrap_or(d.margin),
        doc_noise: a.doc_noise.unwrap_or(d.doc_noise),
        query_noise: a.query_noise.unwrap_or(d.query_noise),
        filler_pool: a.filler_pool.unwrap_or(d.filler_pool),
        filler_noise: a.filler_noise.unwrap_or(d.filler_noise),
        max_retries: d.max_retries,
        seed: a.seed.unwrap_or(d.seed),
    };
    spec.validate()?;
    if a.pool_c == Some(0) {
        return Err(CliError::usage("--pool-c must be at least 1"));
    }
    let mut p = Provenance::new(&["generate"]);
    p.flag("docs", spec.doc_count)
        .flag("min-tokens", spec.tokens_per_doc.0)
        .flag("max-tokens", spec.tokens_per_doc.1)
        .flag("dim", spec.dim)
        .flag("concepts", spec.num_concepts)
        .flag("min-concepts", spec.concepts_per_doc.0)
        .flag("max-concepts", spec.concepts_per_doc.1)
        .flag("queries", spec.queries)
        .flag("signal-tokens", spec.signal_tokens)
        .flag("filler-fraction", spec.filler_fraction)
        .flag("margin", spec.margin)
        .flag("doc-noise", spec.doc_noise)
        .flag("query-noise", spec.query_noise)
        .flag("filler-pool", spec.filler_pool)
        .flag("filler-noise", spec.filler_noise)
        .flag("seed", spec.seed)
        .flag("dtype", a.dtype)
        .opt_flag("pool-c", a.pool_c);
    p.echo();

    let data = generate_synthetic::<f32>(&spec)?;
    std::fs::create_dir_all(&a.out).at(&a.out)?;
    let comments = p.comments();
    let corpus = data.corpus.with_dtype(a.dtype);
    if let Some(c) = a.pool_c {
        let pooled = pool_corpus(&corpus, c)?.with_dtype(a.dtype);
        write_atomic(
            &a.out.join("corpus.pooled.bundle"),
            &write_bundle_with_comments(&pooled, &comments),
        )?;
    }
    write_atomic(
        &a.out.join("corpus.bundle"),
        &write_bundle_with_comments(&corpus, &comments),
    )?;
    let queries = data.queries.with_dtype(a.dtype);
    write_atomic(
        &a.out.join("queries.bundle"),
        &write_bundle_with_comments(&queries, &comments),
    )?;
    write_atomic(
        &a.out.join("qrels.txt"),
        p.with_header(&write_qrels(&data.qrels)).as_bytes(),
    )?;
    eprintln!(
        "latebench: wrote {} documents, {} queries to {} ({} margin redraws)",
        spec.doc_count,
        spec.queries,
        a.out.display(),
        data.redraws
    );
    Ok(())
}

pub fn build(a: &BuildArgs) -> CliResult<()> {
    check_flags(a.backend, &a.search, &a.build)?;
    let mut p = Provenance::new(&["build"]);
    p.path("corpus", &a.corpus)
        .flag("backend", a.backend.name());
    let bytes = match a.backend {
        Backend::Exact => {
            return Err(CliError::usage(
                "the exact backend needs no index; search the bundle with --corpus",
            ))
        }
        Backend::Ivf => {
            let cfg = ivf_config(&a.build, &a.search);
            cfg.validate()?;
            record_ivf_build(&mut p, &cfg);
            p.flag("nprobe", cfg.nprobe)
                .flag("per-token-candidates", cfg.per_token_candidates);
            p.echo();
            let idx = build_ivf(Arc::new(load_bundle(&a.corpus)?), cfg)?;
            write_ivf_index(&idx, &p.comments())
        }
        Backend::Plaid => {
            let cfg = plaid_config(&a.build, &a.search);
            cfg.validate()?;
            record_plaid_build(&mut p, &cfg);
            p.flag("ncells", cfg.ncells)
                .flag("threshold", cfg.centroid_score_threshold)
                .flag("ndocs", cfg.ndocs);
            p.echo();
            let idx = build_plaid(Arc::new(load_bundle(&a.corpus)?), cfg)?;
            if cfg.residual_bits > 0 {
                eprint!("{}", idx.storage_report().to_table());
            }
            write_plaid_index(&idx, &p.comments())
        }
    };
    write_atomic(&a.out, &bytes)
}

pub fn search(a: &SearchArgs) -> CliResult<()> {
    validate_source(&a.source)?;
    if a.k == 0 {
        return Err(CliError::usage("--k must be at least 1"));
    }
    let mut p = Provenance::new(&["search"]);
    let source = load_source(&a.source, &mut p)?;
    p.path("queries", &a.queries)
        .flag("k", a.k)
        .flag("tag", &a.tag);
    let queries = source.queries(&a.queries)?;
    let lists = run_queries(source.retriever().as_ref(), &queries, a.k)?;
    let text = write_run(&RunFile::from_ranked(&lists), &a.tag)?;
    emit(&p, &a.out, &text)
}

pub fn evaluate(a: &EvaluateArgs) -> CliResult<()> {
    let specs = if a.metrics.is_empty() {
        MetricSpec::standard_suite()
    } else {
        a.metrics.clone()
    };
    let mut p = Provenance::new(&["evaluate"]);
    p.path("run", &a.run).path("qrels", &a.qrels);
    for s in &specs {
        p.flag("metric", s);
    }
    p.switch("strict", a.strict);
    let run = load_run(&a.run)?;
    let qrels = load_qrels(&a.qrels)?;
    let report = evaluate_run(
        &run,
        &qrels,
        &specs,
        EvalOptions {
            strict_missing: a.strict,
        },
    )?;
    emit(&p, &a.out, &report.to_tsv())?;
    print!("{}", report.to_table());
    Ok(())
}

pub fn diagnose(cmd: &DiagnoseCommand) -> CliResult<()> {
    match cmd {
        DiagnoseCommand::Coverage(a) => coverage(a),
        DiagnoseCommand::Grid(a) => grid(a),
        DiagnoseCommand::Ablation(a) => ablation(a),
        DiagnoseCommand::Agreement(a) => agreement(a),
    }
}

fn load_plaid(path: &Path) -> CliResult<PlaidIndexF32> {
    read_plaid_index(&read_bytes(path)?).at(path)
}

fn coverage(a: &CoverageArgs) -> CliResult<()> {
    let mut p = Provenance::new(&["diagnose", "coverage"]);
    p.path("index", &a.index);
    if let Some(c) = &a.corpus {
        p.path("corpus", c);
    }
    p.flag("sample", a.sample).flag("seed", a.seed);
    let index = load_plaid(&a.index)?;
    let report = match &a.corpus {
        Some(path) => {
            centroid_coverage_of(&index, &load_bundle(path)?, a.sample, a.seed).at(path)?
        }
        None => centroid_coverage(&index, a.sample, a.seed)?,
    };
    emit(&p, &a.out, &report.to_tsv())?;
    print!("{}", latebench_core::metrics::align(&report.summary_rows()));
    Ok(())
}

fn grid(a: &GridArgs) -> CliResult<()> {
    let mut p = Provenance::new(&["diagnose", "grid"]);
    p.path("index", &a.index)
        .path("queries", &a.queries)
        .path("qrels", &a.qrels);
    let index = load_plaid(&a.index)?;
    let ndocs = a.ndocs.unwrap_or(index.config().ndocs);
    let join = |v: Vec<String>| v.join(",");
    p.flag(
        "ncells",
        join(a.ncells.iter().map(|n| n.to_string()).collect()),
    )
    .flag(
        "threshold",
        join(a.threshold.iter().map(|t| t.to_string()).collect()),
    )
    .flag("ndocs", ndocs)
    .flag("k", a.k);
    let queries = load_bundle(&a.queries)?;
    let qrels = load_qrels(&a.qrels)?;
    let result = grid_search(
        &index,
        &queries,
        &qrels,
        &a.ncells,
        &a.threshold,
        ndocs,
        a.k,
    )?;
    emit(&p, &a.out, &result.to_tsv())?;
    print!("{}", result.to_table());
    Ok(())
}

fn ablation(a: &AblationArgs) -> CliResult<()> {
    validate_source(&a.source)?;
    let mut p = Provenance::new(&["diagnose", "ablation"]);
    let source = load_source(&a.source, &mut p)?;
    let lengths = a
        .lengths
        .iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(",");
    p.path("queries", &a.queries)
        .path("qrels", &a.qrels)
        .flag("lengths", lengths)
        .flag("k", a.k);
    let queries = source.queries(&a.queries)?;
    let qrels = load_qrels(&a.qrels)?;
    let table = truncation_ablation(
        &queries,
        source.retriever().as_ref(),
        &a.lengths,
        a.k,
        &qrels,
    )?;
    emit(&p, &a.out, &table.to_tsv())?;
    print!("{}", table.to_table());
    Ok(())
}

fn agreement(a: &AgreementArgs) -> CliResult<()> {
    let mut p = Provenance::new(&["diagnose", "agreement"]);
    p.path("run-a", &a.run_a)
        .path("run-b", &a.run_b)
        .path("qrels", &a.qrels)
        .flag("k", a.k);
    let ra = load_run(&a.run_a)?;
    let rb = load_run(&a.run_b)?;
    let qrels = load_qrels(&a.qrels)?;
    let report = compare_runs(&ra, &rb, &qrels, a.k)?;
    emit(&p, &a.out, &report.to_tsv())
}
