mod common;

use std::sync::Arc;

use common::*;
use latebench_core::{
    build_plaid, centroid_coverage, centroid_coverage_of, compare_runs, evaluate_run, grid_search,
    pool_corpus, run_queries, truncation_ablation, Corpus, EvalOptions, ExactBackend, Metric,
    MetricSpec, PlaidBackend, PlaidConfig, PlaidSearchParams, RunFile, SyntheticSpec,
};

fn mrr10(run: &RunFile, data: &latebench_core::SyntheticData<f32>) -> f64 {
    let spec = MetricSpec::new(Metric::Mrr, 10);
    evaluate_run(run, &data.qrels, &[spec], EvalOptions::default())
        .unwrap()
        .aggregate(spec)
        .unwrap()
}

fn exact_run(data: &latebench_core::SyntheticData<f32>, k: usize) -> RunFile {
    RunFile::from_ranked(&run_queries(&ExactBackend(&data.corpus), &data.queries, k).unwrap())
}

#[test]
fn tiny_planted_corpus_has_perfect_mrr() {
    let spec = SyntheticSpec {
        doc_count: 10,
        queries: 5,
        dim: 32,
        num_concepts: 8,
        ..SyntheticSpec::default()
    };
    let data = planted(spec);
    assert_eq!(mrr10(&exact_run(&data, 10), &data), 1.0);
}

#[test]
fn filler_never_raises_exact_mrr() {
    for seed in 0..5 {
        let clean = planted(SyntheticSpec {
            filler_fraction: 0.0,
            dim: 128,
            ..small_spec(seed)
        });
        let noisy = planted(SyntheticSpec {
            filler_fraction: 0.7,
            dim: 128,
            ..small_spec(seed)
        });
        assert_eq!(
            noisy.queries.docs()[0].rows(),
            clean.queries.docs()[0].rows() + 19
        );
        assert!(mrr10(&exact_run(&noisy, 10), &noisy) <= mrr10(&exact_run(&clean, 10), &clean));
    }
}

#[test]
fn truncation_boundaries_and_plateau() {
    let spec = SyntheticSpec {
        filler_fraction: 0.7,
        signal_tokens: 8,
        dim: 128,
        ..small_spec(31)
    };
    let data = planted(spec);
    let backend = ExactBackend(&data.corpus);
    let full_rows = data.queries.docs().iter().map(|q| q.rows()).max().unwrap();
    let lengths = [1, 4, 8, 12, 20, full_rows, full_rows + 50];
    let table = truncation_ablation(&data.queries, &backend, &lengths, 1000, &data.qrels).unwrap();
    assert_eq!(table.rows.len(), lengths.len());

    let full = evaluate_run(
        &exact_run(&data, 1000),
        &data.qrels,
        &MetricSpec::diagnostic_suite(),
        EvalOptions::default(),
    )
    .unwrap();
    let last = table.rows.last().unwrap();
    assert_eq!(
        last.mrr_at_10,
        full.aggregate(MetricSpec::new(Metric::Mrr, 10)).unwrap()
    );
    assert_eq!(
        last.ndcg_at_10,
        full.aggregate(MetricSpec::new(Metric::Ndcg, 10)).unwrap()
    );

    // L = 1 evaluates the single-row queries
    let single: Vec<_> = data.queries.docs().iter().map(|q| q.prefix(1)).collect();
    assert!(single.iter().all(|q| q.rows() == 1));
    let single = Corpus::new(
        data.queries.doc_ids().to_vec(),
        single,
        data.queries.manifest().dtype,
        data.queries.manifest().pooling,
    )
    .unwrap();
    let run = RunFile::from_ranked(&run_queries(&backend, &single, 1000).unwrap());
    assert_eq!(table.rows[0].mrr_at_10, mrr10(&run, &data));

    for row in table.rows.iter().filter(|r| r.length >= 8) {
        assert!((row.mrr_at_10 - last.mrr_at_10).abs() < 1e-6);
        assert!((row.recall_at_1000 - last.recall_at_1000).abs() < 1e-6);
        assert!((row.ndcg_at_10 - last.ndcg_at_10).abs() < 1e-6);
    }
}

#[test]
fn pooling_lowers_centroid_coverage() {
    let spec = SyntheticSpec {
        doc_count: 200,
        tokens_per_doc: (64, 128),
        dim: 64,
        num_concepts: 32,
        queries: 1,
        seed: 8,
        ..SyntheticSpec::default()
    };
    let data = planted(spec);
    let pooled = pool_corpus(&data.corpus, 32).unwrap();
    let corpus = Arc::new(data.corpus);
    let idx = build_plaid(
        corpus.clone(),
        PlaidConfig {
            num_centroids: 128,
            ..PlaidConfig::default()
        },
    )
    .unwrap();
    let source = centroid_coverage(&idx, 200, 0).unwrap();
    let pooled_cov = centroid_coverage_of(&idx, &pooled, 200, 0).unwrap();
    eprintln!(
        "unpooled {:.3} pooled {:.3}",
        source.mean_unique, pooled_cov.mean_unique
    );
    assert!(pooled_cov.mean_unique < source.mean_unique);
    assert_eq!(pooled_cov.mean_rows, 32.0);
    // independent count straight from the brute-force assignment
    let mut total = 0usize;
    for doc in pooled.docs() {
        let mut seen: Vec<usize> = doc
            .iter_rows()
            .map(|r| naive_argmax(r, idx.centroids()).0)
            .collect();
        seen.sort_unstable();
        seen.dedup();
        total += seen.len();
    }
    assert!((total as f64 / pooled.len() as f64 - pooled_cov.mean_unique).abs() < 0.05);
}

#[test]
fn single_cell_grid_equals_direct_search() {
    let data = planted(small_spec(19));
    let corpus = Arc::new(data.corpus.clone());
    let idx = build_plaid(
        corpus,
        PlaidConfig {
            num_centroids: 32,
            ..PlaidConfig::default()
        },
    )
    .unwrap();
    let grid = grid_search(&idx, &data.queries, &data.qrels, &[4], &[0.4], 300, 100).unwrap();
    assert_eq!(grid.rows.len(), 1);
    let p = PlaidSearchParams {
        ncells: Some(4),
        centroid_score_threshold: Some(0.4),
        ndocs: Some(300),
    };
    let direct = RunFile::from_ranked(
        &run_queries(
            &PlaidBackend {
                index: &idx,
                params: p,
            },
            &data.queries,
            100,
        )
        .unwrap(),
    );
    assert_eq!(grid.rows[0].run, direct);
    assert_eq!(grid.rows[0].mrr_at_10, mrr10(&direct, &data));
}

#[test]
fn agreement_deltas_compose_from_individual_reports() {
    let data = planted(small_spec(23));
    let corpus = Arc::new(data.corpus.clone());
    let idx = build_plaid(
        corpus,
        PlaidConfig {
            num_centroids: 32,
            ..PlaidConfig::default()
        },
    )
    .unwrap();
    let oracle = exact_run(&data, 100);
    let p = PlaidSearchParams {
        centroid_score_threshold: Some(0.5),
        ndocs: Some(300),
        ..Default::default()
    };
    let plaid = RunFile::from_ranked(
        &run_queries(
            &PlaidBackend {
                index: &idx,
                params: p,
            },
            &data.queries,
            100,
        )
        .unwrap(),
    );
    let rep = compare_runs(&oracle, &plaid, &data.qrels, 10).unwrap();
    for d in &rep.deltas {
        let a = evaluate_run(&oracle, &data.qrels, &[d.spec], EvalOptions::default())
            .unwrap()
            .aggregate(d.spec)
            .unwrap();
        let b = evaluate_run(&plaid, &data.qrels, &[d.spec], EvalOptions::default())
            .unwrap()
            .aggregate(d.spec)
            .unwrap();
        assert_eq!(d.delta, a - b);
    }
    assert!((0.0..=1.0).contains(&rep.mean_overlap));
}

#[test]
fn saturated_grid_rows_are_identical() {
    let spec = SyntheticSpec {
        doc_count: 400,
        tokens_per_doc: (8, 24),
        dim: 128,
        num_concepts: 64,
        concepts_per_doc: (1, 2),
        doc_noise: 0.2,
        query_noise: 0.1,
        queries: 20,
        seed: 5,
        ..SyntheticSpec::default()
    };
    let data = planted(spec);
    let corpus = Arc::new(data.corpus.clone());
    let idx = build_plaid(
        corpus,
        PlaidConfig {
            num_centroids: 64,
            ..PlaidConfig::default()
        },
    )
    .unwrap();
    for d in 0..idx.doc_count() {
        assert!(idx.unique_centroids(d).unwrap().len() <= 4);
    }
    let ncells = [4, 8, 16, 32, 64];
    let grid = grid_search(
        &idx,
        &data.queries,
        &data.qrels,
        &ncells,
        &[0.3, 0.4, 0.5],
        400,
        100,
    )
    .unwrap();
    assert_eq!(grid.rows.len(), 15);
    for chunk in grid.rows.chunks(ncells.len()) {
        for row in chunk {
            assert_eq!(row.threshold, chunk[0].threshold);
            assert_eq!(row.run, chunk[0].run);
            assert_eq!(row.mrr_at_10, chunk[0].mrr_at_10);
            assert_eq!(row.mean_candidates, chunk[0].mean_candidates);
        }
    }
}
