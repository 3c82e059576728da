//! End-to-end pipeline tests over the fixture corpus, plus CLI process-level
//! checks for error paths and artifact dependencies.

mod common;

use std::path::Path;
use std::process::Command;

use factrank_cli::pipeline::{self, RankerKind, SplitName};

#[test]
fn full_pipeline_produces_all_artifacts() {
    let fixture = common::build();
    let cfg = common::load_config(&fixture);

    let stats = pipeline::cmd_ingest(&cfg).unwrap();
    assert_eq!(stats.qa_pairs, 9); // 8 train + 1 dev
    assert_eq!(stats.length_histogram.values().sum::<usize>(), 9);

    pipeline::cmd_train(&cfg).unwrap();
    let dev_pred = pipeline::cmd_predict(&cfg, SplitName::Dev, RankerKind::Model).unwrap();
    let test_pred = pipeline::cmd_predict(&cfg, SplitName::Test, RankerKind::Model).unwrap();
    let report = pipeline::cmd_evaluate(&cfg, SplitName::Dev, None, None).unwrap();
    // the trained model must clearly beat a random ordering (expected AP
    // for 2 gold facts in an 18-fact store is ~0.15)
    assert!(report.map > 0.3 && report.map <= 1.0, "dev mAP {}", report.map);
    pipeline::cmd_evaluate(&cfg, SplitName::Test, Some(test_pred.clone()), Some(dev_pred.clone()))
        .unwrap_err(); // dev dump has no rows for the test split's qa
    pipeline::cmd_evaluate(&cfg, SplitName::Test, Some(test_pred), None).unwrap();

    let best = pipeline::cmd_tune(&cfg).unwrap();
    assert!(cfg.tuning.c_grid.contains(&best.0));
    assert!(cfg.tuning.n_neg_grid.contains(&best.1));

    pipeline::cmd_ablate(&cfg).unwrap();
    pipeline::cmd_report(&cfg, SplitName::Test).unwrap();

    for artifact in [
        "bundle.bin",
        "bundle.meta.json",
        "corpus_stats.json",
        "tfidf_ranks.tsv",
        "space.tsv",
        "model.bin",
        "predictions_dev.tsv",
        "predictions_test.tsv",
        "eval_dev.json",
        "pr_curves_dev.csv",
        "map_by_length_dev.csv",
        "tuning.csv",
        "best_config.json",
        "ablation.csv",
        "report_length_histogram.csv",
        "report_table_usage.csv",
        "report_table_rank_proportions.csv",
        "report_pr_curves_test.csv",
        "report_map_by_length_test.csv",
    ] {
        assert!(cfg.out(artifact).exists(), "missing artifact {artifact}");
    }

    // every model prediction is a full-store permutation
    let preds = pipeline::load_predictions(&cfg.out("predictions_dev.tsv")).unwrap();
    for ranked in preds.values() {
        assert_eq!(ranked.len(), common::facts().len());
    }

    // ablation table has a row per (learner, feature set)
    let ablation = std::fs::read_to_string(cfg.out("ablation.csv")).unwrap();
    assert_eq!(ablation.lines().count(), 1 + 2 * 6); // header + 2 learners x (lex + 5 addons)
}

#[test]
fn tfidf_reference_rankers_write_dumps() {
    let fixture = common::build();
    let cfg = common::load_config(&fixture);
    pipeline::cmd_ingest(&cfg).unwrap();

    for ranker in [RankerKind::Baseline, RankerKind::Optimized, RankerKind::Iterated] {
        let path = pipeline::cmd_predict(&cfg, SplitName::Dev, ranker).unwrap();
        let preds = pipeline::load_predictions(&path).unwrap();
        assert_eq!(preds.len(), 1);
        assert_eq!(preds["dv1"].len(), common::facts().len());
    }

    // the optimized ranker puts the gold central fact of dv1 on top:
    // question/answer lemmas overlap C-01 (magma cooling ... igneous rock)
    let path = cfg.out("predictions_dev_optimized.tsv");
    let preds = pipeline::load_predictions(&path).unwrap();
    assert_eq!(preds["dv1"][0], "C-01");
}

#[test]
fn ingest_is_byte_identical_across_runs() {
    let fixture = common::build();
    let cfg = common::load_config(&fixture);
    pipeline::cmd_ingest(&cfg).unwrap();
    let first = std::fs::read(cfg.out("bundle.bin")).unwrap();
    let first_stats = std::fs::read(cfg.out("corpus_stats.json")).unwrap();
    pipeline::cmd_ingest(&cfg).unwrap();
    assert_eq!(std::fs::read(cfg.out("bundle.bin")).unwrap(), first);
    assert_eq!(std::fs::read(cfg.out("corpus_stats.json")).unwrap(), first_stats);
}

fn run_cli(args: &[&str], config: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_factrank"))
        .arg("--config")
        .arg(config)
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn cli_binary_ingest_and_error_paths() {
    let fixture = common::build();

    let out = run_cli(&["ingest"], &fixture.config_path);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("qa pairs"), "{stdout}");
    assert!(stdout.contains("mean facts per qa"), "{stdout}");

    // evaluate before predict: nonzero exit naming the missing dump
    let out = run_cli(&["evaluate", "--split", "dev"], &fixture.config_path);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("predictions_dev.tsv"), "{stderr}");

    // missing split file: nonzero exit with the path in the message
    let broken = common::build_with(|cfg| {
        cfg["paths"]["dev_split"] = serde_json::json!("/nonexistent/dev.tsv");
    });
    let out = run_cli(&["ingest"], &broken.config_path);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("/nonexistent/dev.tsv"), "{stderr}");
}

#[test]
fn tune_survives_degenerate_c() {
    let fixture = common::build_with(|cfg| {
        cfg["tuning"] = serde_json::json!({ "c_grid": [1e9], "n_neg_grid": [6] });
        cfg["train"]["max_epochs"] = serde_json::json!(20);
    });
    let cfg = common::load_config(&fixture);
    pipeline::cmd_ingest(&cfg).unwrap();
    let (c, n_neg, map) = pipeline::cmd_tune(&cfg).unwrap();
    assert_eq!((c, n_neg), (1e9, 6));
    assert!(map.is_finite() && (0.0..=1.0).contains(&map));
}

#[test]
fn train_without_ingest_names_the_bundle() {
    let fixture = common::build();
    let cfg = common::load_config(&fixture);
    let err = pipeline::cmd_train(&cfg).unwrap_err();
    assert!(err.to_string().contains("bundle.bin"), "{err}");
}
