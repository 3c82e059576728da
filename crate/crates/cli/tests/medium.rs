//! Medium-scale synthetic corpus: 20 topics with parallel fact structure and
//! unseen dev/test topics, so only the transferable feature groups (rank,
//! positional, table type) can carry signal across splits. Both learners
//! must rank the gold facts of unseen topics near the top.

use std::path::{Path, PathBuf};

use factrank_cli::config::RunConfig;
use factrank_cli::pipeline::{self, RankerKind, SplitName};

const TOPICS: [(&str, &str, &str); 20] = [
    ("copper", "metal", "conducts electricity very well"),
    ("iron", "metal", "rusts in damp air"),
    ("granite", "rock", "forms from cooling magma"),
    ("basalt", "rock", "forms from cooling lava"),
    ("oak", "tree", "drops acorns in autumn"),
    ("fern", "plant", "unrolls green fronds"),
    ("salmon", "fish", "swims upstream to spawn"),
    ("eagle", "bird", "soars on rising warm air"),
    ("beetle", "insect", "crawls across fallen leaves"),
    ("quartz", "mineral", "forms six sided crystals"),
    ("helium", "gas", "lifts party balloons"),
    ("oxygen", "gas", "feeds burning flames"),
    ("maple", "tree", "produces sweet spring sap"),
    ("cactus", "plant", "stores water in thick stems"),
    ("shark", "fish", "senses tiny electric signals"),
    ("sparrow", "bird", "builds small grassy nests"),
    ("marble", "rock", "forms from heated limestone"),
    ("tin", "metal", "melts at a low temperature"),
    ("cedar", "tree", "grows fragrant red wood"),
    ("trout", "fish", "hides under shaded river banks"),
];

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

fn build_corpus() -> (tempfile::TempDir, PathBuf) {
    let root = tempfile::tempdir().unwrap();
    let dir = root.path();
    let tables = dir.join("tables");
    std::fs::create_dir_all(&tables).unwrap();

    let mut kindof = String::from("[SKIP] UID\tFACT\n");
    let mut props = String::from("[SKIP] UID\tFACT\n");
    for (i, (subject, category, property)) in TOPICS.iter().enumerate() {
        kindof.push_str(&format!("K-{i:02}\t{subject} is a kind of {category}\n"));
        props.push_str(&format!("P-{i:02}\t{subject} {property}\n"));
    }
    let mut filler = String::from("[SKIP] UID\tFACT\n");
    for j in 0..30 {
        filler.push_str(&format!(
            "F-{j:02}\tgadget{j} connects to widget{} in machine{}\n",
            j + 1,
            j % 7
        ));
    }
    write(&tables.join("kindof.tsv"), &kindof);
    write(&tables.join("properties.tsv"), &props);
    write(&tables.join("filler.tsv"), &filler);

    let qa_line = |i: usize| {
        let (subject, category, property) = TOPICS[i];
        format!(
            "q{i:02}\tWhich {category} {property}?\t{subject}\twrongpick{};wrongpick{}\tP-{i:02}|CENTRAL K-{i:02}|GROUNDING\n",
            i % 5,
            (i + 1) % 5,
        )
    };
    let train: String = (0..14).map(qa_line).collect();
    let dev: String = (14..17).map(qa_line).collect();
    let test: String = (17..20).map(qa_line).collect();
    write(&dir.join("train.tsv"), &train);
    write(&dir.join("dev.tsv"), &dev);
    write(&dir.join("test.tsv"), &test);

    let out_dir = dir.join("out");
    let config = serde_json::json!({
        "seed": 99,
        "paths": {
            "tablestore_dir": tables,
            "train_split": dir.join("train.tsv"),
            "dev_split": dir.join("dev.tsv"),
            "test_split": dir.join("test.tsv"),
            "out_dir": out_dir,
        },
        // only groups without external resources
        "features": { "groups": ["lex", "multihop", "tfidf_rank"] },
        "train": {
            "mode": "pointwise",
            "c": 0.5,
            "epsilon": 0.1,
            "n_neg": 30,
            "max_epochs": 200,
            "tolerance": 1e-6,
        },
        "pairwise": {
            "mode": "pairwise",
            "c": 0.5,
            "n_neg": 30,
            "max_epochs": 200,
            "tolerance": 1e-6,
        },
    });
    let config_path = dir.join("factrank.json");
    write(&config_path, &serde_json::to_string_pretty(&config).unwrap());
    (root, config_path)
}

#[test]
fn both_learners_generalize_to_unseen_topics() {
    let (_root, config_path) = build_corpus();
    let cfg = RunConfig::load(&config_path).unwrap();
    pipeline::cmd_ingest(&cfg).unwrap();

    pipeline::cmd_train(&cfg).unwrap();
    pipeline::cmd_predict(&cfg, SplitName::Dev, RankerKind::Model).unwrap();
    let pointwise = pipeline::cmd_evaluate(&cfg, SplitName::Dev, None, None).unwrap().map;

    let mut pw_cfg = cfg.clone();
    pw_cfg.train = pw_cfg.pairwise.clone();
    pw_cfg.paths.out_dir = cfg.paths.out_dir.join("pairwise");
    std::fs::create_dir_all(&pw_cfg.paths.out_dir).unwrap();
    pipeline::cmd_ingest(&pw_cfg).unwrap();
    pipeline::cmd_train(&pw_cfg).unwrap();
    pipeline::cmd_predict(&pw_cfg, SplitName::Dev, RankerKind::Model).unwrap();
    let pairwise = pipeline::cmd_evaluate(&pw_cfg, SplitName::Dev, None, None).unwrap().map;

    println!("medium corpus dev mAP: pointwise {pointwise:.4}, pairwise {pairwise:.4}");
    assert!(pointwise >= 0.5, "pointwise dev mAP {pointwise}");
    assert!(pairwise >= 0.5, "pairwise dev mAP {pairwise}");

    // test split stays strong too for the primary learner
    pipeline::cmd_predict(&cfg, SplitName::Test, RankerKind::Model).unwrap();
    let test_map = pipeline::cmd_evaluate(&cfg, SplitName::Test, None, None).unwrap().map;
    assert!(test_map >= 0.5, "test mAP {test_map}");
}
