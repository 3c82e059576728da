//! Shared fixture corpus for pipeline tests: a small tablestore, three
//! splits, and all three resource files, written into a temp directory.

use std::path::{Path, PathBuf};

use factrank_cli::config::RunConfig;

pub const EMBED_DIM: usize = 768;

pub struct Fixture {
    /// Owns the fixture directory for the test's lifetime.
    #[allow(dead_code)]
    pub root: tempfile::TempDir,
    pub config_path: PathBuf,
}

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

/// Deterministic nonzero embedding for a (qa, fact) pair.
fn embedding_row(qa_idx: usize, fact_idx: usize) -> String {
    let mut values = Vec::with_capacity(EMBED_DIM);
    for dim in 0..EMBED_DIM {
        let raw = (qa_idx * 31 + fact_idx * 17 + dim * 7) % 23;
        values.push(format!("{:.4}", 0.01 + raw as f32 / 23.0));
    }
    values.join(" ")
}

pub fn facts() -> Vec<(&'static str, &'static str, &'static str)> {
    vec![
        // (id, table file stem, text)
        ("K-01", "kindof", "granite is a kind of igneous rock"),
        ("K-02", "kindof", "igneous is a kind of rock"),
        ("K-03", "kindof", "a rabbit is a kind of herbivore"),
        ("K-04", "kindof", "a rabbit is a kind of animal"),
        ("K-05", "kindof", "water is a kind of liquid"),
        ("K-06", "kindof", "the sun is a kind of star"),
        ("K-07", "kindof", "a desert is a kind of dry environment"),
        ("K-08", "kindof", "metal is a kind of material"),
        ("S-01", "synonymy", "a type is synonymous with a kind"),
        ("S-02", "synonymy", "come down is similar to falling"),
        ("S-03", "synonymy", "heat energy means thermal energy"),
        ("S-04", "synonymy", "approximately means about"),
        ("C-01", "cause", "magma cooling causes igneous rock formation"),
        ("C-02", "cause", "gravity causes objects to fall toward the planet"),
        ("C-03", "cause", "herbivores only eat plants"),
        ("C-04", "cause", "a desert environment has low rainfall"),
        ("P-01", "properties", "rock is a hard material"),
        ("P-02", "properties", "water vapor is water in the gas state"),
    ]
}

pub fn qa_rows() -> Vec<(&'static str, &'static str, &'static str, &'static str, &'static str)> {
    vec![
        // (qa_id, question, answer, choices, gold)
        (
            "tr1",
            "Granite is a hard material and forms from cooling magma. Granite is a type of",
            "igneous rock",
            "sedimentary rock;mineral;metal",
            "K-01|CENTRAL K-02|GROUNDING S-01|LEXGLUE",
        ),
        (
            "tr2",
            "Which animal eats only plants?",
            "rabbit",
            "wolf;hawk;frog",
            "C-03|CENTRAL K-03|CENTRAL K-04|GROUNDING",
        ),
        (
            "tr3",
            "What do all deserts have in common?",
            "low rainfall",
            "high heat;sand;cactus",
            "C-04|CENTRAL K-07|GROUNDING",
        ),
        (
            "tr4",
            "What causes a bouncing ball to come down?",
            "gravity",
            "wind;magnetism;light",
            "C-02|CENTRAL S-02|LEXGLUE",
        ),
        (
            "tr5",
            "Cooling magma forms which kind of rock?",
            "igneous rock",
            "sedimentary rock;marble;sand",
            "C-01|CENTRAL K-02|GROUNDING",
        ),
        (
            "tr6",
            "A herbivore such as a rabbit eats which food?",
            "plants",
            "meat;fish;insects",
            "C-03|CENTRAL K-03|GROUNDING",
        ),
        (
            "tr7",
            "A desert environment receives very little of what?",
            "rainfall",
            "sunlight;sand;wind",
            "C-04|CENTRAL K-07|GROUNDING",
        ),
        (
            "tr8",
            "Objects fall toward the planet because of which force?",
            "gravity",
            "friction;magnetism;pressure",
            "C-02|CENTRAL",
        ),
        (
            "dv1",
            "Igneous rock forms when which material cools?",
            "magma",
            "water;sand;metal",
            "C-01|CENTRAL K-01|GROUNDING",
        ),
        (
            "te1",
            "A rabbit is which kind of eater?",
            "herbivore",
            "carnivore;omnivore;decomposer",
            "K-03|CENTRAL C-03|GROUNDING",
        ),
    ]
}

/// Concepts, triples and embeddings aligned with the corpus above.
fn write_resources(dir: &Path) {
    let concepts = "\
granite\t1\trock\n\
granite\t2\tmineral\n\
rock\t1\tmaterial\n\
rabbit\t1\tanimal\n\
rabbit\t2\therbivore\n\
herbivore\t1\tanimal\n\
magma\t1\trock\n\
gravity\t1\tforce\n\
desert\t1\tenvironment\n\
water\t1\tliquid\n\
rabbit\tREL\tIsA_animal\n\
granite\tREL\tIsA_rock\n\
gravity\tREL\tIsA_force\n";
    write(&dir.join("concepts.tsv"), concepts);

    let mut triples = String::new();
    for (qa_id, _, answer, _, _) in qa_rows() {
        triples.push_str(&format!("q:{qa_id}\tquestion topic\tbe\tsubject matter\n"));
        let head = answer.split_whitespace().next().unwrap();
        triples.push_str(&format!("ca:{qa_id}\t{head}\tbe\tanswer\n"));
    }
    for (fact_id, _, text) in facts() {
        let mut words = text.split_whitespace().filter(|w| w.len() > 3);
        let subj = words.next().unwrap_or("thing");
        let obj = words.next_back().unwrap_or("thing");
        triples.push_str(&format!("f:{fact_id}\t{subj}\tbe\t{obj}\n"));
    }
    write(&dir.join("triples.tsv"), &triples);

    let mut embeds = String::new();
    for (qa_idx, (qa_id, ..)) in qa_rows().iter().enumerate() {
        for (fact_idx, (fact_id, ..)) in facts().iter().enumerate() {
            embeds.push_str(&format!("{qa_id}\t{fact_id}\t{}\n", embedding_row(qa_idx, fact_idx)));
        }
    }
    write(&dir.join("embeddings.tsv"), &embeds);
}

/// Full fixture with every feature group enabled and a small n_neg.
pub fn build() -> Fixture {
    build_with(|_| {})
}

pub fn build_with(tweak: impl FnOnce(&mut serde_json::Value)) -> Fixture {
    let root = tempfile::tempdir().unwrap();
    let dir = root.path();

    let tables_dir = dir.join("tables");
    std::fs::create_dir_all(&tables_dir).unwrap();
    let mut by_file: std::collections::BTreeMap<&str, Vec<(&str, &str)>> =
        std::collections::BTreeMap::new();
    for (id, file, text) in facts() {
        by_file.entry(file).or_default().push((id, text));
    }
    for (file, rows) in by_file {
        let mut content = String::from("[SKIP] UID\tFACT\t[SKIP] COMMENTS\n");
        for (id, text) in rows {
            content.push_str(&format!("{id}\t{text}\tnote\n"));
        }
        write(&tables_dir.join(format!("{file}.tsv")), &content);
    }

    let rows = qa_rows();
    let line = |r: &(&str, &str, &str, &str, &str)| {
        format!("{}\t{}\t{}\t{}\t{}\n", r.0, r.1, r.2, r.3, r.4)
    };
    let train: String = rows[..8].iter().map(line).collect();
    let dev: String = rows[8..9].iter().map(line).collect();
    let test: String = rows[9..].iter().map(line).collect();
    write(&dir.join("train.tsv"), &train);
    write(&dir.join("dev.tsv"), &dev);
    write(&dir.join("test.tsv"), &test);

    write_resources(dir);

    let out_dir = dir.join("out");
    let mut config = serde_json::json!({
        "seed": 42,
        "paths": {
            "tablestore_dir": tables_dir,
            "train_split": dir.join("train.tsv"),
            "dev_split": dir.join("dev.tsv"),
            "test_split": dir.join("test.tsv"),
            "concept_resource": dir.join("concepts.tsv"),
            "triple_resource": dir.join("triples.tsv"),
            "embedding_resource": dir.join("embeddings.tsv"),
            "out_dir": out_dir,
        },
        "features": {
            "groups": ["lex", "concept", "openie", "multihop", "tfidf_rank", "embed"],
            "concept_top_k": 50,
            "rank_ceiling": 1000,
            "split_embedding": false,
        },
        "train": {
            "mode": "pointwise",
            "c": 1.0,
            "epsilon": 0.1,
            "n_neg": 8,
            "max_epochs": 150,
            "tolerance": 1e-5,
            "pair_cap": 50000,
        },
        "pairwise": {
            "mode": "pairwise",
            "c": 1.0,
            "epsilon": 0.1,
            "n_neg": 8,
            "max_epochs": 150,
            "tolerance": 1e-5,
            "pair_cap": 50000,
        },
        "tuning": {
            "c_grid": [0.1, 1.0],
            "n_neg_grid": [6, 8],
        },
    });
    tweak(&mut config);
    let config_path = dir.join("factrank.json");
    write(&config_path, &serde_json::to_string_pretty(&config).unwrap());

    Fixture { root, config_path }
}

pub fn load_config(fixture: &Fixture) -> RunConfig {
    RunConfig::load(&fixture.config_path).unwrap()
}
