//! Run configuration: one JSON file, scalar fields overridable by flags
//! (precedence: flags > file > defaults).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use factrank::corpus::TableOverrides;
use factrank::features::{FeatureConfig, Group};
use factrank::learner::{Mode, TrainConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Paths {
    pub tablestore_dir: PathBuf,
    pub train_split: PathBuf,
    pub dev_split: PathBuf,
    pub test_split: PathBuf,
    #[serde(default)]
    pub concept_resource: Option<PathBuf>,
    #[serde(default)]
    pub triple_resource: Option<PathBuf>,
    #[serde(default)]
    pub embedding_resource: Option<PathBuf>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureSection {
    /// Enabled feature groups by tag.
    pub groups: Vec<String>,
    pub concept_top_k: usize,
    pub rank_ceiling: u32,
    pub split_embedding: bool,
}

impl Default for FeatureSection {
    fn default() -> Self {
        FeatureSection {
            groups: Group::ALL.iter().map(|g| g.tag().to_string()).collect(),
            concept_top_k: 50,
            rank_ceiling: 1000,
            split_embedding: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSection {
    pub mode: Mode,
    pub c: f64,
    pub epsilon: f64,
    pub n_neg: usize,
    pub max_epochs: usize,
    pub tolerance: f64,
    pub pair_cap: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            mode: Mode::Pointwise,
            c: 0.005,
            epsilon: 0.1,
            n_neg: 900,
            max_epochs: 200,
            tolerance: 1e-4,
            pair_cap: 50_000,
        }
    }
}

impl TrainSection {
    pub fn to_train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            mode: self.mode,
            c: self.c,
            epsilon: self.epsilon,
            n_neg: self.n_neg,
            seed,
            max_epochs: self.max_epochs,
            tolerance: self.tolerance,
            pair_cap: self.pair_cap,
        }
    }
}

fn default_c_grid() -> Vec<f64> {
    vec![0.005, 0.05, 0.1, 1.0, 10.0, 50.0, 100.0]
}

fn default_n_neg_grid() -> Vec<usize> {
    vec![500, 600, 700, 800, 900, 1000]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuningSection {
    #[serde(default = "default_c_grid")]
    pub c_grid: Vec<f64>,
    #[serde(default = "default_n_neg_grid")]
    pub n_neg_grid: Vec<usize>,
}

impl Default for TuningSection {
    fn default() -> Self {
        TuningSection { c_grid: default_c_grid(), n_neg_grid: default_n_neg_grid() }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TextprocSection {
    pub stopwords_path: Option<PathBuf>,
    pub lemmas_path: Option<PathBuf>,
    pub verbs_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    #[serde(default)]
    pub features: FeatureSection,
    /// Primary learner used by train/predict.
    #[serde(default)]
    pub train: TrainSection,
    /// Secondary learner for comparisons and ablation; defaults to the
    /// pairwise reference configuration.
    #[serde(default = "default_pairwise")]
    pub pairwise: TrainSection,
    #[serde(default)]
    pub tuning: TuningSection,
    /// Query expansion depth for the iterated ranker; absent means the full
    /// store.
    #[serde(default)]
    pub iterated_depth: Option<usize>,
    #[serde(default)]
    pub textproc: TextprocSection,
    #[serde(default)]
    pub table_overrides: TableOverrides,
}

fn default_pairwise() -> TrainSection {
    TrainSection { mode: Mode::Pairwise, c: 0.8, n_neg: 1000, ..TrainSection::default() }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config file {}", path.display()))?;
        Ok(cfg)
    }

    /// Referenced input paths must exist; the output directory is created.
    pub fn validate(&self) -> Result<()> {
        let must_exist = |p: &Path, what: &str| -> Result<()> {
            if !p.exists() {
                bail!("{} does not exist: {}", what, p.display());
            }
            Ok(())
        };
        must_exist(&self.paths.tablestore_dir, "tablestore directory")?;
        must_exist(&self.paths.train_split, "train split file")?;
        must_exist(&self.paths.dev_split, "dev split file")?;
        must_exist(&self.paths.test_split, "test split file")?;
        for (p, what) in [
            (&self.paths.concept_resource, "concept resource"),
            (&self.paths.triple_resource, "triple resource"),
            (&self.paths.embedding_resource, "embedding resource"),
        ] {
            if let Some(p) = p {
                must_exist(p, what)?;
            }
        }
        for (p, what) in [
            (&self.textproc.stopwords_path, "stopword list"),
            (&self.textproc.lemmas_path, "lemma lexicon"),
            (&self.textproc.verbs_path, "verb lexicon"),
        ] {
            if let Some(p) = p {
                must_exist(p, what)?;
            }
        }
        std::fs::create_dir_all(&self.paths.out_dir)
            .with_context(|| format!("cannot create output dir {}", self.paths.out_dir.display()))?;
        self.feature_config()?;
        Ok(())
    }

    pub fn feature_config(&self) -> Result<FeatureConfig> {
        let mut groups: BTreeSet<Group> = BTreeSet::new();
        for tag in &self.features.groups {
            groups.insert(Group::parse(tag).map_err(|e| anyhow::anyhow!(e.to_string()))?);
        }
        Ok(FeatureConfig {
            groups,
            concept_top_k: self.features.concept_top_k,
            rank_ceiling: self.features.rank_ceiling,
            split_embedding: self.features.split_embedding,
        })
    }

    pub fn out(&self, file: &str) -> PathBuf {
        self.paths.out_dir.join(file)
    }
}
