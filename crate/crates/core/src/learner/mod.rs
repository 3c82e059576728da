//! Rank-target assignment, negative sampling, pointwise and pairwise
//! training of a shared linear model, and full-tablestore prediction.

pub mod solver;

use std::collections::{HashMap, HashSet};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::index::sample as index_sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::binio;
use crate::corpus::{GoldExplanation, QaInstance, Tablestore};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seeding::{digest_str, substream_rng};
use crate::sparse::SparseVector;

pub use solver::{objective, solve, subgradient, Loss, SolveOptions, SolveOutcome};

/// Graded relevance targets for one QA instance: the n gold facts get
/// n+1 down to 2 in gold order, every other fact gets 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankTargets {
    gold: HashMap<String, u32>,
}

pub const IRRELEVANT_TARGET: u32 = 1;

impl RankTargets {
    pub fn target(&self, fact_id: &str) -> u32 {
        self.gold.get(fact_id).copied().unwrap_or(IRRELEVANT_TARGET)
    }

    pub fn gold_len(&self) -> usize {
        self.gold.len()
    }
}

pub fn assign_rank_targets(gold: &GoldExplanation, store: &Tablestore) -> Result<RankTargets> {
    let n = gold.len() as u32;
    let mut map = HashMap::with_capacity(gold.len());
    for (pos, (fact_id, _)) in gold.entries.iter().enumerate() {
        if !store.contains(fact_id) {
            return Err(Error::Corpus(format!("gold fact `{fact_id}` not in tablestore")));
        }
        map.insert(fact_id.clone(), n + 1 - pos as u32);
    }
    Ok(RankTargets { gold: map })
}

/// Exactly `n_neg` distinct non-gold fact ids, sampled without replacement
/// from the substream `negatives/{qa_id}`.
pub fn sample_negatives(
    qa: &QaInstance,
    store: &Tablestore,
    n_neg: usize,
    seed: u64,
) -> Result<Vec<String>> {
    let gold_ids: HashSet<&str> = qa
        .gold
        .as_ref()
        .map(|g| g.id_set())
        .unwrap_or_default();
    let pool: Vec<&str> = store
        .facts()
        .iter()
        .map(|f| f.fact_id.as_str())
        .filter(|id| !gold_ids.contains(id))
        .collect();
    if n_neg > pool.len() {
        return Err(Error::Corpus(format!(
            "qa `{}`: {n_neg} negatives requested but only {} non-gold facts exist",
            qa.qa_id,
            pool.len()
        )));
    }
    let mut rng = substream_rng(seed, &format!("negatives/{}", qa.qa_id));
    let mut picked: Vec<String> =
        index_sample(&mut rng, pool.len(), n_neg).into_iter().map(|i| pool[i].to_string()).collect();
    picked.sort();
    Ok(picked)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Pointwise,
    Pairwise,
}

impl Mode {
    pub fn tag(&self) -> &'static str {
        match self {
            Mode::Pointwise => "pointwise",
            Mode::Pairwise => "pairwise",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: Mode,
    /// Regularization/loss tradeoff, > 0.
    pub c: f64,
    /// Regression precision band (pointwise only).
    pub epsilon: f64,
    /// Sampled irrelevant facts per training instance.
    pub n_neg: usize,
    pub seed: u64,
    pub max_epochs: usize,
    /// Relative objective tolerance for convergence.
    pub tolerance: f64,
    /// Upper bound on difference pairs per query (pairwise only).
    pub pair_cap: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::Pointwise,
            c: 0.005,
            epsilon: 0.1,
            n_neg: 900,
            seed: 0,
            max_epochs: 200,
            tolerance: 1e-4,
            pair_cap: 50_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c.is_nan() || self.c <= 0.0 {
            return Err(Error::Solver(format!("C must be positive, got {}", self.c)));
        }
        if self.epsilon < 0.0 {
            return Err(Error::Solver(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if self.n_neg == 0 {
            return Err(Error::Solver("n_neg must be at least 1".into()));
        }
        Ok(())
    }

    /// Stable digest over every field, stored in the model header.
    pub fn digest(&self) -> u64 {
        digest_str(&format!(
            "mode={};c={};eps={};n_neg={};seed={};max_epochs={};tol={};pair_cap={}",
            self.mode.tag(),
            self.c,
            self.epsilon,
            self.n_neg,
            self.seed,
            self.max_epochs,
            self.tolerance,
            self.pair_cap
        ))
    }
}

/// Candidate set of one training instance: assembled vectors plus targets.
pub struct TrainInstance<S> {
    pub qa_id: String,
    pub candidates: Vec<(SparseVector<S>, u32)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<S> {
    pub weights: Vec<S>,
    pub bias: S,
    pub mode: Mode,
    pub config_digest: u64,
}

impl<S: Scalar> LinearModel<S> {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn score(&self, x: &SparseVector<S>) -> Result<S> {
        if let Some(max) = x.max_index() {
            if max as usize >= self.weights.len() {
                return Err(Error::Model(format!(
                    "feature index {max} out of range for model of width {}",
                    self.weights.len()
                )));
            }
        }
        Ok(x.dot_dense(&self.weights) + self.bias)
    }
}

const MODEL_MAGIC: &[u8; 4] = b"FRLM";
const MODEL_VERSION: u16 = 1;

impl<S: Scalar> LinearModel<S> {
    /// Binary model file: magic, version, mode, config digest, width, then
    /// little-endian f64 weights and bias.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(MODEL_MAGIC).map_err(|e| Error::io(path, e))?;
        binio::write_u16(&mut w, MODEL_VERSION, path)?;
        binio::write_u8(&mut w, if self.mode == Mode::Pointwise { 0 } else { 1 }, path)?;
        binio::write_u64(&mut w, self.config_digest, path)?;
        binio::write_u64(&mut w, self.weights.len() as u64, path)?;
        for &v in &self.weights {
            binio::write_f64(&mut w, v.to_f64_lossy(), path)?;
        }
        binio::write_f64(&mut w, self.bias.to_f64_lossy(), path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<LinearModel<S>> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = std::io::BufReader::new(file);
        binio::expect_magic(&mut r, MODEL_MAGIC, path)?;
        let version = binio::read_u16(&mut r, path)?;
        if version != MODEL_VERSION {
            return Err(Error::Format {
                path: path.to_path_buf(),
                msg: format!("unsupported model version {version}"),
            });
        }
        let mode = match binio::read_u8(&mut r, path)? {
            0 => Mode::Pointwise,
            1 => Mode::Pairwise,
            other => {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    msg: format!("unknown model mode byte {other}"),
                })
            }
        };
        let config_digest = binio::read_u64(&mut r, path)?;
        let dim = binio::read_u64(&mut r, path)? as usize;
        let mut weights = Vec::with_capacity(dim);
        for _ in 0..dim {
            weights.push(S::from_f64_lossy(binio::read_f64(&mut r, path)?));
        }
        let bias = S::from_f64_lossy(binio::read_f64(&mut r, path)?);
        if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
            return Err(Error::Model("model file holds non-finite weights".into()));
        }
        Ok(LinearModel { weights, bias, mode, config_digest })
    }
}

/// Pointwise training: epsilon-insensitive regression on the raw integer
/// rank targets over all candidates of all instances.
pub fn train_pointwise<S: Scalar>(
    instances: &[TrainInstance<S>],
    dim: usize,
    cfg: &TrainConfig,
) -> Result<LinearModel<S>> {
    cfg.validate()?;
    if cfg.mode != Mode::Pointwise {
        return Err(Error::Solver("train_pointwise needs mode = pointwise".into()));
    }
    let examples: Vec<(SparseVector<S>, S)> = instances
        .iter()
        .flat_map(|inst| {
            inst.candidates
                .iter()
                .map(|(x, target)| (x.clone(), S::from_u32(*target).unwrap()))
        })
        .collect();
    let opts = SolveOptions {
        c: S::from_f64_lossy(cfg.c),
        loss: Loss::EpsInsensitive { epsilon: S::from_f64_lossy(cfg.epsilon) },
        use_bias: true,
        max_epochs: cfg.max_epochs,
        tolerance: S::from_f64_lossy(cfg.tolerance),
        seed: cfg.seed,
        stream: "train/pointwise",
    };
    let out = solve(&examples, dim, &opts)?;
    log::info!(
        "pointwise training: {} examples, {} epochs, objective {:.6}",
        examples.len(),
        out.epochs_run,
        out.objective_history.last().copied().unwrap_or_else(S::zero)
    );
    Ok(LinearModel { weights: out.weights, bias: out.bias, mode: Mode::Pointwise, config_digest: cfg.digest() })
}

/// Within-query difference pairs: one pair per unordered candidate pair with
/// unequal targets, orientation randomized, label = sign of the target
/// difference in the chosen orientation; uniformly subsampled to `cap`.
pub fn make_pairs<S: Scalar>(
    instance: &TrainInstance<S>,
    cap: usize,
    seed: u64,
) -> Vec<(SparseVector<S>, i8)> {
    let mut rng = substream_rng(seed, &format!("pairs/{}", instance.qa_id));
    let c = &instance.candidates;
    let mut index_pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..c.len() {
        for j in (i + 1)..c.len() {
            if c[i].1 != c[j].1 {
                index_pairs.push((i, j));
            }
        }
    }
    if index_pairs.len() > cap {
        let keep: Vec<usize> = index_sample(&mut rng, index_pairs.len(), cap).into_vec();
        let mut kept: Vec<(usize, usize)> = keep.into_iter().map(|k| index_pairs[k]).collect();
        kept.sort_unstable();
        index_pairs = kept;
    }
    index_pairs
        .into_iter()
        .map(|(i, j)| {
            let (a, b) = if rng.gen_bool(0.5) { (i, j) } else { (j, i) };
            let d = c[a].0.sub(&c[b].0);
            let label: i8 = if c[a].1 > c[b].1 { 1 } else { -1 };
            (d, label)
        })
        .collect()
}

/// Pairwise training: hinge loss over difference vectors, no bias term
/// (differences cancel it).
pub fn train_pairwise<S: Scalar>(
    instances: &[TrainInstance<S>],
    dim: usize,
    cfg: &TrainConfig,
) -> Result<LinearModel<S>> {
    cfg.validate()?;
    if cfg.mode != Mode::Pairwise {
        return Err(Error::Solver("train_pairwise needs mode = pairwise".into()));
    }
    let mut examples: Vec<(SparseVector<S>, S)> = Vec::new();
    for inst in instances {
        for (d, label) in make_pairs(inst, cfg.pair_cap, cfg.seed) {
            examples.push((d, S::from_i8(label).unwrap()));
        }
    }
    let opts = SolveOptions {
        c: S::from_f64_lossy(cfg.c),
        loss: Loss::Hinge,
        use_bias: false,
        max_epochs: cfg.max_epochs,
        tolerance: S::from_f64_lossy(cfg.tolerance),
        seed: cfg.seed,
        stream: "train/pairwise",
    };
    let out = solve(&examples, dim, &opts)?;
    log::info!(
        "pairwise training: {} pairs, {} epochs, objective {:.6}",
        examples.len(),
        out.epochs_run,
        out.objective_history.last().copied().unwrap_or_else(S::zero)
    );
    Ok(LinearModel { weights: out.weights, bias: S::zero(), mode: Mode::Pairwise, config_digest: cfg.digest() })
}

/// Full-store ranking for one QA instance: descending score, ties by
/// ascending fact id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedExplanation<S> {
    pub qa_id: String,
    pub ranked: Vec<(String, S)>,
}

impl<S: Scalar> RankedExplanation<S> {
    pub fn fact_ids(&self) -> impl Iterator<Item = &str> {
        self.ranked.iter().map(|(id, _)| id.as_str())
    }
}

pub fn rank_tablestore<S: Scalar>(
    model: &LinearModel<S>,
    qa: &QaInstance,
    vectors: &[(String, SparseVector<S>)],
) -> Result<RankedExplanation<S>> {
    let mut scored: Vec<(String, S)> = Vec::with_capacity(vectors.len());
    for (fact_id, x) in vectors {
        scored.push((fact_id.clone(), model.score(x)?));
    }
    scored.sort_by(|(ida, sa), (idb, sb)| {
        sb.partial_cmp(sa).unwrap_or(std::cmp::Ordering::Equal).then_with(|| ida.cmp(idb))
    });
    Ok(RankedExplanation { qa_id: qa.qa_id.clone(), ranked: scored })
}

/// Grid-point selection rule used by tuning: highest score wins, ties prefer
/// smaller C, then smaller n_neg.
pub fn select_best(grid: &[(f64, usize, f64)]) -> Result<(f64, usize, f64)> {
    if grid.is_empty() {
        return Err(Error::Solver("empty tuning grid".into()));
    }
    let mut sorted: Vec<&(f64, usize, f64)> = grid.iter().collect();
    sorted.sort_by(|a, b| {
        a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1))
    });
    let mut best = sorted[0];
    for point in &sorted[1..] {
        if point.2 > best.2 {
            best = point;
        }
    }
    Ok(*best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Fact, Role};
    use crate::textproc::TextProcessor;

    fn store(n: usize) -> Tablestore {
        let p = TextProcessor::with_defaults();
        Tablestore::from_facts(
            (0..n)
                .map(|i| Fact {
                    fact_id: format!("f{i}"),
                    table_type: "KINDOF".into(),
                    text: format!("fact number {i}"),
                    processed: p.process(&format!("fact number {i}")),
                })
                .collect(),
        )
        .unwrap()
    }

    fn qa_with_gold(store: &Tablestore, gold_ids: &[&str]) -> QaInstance {
        let p = TextProcessor::with_defaults();
        let gold = GoldExplanation::new(
            gold_ids.iter().map(|id| (id.to_string(), Role::Central)).collect(),
        )
        .unwrap();
        for id in gold_ids {
            assert!(store.contains(id));
        }
        QaInstance {
            qa_id: "q1".into(),
            question: "q".into(),
            correct_answer: "a".into(),
            distractors: vec![],
            gold: Some(gold),
            question_proc: p.process("q"),
            answer_proc: p.process("a"),
        }
    }

    #[test]
    fn rank_targets_scheme() {
        let store = store(5);
        let qa = qa_with_gold(&store, &["f0", "f1", "f2"]);
        let targets = assign_rank_targets(qa.gold.as_ref().unwrap(), &store).unwrap();
        assert_eq!(targets.target("f0"), 4);
        assert_eq!(targets.target("f1"), 3);
        assert_eq!(targets.target("f2"), 2);
        assert_eq!(targets.target("f3"), 1);
        assert_eq!(targets.target("f4"), 1);

        let single = qa_with_gold(&store, &["f3"]);
        let targets = assign_rank_targets(single.gold.as_ref().unwrap(), &store).unwrap();
        assert_eq!(targets.target("f3"), 2);
        assert_eq!(targets.target("f0"), 1);
    }

    #[test]
    fn rank_targets_longest_explanation() {
        let store = store(30);
        let ids: Vec<String> = (0..21).map(|i| format!("f{i}")).collect();
        let id_refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let qa = qa_with_gold(&store, &id_refs);
        let targets = assign_rank_targets(qa.gold.as_ref().unwrap(), &store).unwrap();
        assert_eq!(targets.target("f0"), 22);
        assert_eq!(targets.target("f20"), 2);
        assert_eq!(targets.target("f25"), 1);
    }

    #[test]
    fn negative_sampling_contract() {
        let store = store(50);
        let qa = qa_with_gold(&store, &["f0", "f1"]);
        let neg = sample_negatives(&qa, &store, 30, 7).unwrap();
        assert_eq!(neg.len(), 30);
        assert_eq!(neg.iter().collect::<HashSet<_>>().len(), 30);
        assert!(!neg.contains(&"f0".to_string()) && !neg.contains(&"f1".to_string()));
        assert_eq!(sample_negatives(&qa, &store, 30, 7).unwrap(), neg);

        let all = sample_negatives(&qa, &store, 48, 7).unwrap();
        assert_eq!(all.len(), 48);
        assert!(sample_negatives(&qa, &store, 49, 7).is_err());
    }

    fn sv(pairs: &[(u32, f64)]) -> SparseVector<f64> {
        SparseVector::from_pairs(pairs.to_vec())
    }

    #[test]
    fn make_pairs_enumerates_unequal_targets() {
        let instance = TrainInstance {
            qa_id: "q1".into(),
            candidates: vec![
                (sv(&[(0, 1.0)]), 3), // A
                (sv(&[(1, 1.0)]), 2), // B
                (sv(&[(2, 1.0)]), 1), // c1
                (sv(&[(3, 1.0)]), 1), // c2
            ],
        };
        let pairs = make_pairs(&instance, 50_000, 3);
        assert_eq!(pairs.len(), 5);

        let equal = TrainInstance {
            qa_id: "q2".into(),
            candidates: vec![(sv(&[(0, 1.0)]), 1), (sv(&[(1, 1.0)]), 1)],
        };
        assert!(make_pairs(&equal, 50_000, 3).is_empty());
    }

    #[test]
    fn pair_labels_follow_orientation() {
        // targets 2 vs 1: whatever the sampled orientation, label *
        // (x_hi - x_lo) must equal d
        let instance = TrainInstance {
            qa_id: "q3".into(),
            candidates: vec![(sv(&[(0, 1.0)]), 2), (sv(&[(1, 1.0)]), 1)],
        };
        for seed in 0..20u64 {
            let pairs = make_pairs(&instance, 100, seed);
            assert_eq!(pairs.len(), 1);
            let (d, label) = &pairs[0];
            let oriented = d.scale(*label as f64);
            assert_eq!(oriented.get(0), 1.0);
            assert_eq!(oriented.get(1), -1.0);
        }
    }

    #[test]
    fn pair_cap_subsamples() {
        let candidates: Vec<(SparseVector<f64>, u32)> =
            (0..20).map(|i| (sv(&[(i as u32, 1.0)]), if i == 0 { 2 } else { 1 })).collect();
        let instance = TrainInstance { qa_id: "q4".into(), candidates };
        let pairs = make_pairs(&instance, 5, 11);
        assert_eq!(pairs.len(), 5);
    }

    #[test]
    fn model_io_roundtrip() {
        let model = LinearModel::<f64> {
            weights: vec![0.5, -1.25, 3.75],
            bias: 0.125,
            mode: Mode::Pairwise,
            config_digest: 0xdead_beef,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        model.save(&path).unwrap();
        let loaded = LinearModel::<f64>::load(&path).unwrap();
        assert_eq!(loaded, model);
    }

    #[test]
    fn rank_tablestore_orders_and_errors() {
        let store = store(3);
        let qa = qa_with_gold(&store, &["f0"]);
        let model = LinearModel::<f64> {
            weights: vec![0.0, 1.0],
            bias: 0.0,
            mode: Mode::Pointwise,
            config_digest: 0,
        };
        let vectors = vec![
            ("f0".to_string(), sv(&[(0, 1.0)])),
            ("f1".to_string(), sv(&[(1, 1.0)])),
            ("f2".to_string(), sv(&[])),
        ];
        let ranked = rank_tablestore(&model, &qa, &vectors).unwrap();
        assert_eq!(ranked.fact_ids().collect::<Vec<_>>(), vec!["f1", "f0", "f2"]);

        // all-zero model: ascending fact id
        let zero = LinearModel::<f64> { weights: vec![0.0, 0.0], bias: 0.0, mode: Mode::Pointwise, config_digest: 0 };
        let ranked = rank_tablestore(&zero, &qa, &vectors).unwrap();
        assert_eq!(ranked.fact_ids().collect::<Vec<_>>(), vec!["f0", "f1", "f2"]);

        // dimension mismatch
        let bad = vec![("f0".to_string(), sv(&[(7, 1.0)]))];
        assert!(rank_tablestore(&model, &qa, &bad).is_err());
    }

    #[test]
    fn scaling_model_preserves_order() {
        let store = store(4);
        let qa = qa_with_gold(&store, &["f0"]);
        let model = LinearModel::<f64> {
            weights: vec![0.3, -0.7, 1.1],
            bias: 0.2,
            mode: Mode::Pointwise,
            config_digest: 0,
        };
        let scaled = LinearModel::<f64> {
            weights: model.weights.iter().map(|w| w * 17.5).collect(),
            bias: model.bias * 17.5,
            mode: Mode::Pointwise,
            config_digest: 0,
        };
        let vectors: Vec<(String, SparseVector<f64>)> = (0..4)
            .map(|i| (format!("f{i}"), sv(&[(0, i as f64), (1, 1.0 / (1.0 + i as f64)), (2, (i % 2) as f64)])))
            .collect();
        let a = rank_tablestore(&model, &qa, &vectors).unwrap();
        let b = rank_tablestore(&scaled, &qa, &vectors).unwrap();
        assert_eq!(a.fact_ids().collect::<Vec<_>>(), b.fact_ids().collect::<Vec<_>>());
    }

    #[test]
    fn select_best_tie_breaks() {
        // single point
        assert_eq!(select_best(&[(1.0, 500, 0.4)]).unwrap(), (1.0, 500, 0.4));
        // tie -> smaller C then smaller n_neg
        let grid = vec![
            (10.0, 500, 0.5),
            (0.1, 900, 0.5),
            (0.1, 600, 0.5),
            (1.0, 500, 0.4),
        ];
        assert_eq!(select_best(&grid).unwrap(), (0.1, 600, 0.5));
        assert!(select_best(&[]).is_err());
    }
}
