//! Pipeline stages behind the CLI subcommands. Every stage reads and writes
//! artifacts under the configured output directory and is deterministic
//! given (inputs, config, seed); the only timestamp lives in the
//! `bundle.meta.json` sidecar.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};

use factrank::bundle::{self, CorpusBundle};
use factrank::corpus::{self, CorpusStats, Fact, QaInstance};
use factrank::eval::{paired_t_test, EvalInstance, EvalReport};
use factrank::features::resources::{ConceptResource, EmbeddingResource, TripleResource};
use factrank::features::{FeatureSpace, Group, ProviderSet, TripleRef};
use factrank::learner::{
    assign_rank_targets, rank_tablestore, sample_negatives, select_best, train_pairwise,
    train_pointwise, Mode, TrainConfig, TrainInstance,
};
use factrank::textproc::{Lemmatizer, TextProcessor, WordList};
use factrank::tfidf::{
    rank_baseline, rank_iterated, rank_optimized, write_ranking_dump, RankLookup, Ranking,
    TextView, TfidfModel,
};
use factrank::{Model, Real, Tfidf};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl SplitName {
    pub fn tag(&self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
        }
    }

    fn of<'a>(&self, b: &'a CorpusBundle) -> &'a [QaInstance] {
        match self {
            SplitName::Train => &b.splits.train,
            SplitName::Dev => &b.splits.dev,
            SplitName::Test => &b.splits.test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RankerKind {
    /// Trained linear model over the full feature space.
    Model,
    /// Cosine ranking on surface tokens of question + all answer choices.
    Baseline,
    /// Cosine ranking on content lemmas of question + correct answer.
    Optimized,
    /// Optimized ranking with greedy query expansion.
    Iterated,
}

impl RankerKind {
    pub fn tag(&self) -> &'static str {
        match self {
            RankerKind::Model => "model",
            RankerKind::Baseline => "baseline",
            RankerKind::Optimized => "optimized",
            RankerKind::Iterated => "iterated",
        }
    }
}

pub fn build_processor(cfg: &RunConfig) -> Result<TextProcessor> {
    let defaults = TextProcessor::with_defaults();
    let lemmatizer = match &cfg.textproc.lemmas_path {
        Some(p) => Lemmatizer::from_file(p)?,
        None => Lemmatizer::from_default(),
    };
    let stopwords = match &cfg.textproc.stopwords_path {
        Some(p) => WordList::from_file(p)?,
        None => defaults.stopwords().clone(),
    };
    let verbs = match &cfg.textproc.verbs_path {
        Some(p) => WordList::from_file(p)?,
        None => defaults.verbs().clone(),
    };
    Ok(TextProcessor::new(lemmatizer, stopwords, verbs))
}

fn require(path: &Path, what: &str) -> Result<()> {
    if !path.exists() {
        bail!("{what} not found: {} (run the producing stage first)", path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------- ingest

pub fn cmd_ingest(cfg: &RunConfig) -> Result<CorpusStats> {
    cfg.validate().context("config validation failed")?;
    let proc = build_processor(cfg)?;
    let store = corpus::load_tablestore(&cfg.paths.tablestore_dir, &proc, &cfg.table_overrides)?;
    let train = corpus::load_split(&cfg.paths.train_split, &store, &proc)?;
    let dev = corpus::load_split(&cfg.paths.dev_split, &store, &proc)?;
    let test = corpus::load_split(&cfg.paths.test_split, &store, &proc)?;
    let splits = corpus::SplitSet { train, dev, test };
    splits.validate()?;

    let gold_instances: Vec<&QaInstance> = splits
        .train
        .iter()
        .chain(&splits.dev)
        .filter(|qa| qa.gold.is_some())
        .collect();
    let stats = corpus::corpus_stats(&gold_instances, &store)?;

    let b = CorpusBundle { store, splits };
    bundle::save(&b, &cfg.out("bundle.bin"))?;
    std::fs::write(
        cfg.out("corpus_stats.json"),
        serde_json::to_string_pretty(&stats)?,
    )?;
    let created_ms = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default().as_millis();
    std::fs::write(
        cfg.out("bundle.meta.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "created_unix_ms": created_ms as u64,
            "tool_version": env!("CARGO_PKG_VERSION"),
        }))?,
    )?;
    Ok(stats)
}

pub fn load_bundle(cfg: &RunConfig) -> Result<CorpusBundle> {
    let path = cfg.out("bundle.bin");
    require(&path, "corpus bundle")?;
    Ok(bundle::load(&path)?)
}

// ------------------------------------------------------------- resources

/// Owned resources for the enabled feature groups.
pub struct Resources {
    pub proc: TextProcessor,
    pub concepts: Option<ConceptResource>,
    pub triples: Option<TripleResource>,
    pub embeddings: Option<EmbeddingResource>,
    pub ranks: Option<RankLookup>,
}

impl Resources {
    pub fn load(cfg: &RunConfig, bundle: &CorpusBundle) -> Result<Resources> {
        let feature_cfg = cfg.feature_config()?;
        let proc = build_processor(cfg)?;
        let concepts = if feature_cfg.groups.contains(&Group::Concept) {
            let p = cfg
                .paths
                .concept_resource
                .as_ref()
                .ok_or_else(|| anyhow!("concept group enabled but paths.concept_resource unset"))?;
            Some(ConceptResource::load(p)?)
        } else {
            None
        };
        let triples = if feature_cfg.groups.contains(&Group::OpenIe) {
            let p = cfg
                .paths
                .triple_resource
                .as_ref()
                .ok_or_else(|| anyhow!("openie group enabled but paths.triple_resource unset"))?;
            Some(TripleResource::load(p)?)
        } else {
            None
        };
        let embeddings = if feature_cfg.groups.contains(&Group::Embed) {
            let p = cfg.paths.embedding_resource.as_ref().ok_or_else(|| {
                anyhow!("embed group enabled but paths.embedding_resource unset")
            })?;
            Some(EmbeddingResource::load(p)?)
        } else {
            None
        };
        let ranks = if feature_cfg.groups.contains(&Group::TfidfRank) {
            Some(ensure_tfidf_ranks(cfg, bundle)?)
        } else {
            None
        };
        Ok(Resources { proc, concepts, triples, embeddings, ranks })
    }

    pub fn providers<'a>(&'a self, cfg: &RunConfig) -> Result<ProviderSet<'a>> {
        let mut p = ProviderSet::new(cfg.feature_config()?, self.proc.verbs());
        if let Some(r) = &self.concepts {
            p = p.with_concepts(r);
        }
        if let Some(r) = &self.triples {
            p = p.with_triples(r);
        }
        if let Some(r) = &self.embeddings {
            p = p.with_embeddings(r);
        }
        if let Some(r) = &self.ranks {
            p = p.with_ranks(r);
        }
        p.validate().map_err(|e| anyhow!(e.to_string()))?;
        Ok(p)
    }
}

/// Load or compute the iterated-ranking dump that backs the rank feature
/// group, covering every instance of every split.
pub fn ensure_tfidf_ranks(cfg: &RunConfig, bundle: &CorpusBundle) -> Result<RankLookup> {
    let path = cfg.out("tfidf_ranks.tsv");
    if path.exists() {
        return Ok(RankLookup::load(&path)?);
    }
    let docs: Vec<_> = bundle.store.facts().iter().map(|f| &f.processed).collect();
    let model: Tfidf = TfidfModel::fit(&docs, TextView::ContentLemmas)?;
    let depth = cfg.iterated_depth.unwrap_or(bundle.store.len());
    let mut buf: Vec<u8> = Vec::new();
    let mut lookup = RankLookup::default();
    for split in [&bundle.splits.train, &bundle.splits.dev, &bundle.splits.test] {
        for qa in split.iter() {
            let ranking = rank_iterated(qa, &model, &bundle.store, depth);
            write_ranking_dump(&mut buf, &qa.qa_id, &ranking, &path)?;
            lookup.merge(RankLookup::from_ranking(&qa.qa_id, &ranking));
        }
    }
    std::fs::write(&path, &buf).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote iterated ranking dump to {}", path.display());
    Ok(lookup)
}

// ---------------------------------------------------------------- train

/// Candidate facts of one training instance: gold first (annotated order),
/// then the sampled negatives in sorted order.
fn training_candidates<'a>(
    qa: &'a QaInstance,
    bundle: &'a CorpusBundle,
    train_cfg: &TrainConfig,
) -> Result<Vec<&'a Fact>> {
    let gold = qa
        .gold
        .as_ref()
        .ok_or_else(|| anyhow!("training instance `{}` has no gold explanation", qa.qa_id))?;
    let negatives = sample_negatives(qa, &bundle.store, train_cfg.n_neg, train_cfg.seed)?;
    let mut facts: Vec<&Fact> = Vec::with_capacity(gold.len() + negatives.len());
    for id in gold.fact_ids() {
        facts.push(bundle.store.get(id).expect("gold resolved at load"));
    }
    for id in &negatives {
        facts.push(bundle.store.get(id).expect("sampled from store"));
    }
    Ok(facts)
}

/// Build the frozen feature space over the training triples and assemble the
/// per-instance candidate vectors with their rank targets.
pub fn build_training(
    bundle: &CorpusBundle,
    providers: &ProviderSet<'_>,
    train_cfg: &TrainConfig,
) -> Result<(FeatureSpace, Vec<TrainInstance<Real>>)> {
    let mut per_instance: Vec<(&QaInstance, Vec<&Fact>)> = Vec::new();
    for qa in &bundle.splits.train {
        per_instance.push((qa, training_candidates(qa, bundle, train_cfg)?));
    }
    let space = providers.build_space(
        per_instance
            .iter()
            .flat_map(|(qa, facts)| facts.iter().map(move |fact| TripleRef { qa, fact })),
    )?;

    let mut instances = Vec::with_capacity(per_instance.len());
    for (qa, facts) in &per_instance {
        let targets = assign_rank_targets(qa.gold.as_ref().unwrap(), &bundle.store)?;
        let mut candidates = Vec::with_capacity(facts.len());
        for fact in facts {
            let x = providers.assemble::<Real>(TripleRef { qa, fact }, &space)?;
            candidates.push((x, targets.target(&fact.fact_id)));
        }
        instances.push(TrainInstance { qa_id: qa.qa_id.clone(), candidates });
    }
    Ok((space, instances))
}

pub fn train_model(
    instances: &[TrainInstance<Real>],
    space: &FeatureSpace,
    train_cfg: &TrainConfig,
) -> Result<Model> {
    let model = match train_cfg.mode {
        Mode::Pointwise => train_pointwise(instances, space.len(), train_cfg)?,
        Mode::Pairwise => train_pairwise(instances, space.len(), train_cfg)?,
    };
    Ok(model)
}

pub fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let bundle = load_bundle(cfg)?;
    let resources = Resources::load(cfg, &bundle)?;
    let providers = resources.providers(cfg)?;
    let train_cfg = cfg.train.to_train_config(cfg.seed);

    let (space, instances) = build_training(&bundle, &providers, &train_cfg)?;
    log::info!(
        "feature space: {} features ({})",
        space.len(),
        space
            .group_counts()
            .iter()
            .map(|(g, n)| format!("{g}: {n}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    log::info!("resource coverage: {}", providers.coverage.summary());

    let model = train_model(&instances, &space, &train_cfg)?;
    space.save(&cfg.out("space.tsv"))?;
    model.save(&cfg.out("model.bin"))?;
    println!(
        "trained {} model over {} features; artifacts: model.bin, space.tsv",
        train_cfg.mode.tag(),
        space.len()
    );
    Ok(())
}

// -------------------------------------------------------------- predict

/// Rank the full store for one instance with the trained model.
fn rank_instance_with_model(
    qa: &QaInstance,
    bundle: &CorpusBundle,
    providers: &ProviderSet<'_>,
    space: &FeatureSpace,
    model: &Model,
) -> Result<Ranking<Real>> {
    let mut vectors = Vec::with_capacity(bundle.store.len());
    for fact in bundle.store.facts() {
        let x = providers.assemble::<Real>(TripleRef { qa, fact }, space)?;
        vectors.push((fact.fact_id.clone(), x));
    }
    let ranked = rank_tablestore(model, qa, &vectors)?;
    Ok(ranked.ranked)
}

pub fn cmd_predict(cfg: &RunConfig, split: SplitName, ranker: RankerKind) -> Result<PathBuf> {
    let bundle = load_bundle(cfg)?;
    let out_path = match ranker {
        RankerKind::Model => cfg.out(&format!("predictions_{}.tsv", split.tag())),
        other => cfg.out(&format!("predictions_{}_{}.tsv", split.tag(), other.tag())),
    };
    let instances = split.of(&bundle);
    let mut buf: Vec<u8> = Vec::new();

    match ranker {
        RankerKind::Model => {
            let space_path = cfg.out("space.tsv");
            let model_path = cfg.out("model.bin");
            require(&space_path, "feature space")?;
            require(&model_path, "model file")?;
            let space = FeatureSpace::load(&space_path)?;
            let model = Model::load(&model_path)?;
            if model.dim() != space.len() {
                bail!(
                    "model width {} does not match feature space size {}",
                    model.dim(),
                    space.len()
                );
            }
            let resources = Resources::load(cfg, &bundle)?;
            let providers = resources.providers(cfg)?;
            for qa in instances {
                let ranking = rank_instance_with_model(qa, &bundle, &providers, &space, &model)?;
                write_ranking_dump(&mut buf, &qa.qa_id, &ranking, &out_path)?;
            }
        }
        RankerKind::Baseline => {
            let docs: Vec<_> = bundle.store.facts().iter().map(|f| &f.processed).collect();
            let model: Tfidf = TfidfModel::fit(&docs, TextView::SurfaceTokens)?;
            for qa in instances {
                let ranking = rank_baseline(qa, &model, &bundle.store);
                write_ranking_dump(&mut buf, &qa.qa_id, &ranking, &out_path)?;
            }
        }
        RankerKind::Optimized | RankerKind::Iterated => {
            let docs: Vec<_> = bundle.store.facts().iter().map(|f| &f.processed).collect();
            let model: Tfidf = TfidfModel::fit(&docs, TextView::ContentLemmas)?;
            let depth = cfg.iterated_depth.unwrap_or(bundle.store.len());
            for qa in instances {
                let ranking = match ranker {
                    RankerKind::Optimized => rank_optimized(qa, &model, &bundle.store),
                    _ => rank_iterated(qa, &model, &bundle.store, depth),
                };
                write_ranking_dump(&mut buf, &qa.qa_id, &ranking, &out_path)?;
            }
        }
    }
    std::fs::write(&out_path, &buf).with_context(|| format!("writing {}", out_path.display()))?;
    println!("wrote {} rankings to {}", instances.len(), out_path.display());
    Ok(out_path)
}

// ------------------------------------------------------------- evaluate

/// Ordered fact ids per qa id, parsed from a ranking dump.
pub fn load_predictions(path: &Path) -> Result<BTreeMap<String, Vec<String>>> {
    require(path, "predictions dump")?;
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut rows: BTreeMap<String, Vec<(u32, String)>> = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() < 3 {
            bail!("{}:{}: expected qa_id<TAB>fact_id<TAB>rank", path.display(), lineno + 1);
        }
        let rank: u32 = cells[2]
            .parse()
            .map_err(|_| anyhow!("{}:{}: bad rank `{}`", path.display(), lineno + 1, cells[2]))?;
        rows.entry(cells[0].to_string()).or_default().push((rank, cells[1].to_string()));
    }
    Ok(rows
        .into_iter()
        .map(|(qa, mut list)| {
            list.sort();
            (qa, list.into_iter().map(|(_, id)| id).collect())
        })
        .collect())
}

/// Per-instance (qa_id, ranked, gold) rows for evaluation.
pub type EvalRows = Vec<(String, Vec<String>, Vec<String>)>;

/// Rows for the gold-carrying instances of a split.
fn eval_rows(
    bundle: &CorpusBundle,
    split: SplitName,
    predictions: &BTreeMap<String, Vec<String>>,
    dump_name: &Path,
) -> Result<EvalRows> {
    let mut rows = Vec::new();
    for qa in split.of(bundle) {
        let Some(gold) = &qa.gold else { continue };
        let ranked = predictions.get(&qa.qa_id).ok_or_else(|| {
            anyhow!("predictions dump {} has no rows for qa `{}`", dump_name.display(), qa.qa_id)
        })?;
        rows.push((
            qa.qa_id.clone(),
            ranked.clone(),
            gold.fact_ids().map(str::to_string).collect(),
        ));
    }
    if rows.is_empty() {
        bail!("split `{}` has no gold-annotated instances to evaluate", split.tag());
    }
    Ok(rows)
}

pub fn report_from_rows(rows: &[(String, Vec<String>, Vec<String>)]) -> Result<EvalReport> {
    let instances: Vec<EvalInstance<'_>> = rows
        .iter()
        .map(|(qa_id, ranked, gold)| EvalInstance {
            qa_id,
            ranked: ranked.iter().map(String::as_str).collect(),
            gold_ordered: gold.iter().map(String::as_str).collect(),
        })
        .collect();
    Ok(EvalReport::build(&instances)?)
}

pub fn cmd_evaluate(
    cfg: &RunConfig,
    split: SplitName,
    predictions: Option<PathBuf>,
    compare: Option<PathBuf>,
) -> Result<EvalReport> {
    let bundle = load_bundle(cfg)?;
    let pred_path =
        predictions.unwrap_or_else(|| cfg.out(&format!("predictions_{}.tsv", split.tag())));
    let preds = load_predictions(&pred_path)?;
    let rows = eval_rows(&bundle, split, &preds, &pred_path)?;
    let report = report_from_rows(&rows)?;

    std::fs::write(cfg.out(&format!("eval_{}.json", split.tag())), report.to_json())?;
    std::fs::write(cfg.out(&format!("pr_curves_{}.csv", split.tag())), report.curves_csv())?;
    std::fs::write(
        cfg.out(&format!("map_by_length_{}.csv", split.tag())),
        report.map_by_length_csv(),
    )?;
    println!("{} mAP: {:.4} over {} instances", split.tag(), report.map, rows.len());

    if let Some(other_path) = compare {
        let other_preds = load_predictions(&other_path)?;
        let other_rows = eval_rows(&bundle, split, &other_preds, &other_path)?;
        let other = report_from_rows(&other_rows)?;
        let a: Vec<f64> = report.per_instance_ap.iter().map(|(_, ap)| *ap).collect();
        let b: Vec<f64> = other.per_instance_ap.iter().map(|(_, ap)| *ap).collect();
        let (t, p) = paired_t_test(&a, &b)?;
        println!(
            "paired t-test vs {}: mAP {:.4} vs {:.4}, t = {:.4}, two-sided p = {:.6}",
            other_path.display(),
            report.map,
            other.map,
            t,
            p
        );
    }
    Ok(report)
}

// ----------------------------------------------------------------- tune

/// Dev mAP of a model trained at one grid point, with the full store as the
/// candidate set.
fn dev_map_for(
    cfg: &RunConfig,
    bundle: &CorpusBundle,
    resources: &Resources,
    train_cfg: &TrainConfig,
) -> Result<f64> {
    let providers = resources.providers(cfg)?;
    let (space, instances) = build_training(bundle, &providers, train_cfg)?;
    let model = train_model(&instances, &space, train_cfg)?;
    let mut rows = Vec::new();
    for qa in &bundle.splits.dev {
        let Some(gold) = &qa.gold else { continue };
        let ranking = rank_instance_with_model(qa, bundle, &providers, &space, &model)?;
        rows.push((
            qa.qa_id.clone(),
            ranking.into_iter().map(|(id, _)| id).collect::<Vec<_>>(),
            gold.fact_ids().map(str::to_string).collect::<Vec<_>>(),
        ));
    }
    if rows.is_empty() {
        bail!("dev split has no gold-annotated instances");
    }
    Ok(report_from_rows(&rows)?.map)
}

pub fn cmd_tune(cfg: &RunConfig) -> Result<(f64, usize, f64)> {
    if cfg.tuning.c_grid.is_empty() || cfg.tuning.n_neg_grid.is_empty() {
        bail!("tuning grid is empty");
    }
    let bundle = load_bundle(cfg)?;
    let resources = Resources::load(cfg, &bundle)?;

    let mut grid: Vec<(f64, usize)> = Vec::new();
    for &c in &cfg.tuning.c_grid {
        for &n in &cfg.tuning.n_neg_grid {
            grid.push((c, n));
        }
    }
    grid.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let mut results: Vec<(f64, usize, f64)> = Vec::new();
    for (c, n_neg) in grid {
        let mut train_cfg = cfg.train.to_train_config(cfg.seed);
        train_cfg.c = c;
        train_cfg.n_neg = n_neg;
        let map = dev_map_for(cfg, &bundle, &resources, &train_cfg)?;
        log::info!("grid point C = {c}, n_neg = {n_neg}: dev mAP {map:.4}");
        results.push((c, n_neg, map));
    }

    let mut csv = String::from("c,n_neg,dev_map\n");
    for (c, n, m) in &results {
        csv.push_str(&format!("{c},{n},{m:.6}\n"));
    }
    std::fs::write(cfg.out("tuning.csv"), csv)?;

    let best = select_best(&results)?;
    std::fs::write(
        cfg.out("best_config.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "mode": cfg.train.mode.tag(),
            "c": best.0,
            "n_neg": best.1,
            "dev_map": best.2,
        }))?,
    )?;
    println!("best grid point: C = {}, n_neg = {}, dev mAP {:.4}", best.0, best.1, best.2);
    Ok(best)
}

// --------------------------------------------------------------- ablate

/// mAP of one trained configuration on dev and (when gold is present) test.
fn ablation_cell(
    cfg: &RunConfig,
    bundle: &CorpusBundle,
    resources: &Resources,
    groups: &[Group],
    train_cfg: &TrainConfig,
) -> Result<(f64, Option<f64>)> {
    let mut scoped = cfg.clone();
    scoped.features.groups = groups.iter().map(|g| g.tag().to_string()).collect();
    let providers = resources.providers(&scoped)?;
    let (space, instances) = build_training(bundle, &providers, train_cfg)?;
    let model = train_model(&instances, &space, train_cfg)?;

    let split_map = |split: &[QaInstance]| -> Result<Option<f64>> {
        let mut rows = Vec::new();
        for qa in split {
            let Some(gold) = &qa.gold else { continue };
            let ranking = rank_instance_with_model(qa, bundle, &providers, &space, &model)?;
            rows.push((
                qa.qa_id.clone(),
                ranking.into_iter().map(|(id, _)| id).collect::<Vec<_>>(),
                gold.fact_ids().map(str::to_string).collect::<Vec<_>>(),
            ));
        }
        if rows.is_empty() {
            return Ok(None);
        }
        Ok(Some(report_from_rows(&rows)?.map))
    };
    let dev = split_map(&bundle.splits.dev)?
        .ok_or_else(|| anyhow!("dev split has no gold-annotated instances"))?;
    let test = split_map(&bundle.splits.test)?;
    Ok((dev, test))
}

/// Grow the lexical baseline one group at a time for both learners and
/// report dev/test mAP per row.
pub fn cmd_ablate(cfg: &RunConfig) -> Result<PathBuf> {
    let bundle = load_bundle(cfg)?;
    let resources = Resources::load(cfg, &bundle)?;
    let enabled = cfg.feature_config()?.groups;
    if !enabled.contains(&Group::Lex) {
        bail!("ablation needs the lex group enabled as the base");
    }
    let addons: Vec<Group> = [Group::Concept, Group::OpenIe, Group::Multihop, Group::TfidfRank, Group::Embed]
        .into_iter()
        .filter(|g| enabled.contains(g))
        .collect();

    let pointwise = if cfg.train.mode == Mode::Pointwise {
        cfg.train.to_train_config(cfg.seed)
    } else {
        crate::config::TrainSection::default().to_train_config(cfg.seed)
    };
    let pairwise = cfg.pairwise.to_train_config(cfg.seed);
    if pairwise.mode != Mode::Pairwise {
        bail!("the `pairwise` config section must have mode = pairwise");
    }

    let mut csv = String::from("learner,feature_set,dev_map,test_map\n");
    let mut emit = |learner: &TrainConfig, label: &str, groups: &[Group]| -> Result<()> {
        let (dev, test) = ablation_cell(cfg, &bundle, &resources, groups, learner)?;
        let test_str = test.map(|m| format!("{m:.6}")).unwrap_or_default();
        csv.push_str(&format!("{},{},{:.6},{}\n", learner.mode.tag(), label, dev, test_str));
        log::info!("ablation {} {}: dev {:.4}", learner.mode.tag(), label, dev);
        Ok(())
    };
    for learner in [&pointwise, &pairwise] {
        emit(learner, "lex", &[Group::Lex])?;
        for addon in &addons {
            emit(learner, &format!("lex+{}", addon.tag()), &[Group::Lex, *addon])?;
        }
    }
    let path = cfg.out("ablation.csv");
    std::fs::write(&path, csv)?;
    println!("wrote ablation table to {}", path.display());
    Ok(path)
}

// --------------------------------------------------------------- report

/// Gold-rank proportions per table type: how often a table's facts appear at
/// gold positions 1..=10 or beyond, over train+dev explanations.
fn table_rank_proportions(bundle: &CorpusBundle, top_n: usize) -> Vec<(String, Vec<f64>)> {
    let mut per_table: BTreeMap<String, (usize, Vec<usize>)> = BTreeMap::new();
    for qa in bundle.splits.train.iter().chain(&bundle.splits.dev) {
        let Some(gold) = &qa.gold else { continue };
        for (pos, (fact_id, _)) in gold.entries.iter().enumerate() {
            let Some(fact) = bundle.store.get(fact_id) else { continue };
            let entry = per_table
                .entry(fact.table_type.clone())
                .or_insert_with(|| (0, vec![0; 11]));
            entry.0 += 1;
            let bucket = pos.min(10); // 0..9 are ranks 1..10, 10 is 11+
            entry.1[bucket] += 1;
        }
    }
    let mut tables: Vec<(String, (usize, Vec<usize>))> = per_table.into_iter().collect();
    tables.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then_with(|| a.0.cmp(&b.0)));
    tables
        .into_iter()
        .take(top_n)
        .map(|(table, (total, buckets))| {
            let props = buckets.iter().map(|&c| c as f64 / total as f64).collect();
            (table, props)
        })
        .collect()
}

pub fn cmd_report(cfg: &RunConfig, split: SplitName) -> Result<()> {
    let bundle = load_bundle(cfg)?;
    let gold_instances: Vec<&QaInstance> = bundle
        .splits
        .train
        .iter()
        .chain(&bundle.splits.dev)
        .filter(|qa| qa.gold.is_some())
        .collect();
    let stats = corpus::corpus_stats(&gold_instances, &bundle.store)?;

    let mut hist = String::from("explanation_length,qa_pairs\n");
    for (len, count) in &stats.length_histogram {
        hist.push_str(&format!("{len},{count}\n"));
    }
    std::fs::write(cfg.out("report_length_histogram.csv"), hist)?;

    let mut usage = String::from("table_type,gold_occurrences,percent\n");
    for (table, count, pct) in &stats.table_type_usage {
        usage.push_str(&format!("{table},{count},{pct:.2}\n"));
    }
    std::fs::write(cfg.out("report_table_usage.csv"), usage)?;

    let mut props = String::from(
        "table_type,r1,r2,r3,r4,r5,r6,r7,r8,r9,r10,r11_plus\n",
    );
    for (table, buckets) in table_rank_proportions(&bundle, 6) {
        let cells: Vec<String> = buckets.iter().map(|p| format!("{p:.4}")).collect();
        props.push_str(&format!("{},{}\n", table, cells.join(",")));
    }
    std::fs::write(cfg.out("report_table_rank_proportions.csv"), props)?;

    // curve and length-stratified data from the split's predictions
    let pred_path = cfg.out(&format!("predictions_{}.tsv", split.tag()));
    let preds = load_predictions(&pred_path)?;
    let rows = eval_rows(&bundle, split, &preds, &pred_path)?;
    let report = report_from_rows(&rows)?;
    std::fs::write(cfg.out(&format!("report_pr_curves_{}.csv", split.tag())), report.curves_csv())?;
    std::fs::write(
        cfg.out(&format!("report_map_by_length_{}.csv", split.tag())),
        report.map_by_length_csv(),
    )?;
    println!(
        "report written: histogram, table usage, rank proportions, curves ({} split)",
        split.tag()
    );
    Ok(())
}
