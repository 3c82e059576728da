//! Feature space construction and sparse vector assembly for
//! (question, answer, fact) triples.

pub mod extract;
pub mod resources;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Fact, QaInstance};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::SparseVector;
use crate::textproc::WordList;
use crate::tfidf::RankLookup;

pub use extract::Coverage;
use extract::{
    embed_name, embed_split_name, extract_concept, extract_embedding, extract_embedding_split,
    extract_lexical, extract_multihop, extract_openie, extract_tfidf_rank,
};
use resources::{answer_key, fact_key, question_key};
use resources::{ConceptResource, EmbeddingResource, TripleResource, EMBED_DIM};

/// Assembled sparse feature vector for one triple.
pub type FeatureVector<S> = SparseVector<S>;

/// The six feature groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    Lex,
    Concept,
    OpenIe,
    Multihop,
    TfidfRank,
    Embed,
}

impl Group {
    pub const ALL: [Group; 6] =
        [Group::Lex, Group::Concept, Group::OpenIe, Group::Multihop, Group::TfidfRank, Group::Embed];

    pub fn tag(&self) -> &'static str {
        match self {
            Group::Lex => "lex",
            Group::Concept => "concept",
            Group::OpenIe => "openie",
            Group::Multihop => "multihop",
            Group::TfidfRank => "tfidf_rank",
            Group::Embed => "embed",
        }
    }

    pub fn parse(tag: &str) -> Result<Group> {
        Group::ALL
            .into_iter()
            .find(|g| g.tag() == tag)
            .ok_or_else(|| Error::Feature(format!("unknown feature group `{tag}`")))
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag())
    }
}

/// Global name -> dense index map with a group tag per index. Frozen after
/// the training pass; unseen names are dropped at assemble time.
#[derive(Debug, Clone, Default)]
pub struct FeatureSpace {
    by_name: HashMap<String, u32>,
    names: Vec<String>,
    groups: Vec<Group>,
    frozen: bool,
}

impl FeatureSpace {
    pub fn new() -> FeatureSpace {
        FeatureSpace::default()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    /// Register a name, returning its index. Frozen spaces reject new names.
    pub fn register(&mut self, group: Group, name: &str) -> Result<u32> {
        if let Some(&idx) = self.by_name.get(name) {
            return Ok(idx);
        }
        if self.frozen {
            return Err(Error::Feature(format!("frozen feature space rejects new name `{name}`")));
        }
        let idx = self.names.len() as u32;
        self.by_name.insert(name.to_string(), idx);
        self.names.push(name.to_string());
        self.groups.push(group);
        Ok(idx)
    }

    pub fn lookup(&self, name: &str) -> Option<u32> {
        self.by_name.get(name).copied()
    }

    pub fn name_of(&self, index: u32) -> Option<&str> {
        self.names.get(index as usize).map(String::as_str)
    }

    pub fn group_of(&self, index: u32) -> Option<Group> {
        self.groups.get(index as usize).copied()
    }

    pub fn group_counts(&self) -> BTreeMap<Group, usize> {
        let mut counts = BTreeMap::new();
        for &g in &self.groups {
            *counts.entry(g).or_insert(0) += 1;
        }
        counts
    }

    pub fn indices_of(&self, group: Group) -> Vec<u32> {
        self.groups
            .iter()
            .enumerate()
            .filter(|(_, &g)| g == group)
            .map(|(i, _)| i as u32)
            .collect()
    }

    /// TSV persistence: `index<TAB>group<TAB>name`, ascending index.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(
            std::fs::File::create(path).map_err(|e| Error::io(path, e))?,
        );
        for (i, name) in self.names.iter().enumerate() {
            writeln!(w, "{}\t{}\t{}", i, self.groups[i].tag(), name)
                .map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<FeatureSpace> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = std::io::BufReader::new(file);
        let mut space = FeatureSpace::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.splitn(3, '\t').collect();
            if cells.len() != 3 {
                return Err(Error::parse(path, lineno + 1, "expected index<TAB>group<TAB>name"));
            }
            let idx: u32 = cells[0]
                .parse()
                .map_err(|_| Error::parse(path, lineno + 1, "bad index"))?;
            if idx as usize != space.len() {
                return Err(Error::parse(path, lineno + 1, "indices must be dense and ascending"));
            }
            let group = Group::parse(cells[1])
                .map_err(|e| Error::parse(path, lineno + 1, e.to_string()))?;
            space.register(group, cells[2])?;
        }
        space.freeze();
        Ok(space)
    }
}

/// Extraction configuration shared by space building and assembly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Enabled groups; disabled groups contribute nothing.
    pub groups: BTreeSet<Group>,
    /// Conceptualization cutoff per word.
    pub concept_top_k: usize,
    /// Exact-rank cap; larger ranks share one overflow bucket.
    pub rank_ceiling: u32,
    /// Per-sentence embedding blocks instead of the aggregate triple block.
    pub split_embedding: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            groups: Group::ALL.into_iter().collect(),
            concept_top_k: 50,
            rank_ceiling: 1000,
            split_embedding: false,
        }
    }
}

/// One (question, answer, fact) triple by reference.
#[derive(Clone, Copy)]
pub struct TripleRef<'a> {
    pub qa: &'a QaInstance,
    pub fact: &'a Fact,
}

/// The configured providers plus their resources. Extraction is pure given
/// the resources; the coverage counters only record lookup misses.
pub struct ProviderSet<'a> {
    pub config: FeatureConfig,
    pub verbs: &'a WordList,
    pub concepts: Option<&'a ConceptResource>,
    pub triples: Option<&'a TripleResource>,
    pub embeddings: Option<&'a EmbeddingResource>,
    pub ranks: Option<&'a RankLookup>,
    pub coverage: Coverage,
}

impl<'a> ProviderSet<'a> {
    pub fn new(config: FeatureConfig, verbs: &'a WordList) -> ProviderSet<'a> {
        ProviderSet {
            config,
            verbs,
            concepts: None,
            triples: None,
            embeddings: None,
            ranks: None,
            coverage: Coverage::default(),
        }
    }

    pub fn with_concepts(mut self, r: &'a ConceptResource) -> Self {
        self.concepts = Some(r);
        self
    }

    pub fn with_triples(mut self, r: &'a TripleResource) -> Self {
        self.triples = Some(r);
        self
    }

    pub fn with_embeddings(mut self, r: &'a EmbeddingResource) -> Self {
        self.embeddings = Some(r);
        self
    }

    pub fn with_ranks(mut self, r: &'a RankLookup) -> Self {
        self.ranks = Some(r);
        self
    }

    /// Enabled groups must have their resource wired in.
    pub fn validate(&self) -> Result<()> {
        let need = |ok: bool, group: Group, what: &str| {
            if self.config.groups.contains(&group) && !ok {
                Err(Error::Feature(format!("group `{group}` enabled but no {what} loaded")))
            } else {
                Ok(())
            }
        };
        need(self.concepts.is_some(), Group::Concept, "concept resource")?;
        need(self.triples.is_some(), Group::OpenIe, "triple resource")?;
        need(self.embeddings.is_some(), Group::Embed, "embedding resource")?;
        need(self.ranks.is_some(), Group::TfidfRank, "rank lookup")?;
        Ok(())
    }

    fn enabled(&self, group: Group) -> bool {
        self.config.groups.contains(&group)
    }

    /// All named features of one triple, tagged by group.
    pub fn extract(&self, t: TripleRef<'_>) -> Result<Vec<(Group, String, f64)>> {
        let q = &t.qa.question_proc;
        let ca = &t.qa.answer_proc;
        let f = &t.fact.processed;
        let mut out: Vec<(Group, String, f64)> = Vec::new();

        if self.enabled(Group::Lex) {
            for (name, v) in extract_lexical(q, ca, f, &t.fact.table_type) {
                out.push((Group::Lex, name, v));
            }
        }
        if self.enabled(Group::Concept) {
            let res = self.concepts.ok_or_else(|| missing(Group::Concept))?;
            for (name, v) in extract_concept(q, ca, f, res, self.config.concept_top_k, &self.coverage) {
                out.push((Group::Concept, name, v));
            }
        }
        if self.enabled(Group::OpenIe) {
            let res = self.triples.ok_or_else(|| missing(Group::OpenIe))?;
            let by_role = [
                res.get(&question_key(&t.qa.qa_id)),
                res.get(&answer_key(&t.qa.qa_id)),
                res.get(&fact_key(&t.fact.fact_id)),
            ];
            for (name, v) in extract_openie(by_role, &self.coverage) {
                out.push((Group::OpenIe, name, v));
            }
        }
        if self.enabled(Group::Multihop) {
            for (name, v) in extract_multihop(q, ca, f, self.verbs) {
                out.push((Group::Multihop, name, v));
            }
        }
        if self.enabled(Group::TfidfRank) {
            let ranks = self.ranks.ok_or_else(|| missing(Group::TfidfRank))?;
            match ranks.rank(&t.qa.qa_id, &t.fact.fact_id) {
                Some(rank) => {
                    for (name, v) in extract_tfidf_rank(rank, self.config.rank_ceiling)? {
                        out.push((Group::TfidfRank, name, v));
                    }
                }
                None => self.coverage.bump_rank_miss(),
            }
        }
        if self.enabled(Group::Embed) {
            let res = self.embeddings.ok_or_else(|| missing(Group::Embed))?;
            let feats = if self.config.split_embedding {
                extract_embedding_split(&t.qa.qa_id, &t.fact.fact_id, res, &self.coverage)
            } else {
                extract_embedding(&t.qa.qa_id, &t.fact.fact_id, res, &self.coverage)
            };
            for (name, v) in feats {
                out.push((Group::Embed, name, v));
            }
        }
        Ok(out)
    }

    /// Register every feature name observed over the training triples; the
    /// embedding block is reserved up front so its indices stay contiguous.
    /// The returned space is frozen.
    pub fn build_space<'t, I>(&self, train_triples: I) -> Result<FeatureSpace>
    where
        I: IntoIterator<Item = TripleRef<'t>>,
    {
        self.validate()?;
        let mut space = FeatureSpace::new();
        if self.enabled(Group::Embed) {
            if self.config.split_embedding {
                for role in ["q", "ca", "f"] {
                    for i in 0..EMBED_DIM {
                        space.register(Group::Embed, &embed_split_name(role, i))?;
                    }
                }
            } else {
                for i in 0..EMBED_DIM {
                    space.register(Group::Embed, &embed_name(i))?;
                }
            }
        }
        for triple in train_triples {
            for (group, name, _) in self.extract(triple)? {
                space.register(group, &name)?;
            }
        }
        space.freeze();
        Ok(space)
    }

    /// Map one triple through a frozen space. Names unseen at training time
    /// are dropped; duplicate names collapse to a single entry.
    pub fn assemble<S: Scalar>(
        &self,
        t: TripleRef<'_>,
        space: &FeatureSpace,
    ) -> Result<FeatureVector<S>> {
        debug_assert!(space.is_frozen(), "assembly needs a frozen feature space");
        let mut by_index: BTreeMap<u32, S> = BTreeMap::new();
        for (_, name, value) in self.extract(t)? {
            if let Some(idx) = space.lookup(&name) {
                by_index.entry(idx).or_insert_with(|| S::from_f64_lossy(value));
            }
        }
        Ok(SparseVector::from_sorted(by_index.into_iter().collect()))
    }
}

fn missing(group: Group) -> Error {
    Error::Feature(format!("group `{group}` enabled but its resource is not loaded"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{GoldExplanation, Role, Tablestore};
    use crate::textproc::TextProcessor;

    fn store() -> Tablestore {
        let p = TextProcessor::with_defaults();
        let mk = |id: &str, table: &str, text: &str| Fact {
            fact_id: id.into(),
            table_type: table.into(),
            text: text.into(),
            processed: p.process(text),
        };
        Tablestore::from_facts(vec![
            mk("f1", "KINDOF", "granite is a kind of igneous rock"),
            mk("f2", "SYNONYMY", "a type is synonymous with a kind"),
            mk("f3", "PROPERTIES", "rock is hard"),
        ])
        .unwrap()
    }

    fn qa() -> QaInstance {
        let p = TextProcessor::with_defaults();
        QaInstance {
            qa_id: "q1".into(),
            question: "Granite is a hard material and forms from cooling magma. Granite is a type of".into(),
            correct_answer: "igneous rock".into(),
            distractors: vec!["sedimentary rock".into()],
            gold: Some(GoldExplanation::new(vec![("f1".into(), Role::Central)]).unwrap()),
            question_proc: p.process(
                "Granite is a hard material and forms from cooling magma. Granite is a type of",
            ),
            answer_proc: p.process("igneous rock"),
        }
    }

    fn lex_only() -> FeatureConfig {
        FeatureConfig {
            groups: [Group::Lex].into_iter().collect(),
            ..FeatureConfig::default()
        }
    }

    #[test]
    fn build_space_registers_and_freezes() {
        let verbs = WordList::from_lines("be\nform\n");
        let providers = ProviderSet::new(lex_only(), &verbs);
        let store = store();
        let inst = qa();
        let triples: Vec<TripleRef> =
            store.facts().iter().map(|fact| TripleRef { qa: &inst, fact }).collect();
        let space = providers.build_space(triples.iter().copied()).unwrap();
        assert!(space.is_frozen());
        assert!(!space.is_empty());
        assert_eq!(space.group_counts().len(), 1);

        let mut frozen = space.clone();
        assert!(frozen.register(Group::Lex, "lex:new_name").is_err());
    }

    #[test]
    fn assemble_drops_unseen_and_is_pure() {
        let verbs = WordList::from_lines("be\n");
        let providers = ProviderSet::new(lex_only(), &verbs);
        let store = store();
        let inst = qa();
        // space built over facts f1 and f2 only; f3 contributes unseen names
        let space = providers
            .build_space(store.facts()[..2].iter().map(|fact| TripleRef { qa: &inst, fact }))
            .unwrap();

        let t3 = TripleRef { qa: &inst, fact: &store.facts()[2] };
        let v1: FeatureVector<f64> = providers.assemble(t3, &space).unwrap();
        let v2: FeatureVector<f64> = providers.assemble(t3, &space).unwrap();
        assert_eq!(v1, v2);
        assert!(v1.max_index().map(|i| (i as usize) < space.len()).unwrap_or(true));
        // "lex:f_lemma=hard" was never registered
        assert!(space.lookup("lex:f_lemma=hard").is_none());
    }

    #[test]
    fn disabled_groups_contribute_nothing() {
        let verbs = WordList::from_lines("be\n");
        let providers = ProviderSet::new(
            FeatureConfig { groups: BTreeSet::new(), ..FeatureConfig::default() },
            &verbs,
        );
        let store = store();
        let inst = qa();
        let t = TripleRef { qa: &inst, fact: &store.facts()[0] };
        let space = providers.build_space([t]).unwrap();
        assert_eq!(space.len(), 0);
        let v: FeatureVector<f64> = providers.assemble(t, &space).unwrap();
        assert!(v.is_empty());
    }

    #[test]
    fn groups_partition_the_space() {
        let verbs = WordList::from_lines("be\nform\n");
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("c.tsv"), "granite\t1\trock\nrock\t1\tmaterial\n").unwrap();
        std::fs::write(dir.path().join("t.tsv"), "q:q1\tgranite\tbe\trock\nf:f1\tgranite\tbe\trock\n")
            .unwrap();
        let concepts = ConceptResource::load(&dir.path().join("c.tsv")).unwrap();
        let triples = TripleResource::load(&dir.path().join("t.tsv")).unwrap();
        let mut embeds = EmbeddingResource::default();
        embeds
            .insert_pair("q1", "f1", (0..EMBED_DIM).map(|i| 0.5 + i as f32).collect())
            .unwrap();
        let mut ranks = RankLookup::default();
        ranks.insert("q1", "f1", 1);
        ranks.insert("q1", "f2", 2);
        ranks.insert("q1", "f3", 3);

        let providers = ProviderSet::new(FeatureConfig::default(), &verbs)
            .with_concepts(&concepts)
            .with_triples(&triples)
            .with_embeddings(&embeds)
            .with_ranks(&ranks);
        let store = store();
        let inst = qa();
        let triples_iter: Vec<TripleRef> =
            store.facts().iter().map(|fact| TripleRef { qa: &inst, fact }).collect();
        let space = providers.build_space(triples_iter.iter().copied()).unwrap();

        let counts = space.group_counts();
        let total: usize = counts.values().sum();
        assert_eq!(total, space.len());
        assert_eq!(counts[&Group::Embed], EMBED_DIM);
        for g in Group::ALL {
            assert!(counts.get(&g).copied().unwrap_or(0) > 0, "group {g} empty");
        }

        // disabling a group zeroes exactly its block
        let full: FeatureVector<f64> =
            providers.assemble(TripleRef { qa: &inst, fact: &store.facts()[0] }, &space).unwrap();
        let no_lex = ProviderSet::new(
            FeatureConfig {
                groups: Group::ALL.into_iter().filter(|g| *g != Group::Lex).collect(),
                ..FeatureConfig::default()
            },
            &verbs,
        )
        .with_concepts(&concepts)
        .with_triples(&triples)
        .with_embeddings(&embeds)
        .with_ranks(&ranks);
        let partial: FeatureVector<f64> =
            no_lex.assemble(TripleRef { qa: &inst, fact: &store.facts()[0] }, &space).unwrap();

        let full_map: BTreeMap<u32, f64> = full.iter().collect();
        let partial_map: BTreeMap<u32, f64> = partial.iter().collect();
        for (&idx, &v) in &full_map {
            match space.group_of(idx).unwrap() {
                Group::Lex => assert!(!partial_map.contains_key(&idx)),
                _ => assert_eq!(partial_map.get(&idx), Some(&v)),
            }
        }
        for idx in partial_map.keys() {
            assert!(full_map.contains_key(idx));
        }
    }

    #[test]
    fn space_tsv_roundtrip() {
        let mut space = FeatureSpace::new();
        space.register(Group::Lex, "lex:q_lemma=granite").unwrap();
        space.register(Group::Multihop, "mh:f_has_ca_words").unwrap();
        space.freeze();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("space.tsv");
        space.save(&path).unwrap();
        let loaded = FeatureSpace::load(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded.lookup("mh:f_has_ca_words"), Some(1));
        assert_eq!(loaded.group_of(1), Some(Group::Multihop));
    }

    #[test]
    fn validate_requires_resources_for_enabled_groups() {
        let verbs = WordList::from_lines("be\n");
        let providers = ProviderSet::new(FeatureConfig::default(), &verbs);
        assert!(providers.validate().is_err());
    }
}
