//! The six feature extractors. Each returns named features; one-hot features
//! carry value 1.0, embedding features carry the stored reals. Names are
//! prefixed per group, which keeps the group index blocks disjoint by
//! construction.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::textproc::{affixes, zone_of, ProcessedText, WordList};

use super::resources::{ConceptResource, EmbeddingResource, RelationTriple, EMBED_DIM};

pub type Named = (String, f64);

fn one_hot(names: impl IntoIterator<Item = String>) -> Vec<Named> {
    names.into_iter().map(|n| (n, 1.0)).collect()
}

fn content_lemma_set(p: &ProcessedText) -> BTreeSet<&str> {
    p.content_lemmas().collect()
}

/// Lexical overlap: role-tagged content lemmas and affixes, their shared
/// intersections, and the fact's table type.
pub fn extract_lexical(
    q: &ProcessedText,
    ca: &ProcessedText,
    f: &ProcessedText,
    table_type: &str,
) -> Vec<Named> {
    let (ql, cal, fl) = (content_lemma_set(q), content_lemma_set(ca), content_lemma_set(f));
    let mut names: BTreeSet<String> = BTreeSet::new();

    for (role, set) in [("q", &ql), ("ca", &cal), ("f", &fl)] {
        for lemma in set.iter() {
            names.insert(format!("lex:{role}_lemma={lemma}"));
        }
    }
    for lemma in ql.intersection(&fl) {
        names.insert(format!("lex:qf_lemma={lemma}"));
    }
    for lemma in cal.intersection(&fl) {
        names.insert(format!("lex:caf_lemma={lemma}"));
    }
    for lemma in ql.iter().filter(|l| cal.contains(*l) && fl.contains(*l)) {
        names.insert(format!("lex:qcaf_lemma={lemma}"));
    }

    let affix_set = |set: &BTreeSet<&str>| -> BTreeSet<String> {
        set.iter().flat_map(|l| affixes(l)).collect()
    };
    let (qa_affix, ca_affix, f_affix) = (affix_set(&ql), affix_set(&cal), affix_set(&fl));
    for (role, set) in [("q", &qa_affix), ("ca", &ca_affix), ("f", &f_affix)] {
        for a in set {
            names.insert(format!("lex:{role}_{a}"));
        }
    }
    for a in qa_affix.iter().filter(|a| ca_affix.contains(*a) && f_affix.contains(*a)) {
        names.insert(format!("lex:qcaf_{a}"));
    }

    names.insert(format!("lex:tabletype={table_type}"));
    one_hot(names)
}

/// Counters for resource lookups that found nothing; reported once per run.
#[derive(Debug, Default)]
pub struct Coverage {
    pub concept_hits: std::sync::atomic::AtomicU64,
    pub concept_misses: std::sync::atomic::AtomicU64,
    pub triple_misses: std::sync::atomic::AtomicU64,
    pub embed_misses: std::sync::atomic::AtomicU64,
    pub rank_misses: std::sync::atomic::AtomicU64,
}

impl Coverage {
    fn bump(counter: &std::sync::atomic::AtomicU64) {
        counter.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    }

    pub(crate) fn bump_rank_miss(&self) {
        Self::bump(&self.rank_misses);
    }

    pub fn summary(&self) -> String {
        use std::sync::atomic::Ordering::Relaxed;
        format!(
            "concept hits/misses {}/{}, triple misses {}, embedding misses {}, rank misses {}",
            self.concept_hits.load(Relaxed),
            self.concept_misses.load(Relaxed),
            self.triple_misses.load(Relaxed),
            self.embed_misses.load(Relaxed),
            self.rank_misses.load(Relaxed),
        )
    }
}

/// Concept expansions: role-tagged top-k conceptualizations per content
/// lemma, shared conceptualizations, and relation-tagged concept facts.
pub fn extract_concept(
    q: &ProcessedText,
    ca: &ProcessedText,
    f: &ProcessedText,
    resource: &ConceptResource,
    top_k: usize,
    coverage: &Coverage,
) -> Vec<Named> {
    let mut names: BTreeSet<String> = BTreeSet::new();
    let mut role_concepts: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();

    for (role, text) in [("q", q), ("ca", ca), ("f", f)] {
        let mut concepts: BTreeSet<&str> = BTreeSet::new();
        for lemma in content_lemma_set(text) {
            match resource.get(lemma) {
                Some(entry) => {
                    Coverage::bump(&coverage.concept_hits);
                    for c in entry.concepts.iter().take(top_k) {
                        concepts.insert(c);
                        names.insert(format!("cn:{role}_concept={c}"));
                    }
                    for rel in &entry.relations {
                        names.insert(format!("cn:rel={rel}"));
                    }
                }
                None => Coverage::bump(&coverage.concept_misses),
            }
        }
        role_concepts.insert(role, concepts);
    }

    let (qc, cac, fc) = (&role_concepts["q"], &role_concepts["ca"], &role_concepts["f"]);
    for c in qc.intersection(fc) {
        names.insert(format!("cn:qf_concept={c}"));
    }
    for c in cac.intersection(fc) {
        names.insert(format!("cn:caf_concept={c}"));
    }
    for c in qc.iter().filter(|c| cac.contains(*c) && fc.contains(*c)) {
        names.insert(format!("cn:qcaf_concept={c}"));
    }
    one_hot(names)
}

/// Open-relation triples: role-tagged subject/object/predicate lemmas and
/// shared subjects/objects between the roles.
pub fn extract_openie(
    triples_by_role: [Option<&[RelationTriple]>; 3],
    coverage: &Coverage,
) -> Vec<Named> {
    let roles = ["q", "ca", "f"];
    let mut names: BTreeSet<String> = BTreeSet::new();
    let mut subjects: [BTreeSet<&str>; 3] = Default::default();
    let mut objects: [BTreeSet<&str>; 3] = Default::default();

    for (i, maybe) in triples_by_role.iter().enumerate() {
        let role = roles[i];
        match maybe {
            Some(triples) => {
                for t in *triples {
                    for s in &t.subject {
                        subjects[i].insert(s);
                        names.insert(format!("oie:{role}_subj={s}"));
                    }
                    for o in &t.object {
                        objects[i].insert(o);
                        names.insert(format!("oie:{role}_obj={o}"));
                    }
                    names.insert(format!("oie:{role}_pred={}", t.predicate));
                }
            }
            None => Coverage::bump(&coverage.triple_misses),
        }
    }

    let mut shared = |tag: &str, sets: &[BTreeSet<&str>; 3]| {
        let (qs, cas, fs) = (&sets[0], &sets[1], &sets[2]);
        for s in qs.intersection(fs) {
            names.insert(format!("oie:qf_{tag}={s}"));
        }
        for s in cas.intersection(fs) {
            names.insert(format!("oie:caf_{tag}={s}"));
        }
        for s in qs.iter().filter(|s| cas.contains(*s) && fs.contains(*s)) {
            names.insert(format!("oie:qcaf_{tag}={s}"));
        }
    };
    shared("subj", &subjects);
    shared("obj", &objects);
    one_hot(names)
}

const LEN_BIN: usize = 5;

fn first_content(p: &ProcessedText) -> Option<(usize, &str, &str)> {
    p.content_mask
        .iter()
        .position(|&m| m)
        .map(|i| (i, p.tokens[i].as_str(), p.lemmas[i].as_str()))
}

fn last_content(p: &ProcessedText) -> Option<(usize, &str, &str)> {
    p.content_mask
        .iter()
        .rposition(|&m| m)
        .map(|i| (i, p.tokens[i].as_str(), p.lemmas[i].as_str()))
}

/// Positional lexical matches: binned q/ca lengths, verb positions, zones of
/// verbs shared with the fact, and first/last word match indicators.
/// Boundary matches use content (non-stopword) tokens; verb positions are the
/// raw 0-based token positions.
pub fn extract_multihop(
    q: &ProcessedText,
    ca: &ProcessedText,
    f: &ProcessedText,
    verbs: &WordList,
) -> Vec<Named> {
    let mut names: BTreeSet<String> = BTreeSet::new();

    names.insert(format!("mh:q_len_bin={}", q.len().div_ceil(LEN_BIN)));
    names.insert(format!("mh:ca_len_bin={}", ca.len().div_ceil(LEN_BIN)));

    for (role, text) in [("q", q), ("ca", ca)] {
        for (pos, lemma) in text.lemmas.iter().enumerate() {
            if verbs.contains(lemma) {
                names.insert(format!("mh:{role}_verb_pos={pos}"));
            }
        }
    }

    // zone in f of verbs shared by q and f
    let q_verbs: HashSet<&str> =
        q.lemmas.iter().map(String::as_str).filter(|l| verbs.contains(l)).collect();
    if !f.is_empty() {
        for (pos, lemma) in f.lemmas.iter().enumerate() {
            if q_verbs.contains(lemma.as_str()) {
                if let Ok(zone) = zone_of(pos, f.len()) {
                    names.insert(format!("mh:qf_verb_zone={zone}"));
                }
            }
        }
    }

    // uni/bigram answers: containment and end-of-fact match
    if !ca.is_empty() && ca.len() <= 2 {
        let f_tokens: HashSet<&str> = f.tokens.iter().map(String::as_str).collect();
        let f_lemmas: HashSet<&str> = f.lemmas.iter().map(String::as_str).collect();
        if ca.tokens.iter().all(|t| f_tokens.contains(t.as_str())) {
            names.insert("mh:f_has_ca_words".into());
        }
        if ca.lemmas.iter().all(|l| f_lemmas.contains(l.as_str())) {
            names.insert("mh:f_has_ca_lemmas".into());
        }
        let ends_with = |hay: &[String], needle: &[String]| {
            hay.len() >= needle.len() && hay[hay.len() - needle.len()..] == *needle
        };
        if ends_with(&f.tokens, &ca.tokens) || ends_with(&f.lemmas, &ca.lemmas) {
            names.insert("mh:ca_last_in_f".into());
        }
    }

    // last/first question word matches against the fact
    if let Some((_, q_tok, q_lem)) = last_content(q) {
        let in_tokens = f.tokens.iter().any(|t| t == q_tok);
        let in_lemmas = f.lemmas.iter().any(|l| l == q_lem);
        if in_tokens || in_lemmas {
            names.insert("mh:f_has_last_q".into());
        }
        if let Some((_, f_tok, f_lem)) = first_content(f) {
            if f_tok == q_tok || f_lem == q_lem {
                names.insert("mh:last_q_first_in_f".into());
            }
        }
        if let Some((_, f_tok, f_lem)) = last_content(f) {
            if f_tok == q_tok || f_lem == q_lem {
                names.insert("mh:last_q_last_in_f".into());
            }
        }
    }
    if let (Some((_, q_tok, q_lem)), Some((_, f_tok, f_lem))) = (first_content(q), first_content(f))
    {
        if f_tok == q_tok || f_lem == q_lem {
            names.insert("mh:first_q_first_in_f".into());
        }
    }

    one_hot(names)
}

const TOP_FLAGS: [u32; 3] = [100, 500, 1000];

/// Retrieval-rank features for a 1-based rank from the iterated ranking dump.
pub fn extract_tfidf_rank(rank: u32, ceiling: u32) -> Result<Vec<Named>> {
    if rank < 1 {
        return Err(Error::Feature("tf-idf rank features need a 1-based rank".into()));
    }
    let mut names: Vec<String> = Vec::with_capacity(6);
    if rank <= ceiling {
        names.push(format!("tfr:rank={rank}"));
    } else {
        names.push(format!("tfr:rank={ceiling}+"));
    }
    names.push(format!("tfr:bin50={}", rank.div_ceil(50)));
    names.push(format!("tfr:bin100={}", rank.div_ceil(100)));
    for k in TOP_FLAGS {
        if rank <= k {
            names.push(format!("tfr:top{k}"));
        }
    }
    Ok(one_hot(names))
}

pub fn embed_name(dim: usize) -> String {
    format!("emb:{dim:03}")
}

pub fn embed_split_name(role: &str, dim: usize) -> String {
    format!("emb:{role}:{dim:03}")
}

/// Aggregate triple embedding copied into the reserved block; a missing key
/// yields no entries (all zeros) and bumps the miss counter.
pub fn extract_embedding(
    qa_id: &str,
    fact_id: &str,
    resource: &EmbeddingResource,
    coverage: &Coverage,
) -> Vec<Named> {
    match resource.get_pair(qa_id, fact_id) {
        Some(vector) => vector
            .iter()
            .enumerate()
            .map(|(i, &v)| (embed_name(i), v as f64))
            .collect(),
        None => {
            Coverage::bump(&coverage.embed_misses);
            Vec::new()
        }
    }
}

/// Per-sentence embedding variant: separate q/ca/f blocks looked up under the
/// sentence-key scheme. Unvalidated configuration kept behind a flag.
pub fn extract_embedding_split(
    qa_id: &str,
    fact_id: &str,
    resource: &EmbeddingResource,
    coverage: &Coverage,
) -> Vec<Named> {
    let keys = [
        ("q", super::resources::question_key(qa_id)),
        ("ca", super::resources::answer_key(qa_id)),
        ("f", super::resources::fact_key(fact_id)),
    ];
    let mut out = Vec::new();
    for (role, key) in keys {
        match resource.get_key(&key) {
            Some(vector) => {
                out.extend(vector.iter().enumerate().map(|(i, &v)| (embed_split_name(role, i), v as f64)));
            }
            None => Coverage::bump(&coverage.embed_misses),
        }
    }
    out
}

pub const EMBED_BLOCK: usize = EMBED_DIM;
