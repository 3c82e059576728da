//! TF-IDF vector space over the tablestore, cosine ranking, and the three
//! reference rankers whose output also feeds the rank feature group.
//!
//! idf(t) = ln((1 + N) / (1 + df(t))) + 1; document vectors are raw term
//! counts times idf, L2-normalized. Ties everywhere break by ascending
//! fact id.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::corpus::{QaInstance, Tablestore};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::SparseVector;
use crate::textproc::ProcessedText;

/// Which surface of a processed sentence feeds the vector space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextView {
    /// All surface tokens, stopwords kept (reference baseline).
    SurfaceTokens,
    /// Stopword-filtered lemmas (optimized/iterated rankers, rank features).
    ContentLemmas,
}

fn view_terms<'a>(p: &'a ProcessedText, view: TextView) -> Box<dyn Iterator<Item = &'a str> + 'a> {
    match view {
        TextView::SurfaceTokens => Box::new(p.tokens.iter().map(String::as_str)),
        TextView::ContentLemmas => Box::new(p.content_lemmas()),
    }
}

#[derive(Debug, Clone)]
pub struct TfidfModel<S> {
    view: TextView,
    vocab: BTreeMap<String, u32>,
    idf: Vec<S>,
    doc_vectors: Vec<SparseVector<S>>,
}

impl<S: Scalar> TfidfModel<S> {
    /// Fit the vector space over one document per fact, in store order.
    pub fn fit(documents: &[&ProcessedText], view: TextView) -> Result<TfidfModel<S>> {
        if documents.is_empty() {
            return Err(Error::Corpus("tf-idf fit needs at least one document".into()));
        }
        let mut vocab: BTreeMap<String, u32> = BTreeMap::new();
        for doc in documents {
            for term in view_terms(doc, view) {
                let next = vocab.len() as u32;
                vocab.entry(term.to_string()).or_insert(next);
            }
        }
        // Re-index in sorted term order so indices never depend on document order.
        for (i, (_, idx)) in vocab.iter_mut().enumerate() {
            *idx = i as u32;
        }

        let mut df = vec![0u32; vocab.len()];
        let mut counts: Vec<Vec<(u32, u32)>> = Vec::with_capacity(documents.len());
        for doc in documents {
            let mut tf: BTreeMap<u32, u32> = BTreeMap::new();
            for term in view_terms(doc, view) {
                *tf.entry(vocab[term]).or_default() += 1;
            }
            for &t in tf.keys() {
                df[t as usize] += 1;
            }
            counts.push(tf.into_iter().collect());
        }

        let n = documents.len() as f64;
        let idf: Vec<S> = df
            .iter()
            .map(|&d| S::from_f64_lossy(((1.0 + n) / (1.0 + d as f64)).ln() + 1.0))
            .collect();

        let doc_vectors = counts
            .into_iter()
            .map(|tf| {
                SparseVector::from_sorted(
                    tf.into_iter()
                        .map(|(t, c)| (t, S::from_usize(c as usize).unwrap() * idf[t as usize]))
                        .collect(),
                )
                .normalized()
            })
            .collect();

        Ok(TfidfModel { view, vocab, idf, doc_vectors })
    }

    pub fn view(&self) -> TextView {
        self.view
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    pub fn term_index(&self, term: &str) -> Option<u32> {
        self.vocab.get(term).copied()
    }

    pub fn idf(&self, term: &str) -> Option<S> {
        self.term_index(term).map(|t| self.idf[t as usize])
    }

    pub fn doc_vector(&self, doc: usize) -> &SparseVector<S> {
        &self.doc_vectors[doc]
    }

    /// Unit query vector over this model's view of the given sentences.
    pub fn query_vector<'a, I: IntoIterator<Item = &'a ProcessedText>>(
        &self,
        sentences: I,
    ) -> SparseVector<S> {
        let mut tf: BTreeMap<u32, u32> = BTreeMap::new();
        for sentence in sentences {
            for term in view_terms(sentence, self.view) {
                if let Some(t) = self.vocab.get(term) {
                    *tf.entry(*t).or_default() += 1;
                }
            }
        }
        SparseVector::from_sorted(
            tf.into_iter()
                .map(|(t, c)| (t, S::from_usize(c as usize).unwrap() * self.idf[t as usize]))
                .collect(),
        )
        .normalized()
    }
}

/// Dot product of unit-normalized sparse vectors; all-zero input yields 0.
pub fn cosine<S: Scalar>(a: &SparseVector<S>, b: &SparseVector<S>) -> S {
    a.dot(b)
}

fn sort_ranked<S: Scalar>(scored: &mut [(usize, S)], store: &Tablestore) {
    scored.sort_by(|&(ia, sa), &(ib, sb)| {
        sb.partial_cmp(&sa)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| store.facts()[ia].fact_id.cmp(&store.facts()[ib].fact_id))
    });
}

/// A full-store ranking: (fact_id, score) in descending score order.
pub type Ranking<S> = Vec<(String, S)>;

fn rank_by_query<S: Scalar>(
    query: &SparseVector<S>,
    model: &TfidfModel<S>,
    store: &Tablestore,
) -> Ranking<S> {
    let mut scored: Vec<(usize, S)> = (0..store.len())
        .map(|i| (i, cosine(query, &model.doc_vectors[i])))
        .collect();
    sort_ranked(&mut scored, store);
    scored
        .into_iter()
        .map(|(i, s)| (store.facts()[i].fact_id.clone(), s))
        .collect()
}

/// Rank by cosine to the query built from the question plus every answer
/// choice, surface tokens with stopwords kept. Falls back to question +
/// correct answer when no distractor choices are recorded.
pub fn rank_baseline<S: Scalar>(
    qa: &QaInstance,
    model: &TfidfModel<S>,
    store: &Tablestore,
) -> Ranking<S> {
    debug_assert_eq!(model.view, TextView::SurfaceTokens);
    if qa.distractors.is_empty() {
        log::debug!("qa `{}` has no answer choices; baseline query falls back to question + correct answer", qa.qa_id);
    }
    let distractor_proc: Vec<ProcessedText> = qa
        .distractors
        .iter()
        .map(|d| {
            let tokens = crate::textproc::tokenize(d);
            ProcessedText {
                lemmas: tokens.clone(),
                content_mask: vec![true; tokens.len()],
                tokens,
            }
        })
        .collect();
    let sentences: Vec<&ProcessedText> = std::iter::once(&qa.question_proc)
        .chain(std::iter::once(&qa.answer_proc))
        .chain(distractor_proc.iter())
        .collect();
    let query = model.query_vector(sentences);
    rank_by_query(&query, model, store)
}

/// Rank by cosine to the lemmatized, stopword-filtered question + correct
/// answer query.
pub fn rank_optimized<S: Scalar>(
    qa: &QaInstance,
    model: &TfidfModel<S>,
    store: &Tablestore,
) -> Ranking<S> {
    debug_assert_eq!(model.view, TextView::ContentLemmas);
    let query = model.query_vector([&qa.question_proc, &qa.answer_proc]);
    rank_by_query(&query, model, store)
}

/// Greedy query expansion: `depth` times, pop the top-ranked remaining fact
/// into the output and append its content lemmas to the query; whatever is
/// left after `depth` rounds is appended in its last-iteration order.
/// `depth` is clamped to the store size.
pub fn rank_iterated<S: Scalar>(
    qa: &QaInstance,
    model: &TfidfModel<S>,
    store: &Tablestore,
    depth: usize,
) -> Ranking<S> {
    debug_assert_eq!(model.view, TextView::ContentLemmas);
    let n = store.len();
    let depth = depth.min(n);

    // Query term counts; scores are maintained incrementally as the query
    // grows, via a postings list per term. Ordering by the un-normalized dot
    // product matches ordering by cosine because the query norm is shared.
    let mut postings: Vec<Vec<(u32, S)>> = vec![Vec::new(); model.vocab_len()];
    for (doc, vec) in model.doc_vectors.iter().enumerate() {
        for (t, w) in vec.iter() {
            postings[t as usize].push((doc as u32, w));
        }
    }

    fn add_terms<S: Scalar>(
        added: &BTreeMap<u32, u32>,
        idf: &[S],
        postings: &[Vec<(u32, S)>],
        tf: &mut BTreeMap<u32, u32>,
        dot: &mut [S],
        qnorm_sq: &mut S,
    ) {
        for (&t, &delta) in added {
            let idf_t = idf[t as usize];
            let old = S::from_u32(tf.get(&t).copied().unwrap_or(0)).unwrap();
            let new = old + S::from_u32(delta).unwrap();
            *qnorm_sq += (new * new - old * old) * idf_t * idf_t;
            let dw = (new - old) * idf_t;
            for &(doc, w) in &postings[t as usize] {
                dot[doc as usize] += dw * w;
            }
            let _ = tf.entry(t).and_modify(|c| *c += delta).or_insert(delta);
        }
    }

    let mut initial: BTreeMap<u32, u32> = BTreeMap::new();
    for sentence in [&qa.question_proc, &qa.answer_proc] {
        for term in sentence.content_lemmas() {
            if let Some(&t) = model.vocab.get(term) {
                *initial.entry(t).or_default() += 1;
            }
        }
    }

    let mut tf: BTreeMap<u32, u32> = BTreeMap::new();
    let mut dot: Vec<S> = vec![S::zero(); n];
    let mut qnorm_sq = S::zero();
    add_terms(&initial, &model.idf, &postings, &mut tf, &mut dot, &mut qnorm_sq);

    let mut emitted = vec![false; n];
    let mut out: Vec<(String, S)> = Vec::with_capacity(n);
    for it in 0..depth {
        let mut best: Option<usize> = None;
        for i in 0..n {
            if emitted[i] {
                continue;
            }
            match best {
                None => best = Some(i),
                Some(b) => {
                    let (ds, bs) = (dot[i], dot[b]);
                    if ds > bs
                        || (ds == bs && store.facts()[i].fact_id < store.facts()[b].fact_id)
                    {
                        best = Some(i);
                    }
                }
            }
        }
        let b = match best {
            Some(b) => b,
            None => break,
        };
        emitted[b] = true;
        let qn = qnorm_sq.sqrt();
        let score = if qn == S::zero() { S::zero() } else { dot[b] / qn };
        out.push((store.facts()[b].fact_id.clone(), score));

        // Expand the query with the popped fact's content lemmas. The final
        // pop's expansion never feeds a ranking pass, so the leftover facts
        // keep their last-iteration order.
        if it + 1 < depth {
            let fact = &store.facts()[b];
            let mut added: BTreeMap<u32, u32> = BTreeMap::new();
            for term in fact.processed.content_lemmas() {
                if let Some(&t) = model.vocab.get(term) {
                    *added.entry(t).or_default() += 1;
                }
            }
            add_terms(&added, &model.idf, &postings, &mut tf, &mut dot, &mut qnorm_sq);
        }
    }

    // Remaining facts in last-iteration order.
    let qn = qnorm_sq.sqrt();
    let mut rest: Vec<(usize, S)> = (0..n)
        .filter(|&i| !emitted[i])
        .map(|i| (i, if qn == S::zero() { S::zero() } else { dot[i] / qn }))
        .collect();
    sort_ranked(&mut rest, store);
    out.extend(rest.into_iter().map(|(i, s)| (store.facts()[i].fact_id.clone(), s)));
    out
}

/// Write rankings as the dump format `qa_id<TAB>fact_id<TAB>rank<TAB>score`.
pub fn write_ranking_dump<S: Scalar, W: Write>(
    w: &mut W,
    qa_id: &str,
    ranking: &Ranking<S>,
    path: &Path,
) -> Result<()> {
    for (rank, (fact_id, score)) in ranking.iter().enumerate() {
        writeln!(w, "{}\t{}\t{}\t{:.6}", qa_id, fact_id, rank + 1, score.to_f64_lossy())
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Rank lookup parsed from a dump file: (qa_id, fact_id) -> 1-based rank.
#[derive(Debug, Clone, Default)]
pub struct RankLookup {
    by_qa: std::collections::HashMap<String, std::collections::HashMap<String, u32>>,
}

impl RankLookup {
    pub fn load(path: &Path) -> Result<RankLookup> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = std::io::BufReader::new(file);
        let mut by_qa: std::collections::HashMap<String, std::collections::HashMap<String, u32>> =
            std::collections::HashMap::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split('\t').collect();
            if cells.len() < 3 {
                return Err(Error::parse(path, lineno + 1, "expected qa_id<TAB>fact_id<TAB>rank"));
            }
            let rank: u32 = cells[2].parse().map_err(|_| {
                Error::parse(path, lineno + 1, format!("bad rank value `{}`", cells[2]))
            })?;
            by_qa
                .entry(cells[0].to_string())
                .or_default()
                .insert(cells[1].to_string(), rank);
        }
        Ok(RankLookup { by_qa })
    }

    pub fn insert(&mut self, qa_id: &str, fact_id: &str, rank: u32) {
        self.by_qa
            .entry(qa_id.to_string())
            .or_default()
            .insert(fact_id.to_string(), rank);
    }

    pub fn from_ranking<S: Scalar>(qa_id: &str, ranking: &Ranking<S>) -> RankLookup {
        let mut out = RankLookup::default();
        for (i, (fact_id, _)) in ranking.iter().enumerate() {
            out.insert(qa_id, fact_id, (i + 1) as u32);
        }
        out
    }

    pub fn merge(&mut self, other: RankLookup) {
        for (qa, map) in other.by_qa {
            self.by_qa.entry(qa).or_default().extend(map);
        }
    }

    pub fn rank(&self, qa_id: &str, fact_id: &str) -> Option<u32> {
        self.by_qa.get(qa_id).and_then(|m| m.get(fact_id)).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.by_qa.is_empty()
    }
}
