//! Tablestore, dataset splits and gold explanations.
//!
//! Tablestore directory layout: one UTF-8 TSV per table, first row header.
//! The id column is the one whose bracket-stripped header equals `UID`
//! (case-insensitive); bracketed headers such as `[SKIP] COMMENTS` are
//! annotation columns and contribute no text. Split files are TSVs with
//! columns `qa_id  question  answer  choices  gold`, where choices are
//! `;`-separated and gold entries are space-separated `fact_id|ROLE` tokens
//! in annotated order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::{ProcessedText, TextProcessor};

pub const MAX_GOLD_LEN: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Central,
    Grounding,
    LexicalGlue,
}

impl Role {
    pub fn parse(token: &str) -> Result<Role> {
        match token.to_ascii_uppercase().as_str() {
            "CENTRAL" => Ok(Role::Central),
            "GROUNDING" => Ok(Role::Grounding),
            "LEXGLUE" => Ok(Role::LexicalGlue),
            other => Err(Error::Corpus(format!("unknown explanation role token `{other}`"))),
        }
    }

    pub fn token(&self) -> &'static str {
        match self {
            Role::Central => "CENTRAL",
            Role::Grounding => "GROUNDING",
            Role::LexicalGlue => "LEXGLUE",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.token())
    }
}

/// One tablestore row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fact {
    pub fact_id: String,
    pub table_type: String,
    pub text: String,
    pub processed: ProcessedText,
}

#[derive(Debug, Clone, Default)]
pub struct Tablestore {
    facts: Vec<Fact>,
    by_id: HashMap<String, usize>,
}

impl Tablestore {
    pub fn from_facts(facts: Vec<Fact>) -> Result<Tablestore> {
        if facts.is_empty() {
            return Err(Error::Corpus("tablestore holds no facts".into()));
        }
        let mut by_id = HashMap::with_capacity(facts.len());
        for (i, f) in facts.iter().enumerate() {
            if by_id.insert(f.fact_id.clone(), i).is_some() {
                return Err(Error::Corpus(format!("duplicate fact id `{}`", f.fact_id)));
            }
        }
        Ok(Tablestore { facts, by_id })
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn get(&self, fact_id: &str) -> Option<&Fact> {
        self.by_id.get(fact_id).map(|&i| &self.facts[i])
    }

    pub fn index_of(&self, fact_id: &str) -> Option<usize> {
        self.by_id.get(fact_id).copied()
    }

    pub fn contains(&self, fact_id: &str) -> bool {
        self.by_id.contains_key(fact_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldExplanation {
    /// (fact_id, role) in annotated logical order.
    pub entries: Vec<(String, Role)>,
}

impl GoldExplanation {
    pub fn new(entries: Vec<(String, Role)>) -> Result<GoldExplanation> {
        if entries.is_empty() || entries.len() > MAX_GOLD_LEN {
            return Err(Error::Corpus(format!(
                "gold explanation must have 1..={} entries, got {}",
                MAX_GOLD_LEN,
                entries.len()
            )));
        }
        let mut seen = HashSet::new();
        for (id, _) in &entries {
            if !seen.insert(id.clone()) {
                return Err(Error::Corpus(format!("duplicate fact `{id}` in gold explanation")));
            }
        }
        Ok(GoldExplanation { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn fact_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(id, _)| id.as_str())
    }

    pub fn id_set(&self) -> HashSet<&str> {
        self.fact_ids().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaInstance {
    pub qa_id: String,
    pub question: String,
    pub correct_answer: String,
    pub distractors: Vec<String>,
    pub gold: Option<GoldExplanation>,
    pub question_proc: ProcessedText,
    pub answer_proc: ProcessedText,
}

#[derive(Debug, Clone, Default)]
pub struct SplitSet {
    pub train: Vec<QaInstance>,
    pub dev: Vec<QaInstance>,
    pub test: Vec<QaInstance>,
}

impl SplitSet {
    /// qa_ids must be disjoint across splits.
    pub fn validate(&self) -> Result<()> {
        let mut seen: HashMap<&str, &str> = HashMap::new();
        for (name, split) in [("train", &self.train), ("dev", &self.dev), ("test", &self.test)] {
            for qa in split {
                if let Some(prev) = seen.insert(&qa.qa_id, name) {
                    return Err(Error::Corpus(format!(
                        "qa id `{}` appears in both {prev} and {name} splits",
                        qa.qa_id
                    )));
                }
            }
        }
        Ok(())
    }
}

fn strip_brackets(header: &str) -> Option<&str> {
    let h = header.trim();
    let rest = h.strip_prefix('[')?;
    let end = rest.find(']')?;
    Some(rest[end + 1..].trim())
}

fn is_bracketed(header: &str) -> bool {
    header.trim_start().starts_with('[')
}

/// Per-file loader overrides: bracketed headers listed here are still treated
/// as content columns.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TableOverrides {
    /// file stem -> bracket-stripped headers to keep as content
    pub include_bracketed: BTreeMap<String, Vec<String>>,
}

/// Load all `.tsv` files under `dir` as one tablestore. Files are read in
/// sorted filename order so ingestion is deterministic.
pub fn load_tablestore(
    dir: &Path,
    proc: &TextProcessor,
    overrides: &TableOverrides,
) -> Result<Tablestore> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|e| e == "tsv").unwrap_or(false))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Corpus(format!("no .tsv table files under {}", dir.display())));
    }

    let mut facts: Vec<Fact> = Vec::new();
    let mut origin: HashMap<String, PathBuf> = HashMap::new();
    for file in &files {
        let stem = file
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Corpus(format!("bad table filename {}", file.display())))?;
        let table_type = stem.to_uppercase();
        let keep: HashSet<String> = overrides
            .include_bracketed
            .get(stem)
            .map(|v| v.iter().map(|h| h.to_uppercase()).collect())
            .unwrap_or_default();

        let text = std::fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
        let mut lines = text.lines().enumerate();
        let (_, header_line) = lines
            .next()
            .ok_or_else(|| Error::parse(file, 1, "empty table file"))?;
        let headers: Vec<&str> = header_line.split('\t').collect();

        let mut id_col: Option<usize> = None;
        let mut content_cols: Vec<usize> = Vec::new();
        for (i, raw) in headers.iter().enumerate() {
            let bare = strip_brackets(raw).unwrap_or(raw.trim());
            if bare.eq_ignore_ascii_case("uid") {
                id_col = Some(i);
            } else if !is_bracketed(raw) || keep.contains(&bare.to_uppercase()) {
                content_cols.push(i);
            }
        }
        let id_col =
            id_col.ok_or_else(|| Error::parse(file, 1, "no UID column in table header"))?;

        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split('\t').collect();
            let fact_id = cells
                .get(id_col)
                .map(|c| c.trim())
                .filter(|c| !c.is_empty())
                .ok_or_else(|| Error::parse(file, lineno + 1, "missing fact id"))?
                .to_string();
            let text: String = content_cols
                .iter()
                .filter_map(|&c| cells.get(c))
                .map(|c| c.trim())
                .filter(|c| !c.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            if text.is_empty() {
                return Err(Error::parse(
                    file,
                    lineno + 1,
                    format!("fact `{fact_id}` has empty text"),
                ));
            }
            if let Some(first) = origin.get(&fact_id) {
                return Err(Error::Corpus(format!(
                    "duplicate fact id `{fact_id}` in {} (first seen in {})",
                    file.display(),
                    first.display()
                )));
            }
            origin.insert(fact_id.clone(), file.clone());
            let processed = proc.process(&text);
            facts.push(Fact { fact_id, table_type: table_type.clone(), text, processed });
        }
    }
    Tablestore::from_facts(facts)
}

/// Load one split file, resolving gold entries against the store.
pub fn load_split(path: &Path, store: &Tablestore, proc: &TextProcessor) -> Result<Vec<QaInstance>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() < 3 {
            return Err(Error::parse(path, lineno + 1, "expected at least 3 tab-separated columns"));
        }
        let qa_id = cells[0].trim().to_string();
        let question = cells[1].trim().to_string();
        let correct_answer = cells[2].trim().to_string();
        if qa_id.is_empty() {
            return Err(Error::parse(path, lineno + 1, "empty qa id"));
        }
        if question.is_empty() || correct_answer.is_empty() {
            return Err(Error::parse(
                path,
                lineno + 1,
                format!("qa `{qa_id}` has empty question or answer"),
            ));
        }
        let distractors: Vec<String> = cells
            .get(3)
            .map(|c| {
                c.split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect()
            })
            .unwrap_or_default();
        let gold_field = cells.get(4).map(|c| c.trim()).unwrap_or("");
        let gold = if gold_field.is_empty() {
            None
        } else {
            let mut entries = Vec::new();
            for tok in gold_field.split_whitespace() {
                let (id, role) = tok.split_once('|').ok_or_else(|| {
                    Error::parse(path, lineno + 1, format!("gold entry `{tok}` is not `fact_id|ROLE`"))
                })?;
                if !store.contains(id) {
                    return Err(Error::parse(
                        path,
                        lineno + 1,
                        format!("gold fact `{id}` of qa `{qa_id}` not in tablestore"),
                    ));
                }
                let role = Role::parse(role)
                    .map_err(|e| Error::parse(path, lineno + 1, e.to_string()))?;
                entries.push((id.to_string(), role));
            }
            Some(
                GoldExplanation::new(entries)
                    .map_err(|e| Error::parse(path, lineno + 1, e.to_string()))?,
            )
        };
        let question_proc = proc.process(&question);
        let answer_proc = proc.process(&correct_answer);
        out.push(QaInstance {
            qa_id,
            question,
            correct_answer,
            distractors,
            gold,
            question_proc,
            answer_proc,
        });
    }
    Ok(out)
}

/// Serialize a tablestore back to the directory format (one file per table).
pub fn save_tablestore(store: &Tablestore, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut by_table: BTreeMap<&str, Vec<&Fact>> = BTreeMap::new();
    for f in store.facts() {
        by_table.entry(&f.table_type).or_default().push(f);
    }
    for (table, facts) in by_table {
        let path = dir.join(format!("{}.tsv", table.to_lowercase()));
        let mut w = std::io::BufWriter::new(
            std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?,
        );
        writeln!(w, "[SKIP] UID\tFACT").map_err(|e| Error::io(&path, e))?;
        for f in facts {
            writeln!(w, "{}\t{}", f.fact_id, f.text).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}

/// Serialize instances back to the split TSV format.
pub fn save_split(instances: &[QaInstance], path: &Path) -> Result<()> {
    let mut w =
        std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for qa in instances {
        let choices = qa.distractors.join(";");
        let gold = qa
            .gold
            .as_ref()
            .map(|g| {
                g.entries
                    .iter()
                    .map(|(id, role)| format!("{id}|{role}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .unwrap_or_default();
        writeln!(w, "{}\t{}\t{}\t{}\t{}", qa.qa_id, qa.question, qa.correct_answer, choices, gold)
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Aggregate statistics over instances that all carry gold explanations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusStats {
    pub qa_pairs: usize,
    pub gold_facts_total: usize,
    pub mean_facts_per_qa: f64,
    /// role -> (total facts, mean facts per QA pair)
    pub per_role: BTreeMap<String, (usize, f64)>,
    /// explanation length -> number of QA pairs
    pub length_histogram: BTreeMap<usize, usize>,
    /// (table type, gold occurrences, percentage of all gold occurrences),
    /// sorted by descending share
    pub table_type_usage: Vec<(String, usize, f64)>,
}

pub fn corpus_stats(instances: &[&QaInstance], store: &Tablestore) -> Result<CorpusStats> {
    if instances.is_empty() {
        return Err(Error::Corpus("corpus statistics need at least one instance".into()));
    }
    let mut gold_total = 0usize;
    let mut per_role: BTreeMap<String, usize> = BTreeMap::new();
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    let mut per_table: BTreeMap<String, usize> = BTreeMap::new();
    for qa in instances {
        let gold = qa
            .gold
            .as_ref()
            .ok_or_else(|| Error::Corpus(format!("qa `{}` has no gold explanation", qa.qa_id)))?;
        gold_total += gold.len();
        *hist.entry(gold.len()).or_default() += 1;
        for (id, role) in &gold.entries {
            *per_role.entry(role.token().to_string()).or_default() += 1;
            let table = store
                .get(id)
                .map(|f| f.table_type.clone())
                .ok_or_else(|| Error::Corpus(format!("gold fact `{id}` not in tablestore")))?;
            *per_table.entry(table).or_default() += 1;
        }
    }
    let n = instances.len() as f64;
    let per_role = per_role
        .into_iter()
        .map(|(role, count)| (role, (count, count as f64 / n)))
        .collect();
    let mut table_type_usage: Vec<(String, usize, f64)> = per_table
        .into_iter()
        .map(|(t, c)| (t, c, 100.0 * c as f64 / gold_total as f64))
        .collect();
    table_type_usage.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(CorpusStats {
        qa_pairs: instances.len(),
        gold_facts_total: gold_total,
        mean_facts_per_qa: gold_total as f64 / n,
        per_role,
        length_histogram: hist,
        table_type_usage,
    })
}
