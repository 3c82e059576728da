//! Precomputed external resources consumed as files: concept expansions,
//! open-relation triples, and per-triple text embeddings.
//!
//! Formats:
//! - concepts: TSV rows `term<TAB>rank<TAB>concept` (rank is a 1-based
//!   integer, most precise first) and `term<TAB>REL<TAB>Relation_object`.
//! - triples: TSV `sentence_key<TAB>subject<TAB>predicate<TAB>object` with
//!   space-separated lemmas in subject/object. Keys follow the `q:{qa_id}`,
//!   `ca:{qa_id}`, `f:{fact_id}` scheme.
//! - embeddings: binary (magic `FREB`, version, count, dim, then
//!   length-prefixed key + dim little-endian f32) or a TSV fixture form
//!   `qa_id<TAB>fact_id<TAB>space-separated floats`.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufWriter, Read, Write};
use std::path::Path;

use crate::binio;
use crate::error::{Error, Result};

pub const EMBED_DIM: usize = 768;

/// term -> ordered conceptualizations (file order preserved) plus
/// relation-tagged facts such as `IsA_beverage`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConceptResource {
    entries: BTreeMap<String, ConceptEntry>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConceptEntry {
    pub concepts: Vec<String>,
    pub relations: Vec<String>,
}

impl ConceptResource {
    pub fn load(path: &Path) -> Result<ConceptResource> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = std::io::BufReader::new(file);
        // Concept rows may arrive out of order; order within a term follows
        // the rank column.
        let mut ranked: BTreeMap<String, Vec<(u32, String)>> = BTreeMap::new();
        let mut relations: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split('\t').collect();
            if cells.len() != 3 {
                return Err(Error::parse(path, lineno + 1, "expected 3 tab-separated columns"));
            }
            let term = cells[0].trim();
            if term.is_empty() {
                return Err(Error::parse(path, lineno + 1, "empty term"));
            }
            if cells[1].trim() == "REL" {
                relations.entry(term.to_string()).or_default().push(cells[2].trim().to_string());
            } else {
                let rank: u32 = cells[1].trim().parse().map_err(|_| {
                    Error::parse(path, lineno + 1, format!("bad concept rank `{}`", cells[1]))
                })?;
                ranked.entry(term.to_string()).or_default().push((rank, cells[2].trim().to_string()));
            }
        }
        let mut entries: BTreeMap<String, ConceptEntry> = BTreeMap::new();
        for (term, mut concepts) in ranked {
            concepts.sort_by_key(|&(r, _)| r);
            entries.entry(term).or_default().concepts = concepts.into_iter().map(|(_, c)| c).collect();
        }
        for (term, rels) in relations {
            entries.entry(term).or_default().relations = rels;
        }
        Ok(ConceptResource { entries })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
        for (term, entry) in &self.entries {
            for (i, concept) in entry.concepts.iter().enumerate() {
                writeln!(w, "{}\t{}\t{}", term, i + 1, concept).map_err(|e| Error::io(path, e))?;
            }
            for rel in &entry.relations {
                writeln!(w, "{term}\tREL\t{rel}").map_err(|e| Error::io(path, e))?;
            }
        }
        Ok(())
    }

    pub fn get(&self, term: &str) -> Option<&ConceptEntry> {
        self.entries.get(term)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One open-relation triple in lemma form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationTriple {
    pub subject: Vec<String>,
    pub predicate: String,
    pub object: Vec<String>,
}

/// sentence key -> extracted relation triples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TripleResource {
    entries: BTreeMap<String, Vec<RelationTriple>>,
}

pub fn question_key(qa_id: &str) -> String {
    format!("q:{qa_id}")
}

pub fn answer_key(qa_id: &str) -> String {
    format!("ca:{qa_id}")
}

pub fn fact_key(fact_id: &str) -> String {
    format!("f:{fact_id}")
}

impl TripleResource {
    pub fn load(path: &Path) -> Result<TripleResource> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = std::io::BufReader::new(file);
        let mut entries: BTreeMap<String, Vec<RelationTriple>> = BTreeMap::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split('\t').collect();
            if cells.len() != 4 {
                return Err(Error::parse(path, lineno + 1, "expected 4 tab-separated columns"));
            }
            let split = |s: &str| -> Vec<String> {
                s.split_whitespace().map(str::to_string).collect()
            };
            entries.entry(cells[0].trim().to_string()).or_default().push(RelationTriple {
                subject: split(cells[1]),
                predicate: cells[2].trim().to_string(),
                object: split(cells[3]),
            });
        }
        Ok(TripleResource { entries })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
        for (key, triples) in &self.entries {
            for t in triples {
                writeln!(w, "{}\t{}\t{}\t{}", key, t.subject.join(" "), t.predicate, t.object.join(" "))
                    .map_err(|e| Error::io(path, e))?;
            }
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&[RelationTriple]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// (qa_id, fact_id) -> fixed-width embedding vector. Keys are stored as
/// `qa_id<TAB>fact_id`; per-sentence keys (`q:{qa_id}`, ...) are also legal
/// for the split-embedding configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingResource {
    vectors: HashMap<String, Vec<f32>>,
}

fn pair_key(qa_id: &str, fact_id: &str) -> String {
    format!("{qa_id}\t{fact_id}")
}

const EMBED_MAGIC: &[u8; 4] = b"FREB";
const EMBED_VERSION: u16 = 1;

impl EmbeddingResource {
    pub fn insert_pair(&mut self, qa_id: &str, fact_id: &str, vector: Vec<f32>) -> Result<()> {
        self.insert_key(pair_key(qa_id, fact_id), vector)
    }

    pub fn insert_key(&mut self, key: String, vector: Vec<f32>) -> Result<()> {
        if vector.len() != EMBED_DIM {
            return Err(Error::Resource(format!(
                "embedding for `{key}` has {} dimensions, expected {EMBED_DIM}",
                vector.len()
            )));
        }
        self.vectors.insert(key, vector);
        Ok(())
    }

    pub fn get_pair(&self, qa_id: &str, fact_id: &str) -> Option<&[f32]> {
        self.vectors.get(&pair_key(qa_id, fact_id)).map(Vec::as_slice)
    }

    pub fn get_key(&self, key: &str) -> Option<&[f32]> {
        self.vectors.get(key).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn load_binary(path: &Path) -> Result<EmbeddingResource> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = std::io::BufReader::new(file);
        binio::expect_magic(&mut r, EMBED_MAGIC, path)?;
        let version = binio::read_u16(&mut r, path)?;
        if version != EMBED_VERSION {
            return Err(Error::Format {
                path: path.to_path_buf(),
                msg: format!("unsupported embedding file version {version}"),
            });
        }
        let count = binio::read_u64(&mut r, path)? as usize;
        let dim = binio::read_u32(&mut r, path)? as usize;
        if dim != EMBED_DIM {
            return Err(Error::Format {
                path: path.to_path_buf(),
                msg: format!("embedding dimension {dim}, expected {EMBED_DIM}"),
            });
        }
        let mut vectors = HashMap::with_capacity(count);
        for _ in 0..count {
            let key = binio::read_str(&mut r, path)?;
            let mut buf = vec![0u8; EMBED_DIM * 4];
            r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
            let vector: Vec<f32> = buf
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            vectors.insert(key, vector);
        }
        Ok(EmbeddingResource { vectors })
    }

    pub fn save_binary(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(EMBED_MAGIC).map_err(|e| Error::io(path, e))?;
        binio::write_u16(&mut w, EMBED_VERSION, path)?;
        binio::write_u64(&mut w, self.vectors.len() as u64, path)?;
        binio::write_u32(&mut w, EMBED_DIM as u32, path)?;
        let mut keys: Vec<&String> = self.vectors.keys().collect();
        keys.sort();
        for key in keys {
            binio::write_str(&mut w, key, path)?;
            for &v in &self.vectors[key] {
                binio::write_f32(&mut w, v, path)?;
            }
        }
        Ok(())
    }

    /// TSV fixture form: `qa_id<TAB>fact_id<TAB>v1 v2 ... vEMBED_DIM`.
    pub fn load_tsv(path: &Path) -> Result<EmbeddingResource> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = std::io::BufReader::new(file);
        let mut out = EmbeddingResource::default();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split('\t').collect();
            if cells.len() != 3 {
                return Err(Error::parse(path, lineno + 1, "expected 3 tab-separated columns"));
            }
            let vector: Vec<f32> = cells[2]
                .split_whitespace()
                .map(|v| v.parse::<f32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(path, lineno + 1, "bad float in embedding vector"))?;
            if vector.len() != EMBED_DIM {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    format!("embedding has {} dimensions, expected {EMBED_DIM}", vector.len()),
                ));
            }
            out.insert_pair(cells[0].trim(), cells[1].trim(), vector)?;
        }
        Ok(out)
    }

    /// Pick the loader by extension: `.tsv` fixtures, binary otherwise.
    pub fn load(path: &Path) -> Result<EmbeddingResource> {
        if path.extension().map(|e| e == "tsv").unwrap_or(false) {
            Self::load_tsv(path)
        } else {
            Self::load_binary(path)
        }
    }
}
