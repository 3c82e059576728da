//! Versioned binary bundle of the validated corpus: tablestore, splits, and
//! processed text. Re-running ingestion over unchanged inputs produces
//! byte-identical bundles.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::binio;
use crate::corpus::{Fact, GoldExplanation, QaInstance, Role, SplitSet, Tablestore};
use crate::error::{Error, Result};
use crate::textproc::ProcessedText;

const BUNDLE_MAGIC: &[u8; 4] = b"FRBD";
const BUNDLE_VERSION: u16 = 1;

#[derive(Debug)]
pub struct CorpusBundle {
    pub store: Tablestore,
    pub splits: SplitSet,
}

fn write_processed<W: Write>(w: &mut W, p: &ProcessedText, path: &Path) -> Result<()> {
    binio::write_u32(w, p.tokens.len() as u32, path)?;
    for ((token, lemma), &mask) in p.tokens.iter().zip(&p.lemmas).zip(&p.content_mask) {
        binio::write_str(w, token, path)?;
        binio::write_str(w, lemma, path)?;
        binio::write_u8(w, u8::from(mask), path)?;
    }
    Ok(())
}

fn read_processed<R: Read>(r: &mut R, path: &Path) -> Result<ProcessedText> {
    let len = binio::read_u32(r, path)? as usize;
    let mut tokens = Vec::with_capacity(len);
    let mut lemmas = Vec::with_capacity(len);
    let mut content_mask = Vec::with_capacity(len);
    for _ in 0..len {
        tokens.push(binio::read_str(r, path)?);
        lemmas.push(binio::read_str(r, path)?);
        content_mask.push(binio::read_u8(r, path)? != 0);
    }
    Ok(ProcessedText { tokens, lemmas, content_mask })
}

fn role_byte(role: Role) -> u8 {
    match role {
        Role::Central => 0,
        Role::Grounding => 1,
        Role::LexicalGlue => 2,
    }
}

fn byte_role(b: u8, path: &Path) -> Result<Role> {
    match b {
        0 => Ok(Role::Central),
        1 => Ok(Role::Grounding),
        2 => Ok(Role::LexicalGlue),
        other => Err(Error::Format {
            path: path.to_path_buf(),
            msg: format!("unknown role byte {other}"),
        }),
    }
}

fn write_instance<W: Write>(w: &mut W, qa: &QaInstance, path: &Path) -> Result<()> {
    binio::write_str(w, &qa.qa_id, path)?;
    binio::write_str(w, &qa.question, path)?;
    binio::write_str(w, &qa.correct_answer, path)?;
    binio::write_u32(w, qa.distractors.len() as u32, path)?;
    for d in &qa.distractors {
        binio::write_str(w, d, path)?;
    }
    match &qa.gold {
        None => binio::write_u32(w, 0, path)?,
        Some(gold) => {
            binio::write_u32(w, gold.entries.len() as u32, path)?;
            for (id, role) in &gold.entries {
                binio::write_str(w, id, path)?;
                binio::write_u8(w, role_byte(*role), path)?;
            }
        }
    }
    write_processed(w, &qa.question_proc, path)?;
    write_processed(w, &qa.answer_proc, path)
}

fn read_instance<R: Read>(r: &mut R, path: &Path) -> Result<QaInstance> {
    let qa_id = binio::read_str(r, path)?;
    let question = binio::read_str(r, path)?;
    let correct_answer = binio::read_str(r, path)?;
    let n_distractors = binio::read_u32(r, path)? as usize;
    let mut distractors = Vec::with_capacity(n_distractors);
    for _ in 0..n_distractors {
        distractors.push(binio::read_str(r, path)?);
    }
    let n_gold = binio::read_u32(r, path)? as usize;
    let gold = if n_gold == 0 {
        None
    } else {
        let mut entries = Vec::with_capacity(n_gold);
        for _ in 0..n_gold {
            let id = binio::read_str(r, path)?;
            let role = byte_role(binio::read_u8(r, path)?, path)?;
            entries.push((id, role));
        }
        Some(GoldExplanation::new(entries).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?)
    };
    let question_proc = read_processed(r, path)?;
    let answer_proc = read_processed(r, path)?;
    Ok(QaInstance { qa_id, question, correct_answer, distractors, gold, question_proc, answer_proc })
}

pub fn save(bundle: &CorpusBundle, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(BUNDLE_MAGIC).map_err(|e| Error::io(path, e))?;
    binio::write_u16(&mut w, BUNDLE_VERSION, path)?;

    binio::write_u64(&mut w, bundle.store.len() as u64, path)?;
    for fact in bundle.store.facts() {
        binio::write_str(&mut w, &fact.fact_id, path)?;
        binio::write_str(&mut w, &fact.table_type, path)?;
        binio::write_str(&mut w, &fact.text, path)?;
        write_processed(&mut w, &fact.processed, path)?;
    }
    for split in [&bundle.splits.train, &bundle.splits.dev, &bundle.splits.test] {
        binio::write_u64(&mut w, split.len() as u64, path)?;
        for qa in split {
            write_instance(&mut w, qa, path)?;
        }
    }
    Ok(())
}

pub fn load(path: &Path) -> Result<CorpusBundle> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    binio::expect_magic(&mut r, BUNDLE_MAGIC, path)?;
    let version = binio::read_u16(&mut r, path)?;
    if version != BUNDLE_VERSION {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: format!("unsupported bundle version {version}"),
        });
    }
    let n_facts = binio::read_u64(&mut r, path)? as usize;
    let mut facts = Vec::with_capacity(n_facts);
    for _ in 0..n_facts {
        let fact_id = binio::read_str(&mut r, path)?;
        let table_type = binio::read_str(&mut r, path)?;
        let text = binio::read_str(&mut r, path)?;
        let processed = read_processed(&mut r, path)?;
        facts.push(Fact { fact_id, table_type, text, processed });
    }
    let store = Tablestore::from_facts(facts)?;

    let mut splits: [Vec<QaInstance>; 3] = Default::default();
    for part in &mut splits {
        let n = binio::read_u64(&mut r, path)? as usize;
        let mut list = Vec::with_capacity(n);
        for _ in 0..n {
            let qa = read_instance(&mut r, path)?;
            if let Some(gold) = &qa.gold {
                for id in gold.fact_ids() {
                    if !store.contains(id) {
                        return Err(Error::Format {
                            path: path.to_path_buf(),
                            msg: format!("gold fact `{id}` of qa `{}` not in tablestore", qa.qa_id),
                        });
                    }
                }
            }
            list.push(qa);
        }
        *part = list;
    }
    let [train, dev, test] = splits;
    let splits = SplitSet { train, dev, test };
    splits.validate()?;
    Ok(CorpusBundle { store, splits })
}
