//! Deterministic text processing: tokenization, lexicon+rules lemmatization,
//! stopword masking, affix generation and positional zoning.
//!
//! Everything here is a pure function of the input and the loaded word lists,
//! so processed text is reproducible without any external NLP service.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");
const DEFAULT_LEMMAS: &str = include_str!("../data/lemmas.tsv");
const DEFAULT_VERBS: &str = include_str!("../data/verbs.txt");

/// A tokenized sentence with parallel lemma and content-word arrays.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessedText {
    pub tokens: Vec<String>,
    pub lemmas: Vec<String>,
    /// False exactly where the surface token is a stopword.
    pub content_mask: Vec<bool>,
}

impl ProcessedText {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn content_lemmas(&self) -> impl Iterator<Item = &str> {
        self.lemmas
            .iter()
            .zip(&self.content_mask)
            .filter(|(_, &keep)| keep)
            .map(|(l, _)| l.as_str())
    }

    pub fn content_tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens
            .iter()
            .zip(&self.content_mask)
            .filter(|(_, &keep)| keep)
            .map(|(t, _)| t.as_str())
    }
}

/// Position class of a token within its sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Zone {
    First,
    Middle,
    Last,
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Zone::First => write!(f, "first"),
            Zone::Middle => write!(f, "middle"),
            Zone::Last => write!(f, "last"),
        }
    }
}

/// Zone of a 0-based token position: the middle window has width
/// ceil(length/4) and starts at floor(length/2) - floor(width/2); positions
/// left of it are First, right of it Last.
pub fn zone_of(index: usize, length: usize) -> Result<Zone> {
    if index >= length {
        return Err(Error::Corpus(format!(
            "token position {index} out of range for length {length}"
        )));
    }
    let width = length.div_ceil(4);
    let center = length / 2;
    let start = center.saturating_sub(width / 2);
    Ok(if index < start {
        Zone::First
    } else if index < start + width {
        Zone::Middle
    } else {
        Zone::Last
    })
}

/// Lowercase, split on whitespace, strip surrounding punctuation; intra-word
/// hyphens survive ("well-known" stays one token).
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let lowered = raw.to_lowercase();
            let mut trimmed = lowered.trim_matches(|c: char| !c.is_alphanumeric());
            // possessive forms match their bare noun
            for poss in ["'s", "\u{2019}s"] {
                if let Some(stem) = trimmed.strip_suffix(poss) {
                    trimmed = stem;
                }
            }
            let trimmed = trimmed.trim_matches(|c: char| !c.is_alphanumeric());
            if trimmed.is_empty() {
                None
            } else {
                Some(trimmed.to_string())
            }
        })
        .collect()
}

/// Tagged prefix/suffix n-grams of a lemma for n in {5, 4, 3}.
pub fn affixes(lemma: &str) -> HashSet<String> {
    let chars: Vec<char> = lemma.chars().collect();
    let mut out = HashSet::new();
    for n in [5usize, 4, 3] {
        if chars.len() >= n {
            let pre: String = chars[..n].iter().collect();
            let suf: String = chars[chars.len() - n..].iter().collect();
            out.insert(format!("pre{n}={pre}"));
            out.insert(format!("suf{n}={suf}"));
        }
    }
    out
}

/// Lexicon-first lemmatizer with plural/-ing/-ed rule fallback.
pub struct Lemmatizer {
    lexicon: HashMap<String, String>,
}

impl Lemmatizer {
    pub fn from_default() -> Self {
        Self::from_str_table(DEFAULT_LEMMAS).expect("embedded lemma table is well-formed")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_str_table(&text)
    }

    fn from_str_table(text: &str) -> Result<Self> {
        let mut lexicon = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            match (parts.next(), parts.next()) {
                (Some(infl), Some(lemma)) => {
                    lexicon.insert(infl.to_string(), lemma.to_string());
                }
                _ => {
                    return Err(Error::Corpus(format!(
                        "lemma table line {} is not `inflected<TAB>lemma`",
                        lineno + 1
                    )))
                }
            }
        }
        Ok(Lemmatizer { lexicon })
    }

    /// Total and idempotent: lexicon lookup first, one suffix rule otherwise,
    /// repeated to a fixed point, identity when nothing applies.
    pub fn lemmatize(&self, token: &str) -> String {
        let mut cur = token.to_string();
        for _ in 0..8 {
            if let Some(lemma) = self.lexicon.get(&cur) {
                if *lemma == cur {
                    return cur;
                }
                cur = lemma.clone();
                continue;
            }
            match apply_suffix_rule(&cur) {
                Some(next) if next != cur => cur = next,
                _ => break,
            }
        }
        cur
    }
}

fn has_vowel(s: &str) -> bool {
    s.chars().any(|c| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y'))
}

/// Undouble a trailing geminate consonant unless it is l, s or z
/// ("running" -> "run" but "falling" -> "fall").
fn undouble(stem: &str) -> String {
    let chars: Vec<char> = stem.chars().collect();
    if chars.len() >= 2 {
        let last = chars[chars.len() - 1];
        if last == chars[chars.len() - 2]
            && last.is_alphabetic()
            && !matches!(last, 'a' | 'e' | 'i' | 'o' | 'u' | 'l' | 's' | 'z')
        {
            return chars[..chars.len() - 1].iter().collect();
        }
    }
    stem.to_string()
}

fn apply_suffix_rule(word: &str) -> Option<String> {
    let n = word.chars().count();
    if let Some(stem) = word.strip_suffix("ies") {
        if n >= 5 {
            return Some(format!("{stem}y"));
        }
    }
    for es in ["sses", "shes", "ches", "xes", "zes"] {
        if word.ends_with(es) && n > es.len() {
            return Some(word[..word.len() - 2].to_string());
        }
    }
    if let Some(stem) = word.strip_suffix('s') {
        if !word.ends_with("ss")
            && !word.ends_with("us")
            && !word.ends_with("is")
            && stem.chars().count() >= 3
        {
            return Some(stem.to_string());
        }
    }
    if let Some(stem) = word.strip_suffix("ing") {
        if stem.chars().count() >= 3 && has_vowel(stem) {
            return Some(undouble(stem));
        }
    }
    if let Some(stem) = word.strip_suffix("ed") {
        if stem.chars().count() >= 3 && has_vowel(stem) {
            return Some(undouble(stem));
        }
    }
    None
}

/// One-entry-per-line word set (stopwords, verb lexicon).
#[derive(Debug, Clone)]
pub struct WordList {
    words: HashSet<String>,
}

impl WordList {
    pub fn from_lines(text: &str) -> Self {
        WordList {
            words: text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_lines(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Tokenizer + lemmatizer + stopword list bundled as one processing unit.
pub struct TextProcessor {
    lemmatizer: Lemmatizer,
    stopwords: WordList,
    verbs: WordList,
}

impl TextProcessor {
    pub fn with_defaults() -> Self {
        TextProcessor {
            lemmatizer: Lemmatizer::from_default(),
            stopwords: WordList::from_lines(DEFAULT_STOPWORDS),
            verbs: WordList::from_lines(DEFAULT_VERBS),
        }
    }

    pub fn new(lemmatizer: Lemmatizer, stopwords: WordList, verbs: WordList) -> Self {
        TextProcessor { lemmatizer, stopwords, verbs }
    }

    pub fn process(&self, text: &str) -> ProcessedText {
        let tokens = tokenize(text);
        let lemmas: Vec<String> = tokens.iter().map(|t| self.lemmatizer.lemmatize(t)).collect();
        let content_mask: Vec<bool> = tokens.iter().map(|t| !self.stopwords.contains(t)).collect();
        ProcessedText { tokens, lemmas, content_mask }
    }

    pub fn lemmatize(&self, token: &str) -> String {
        self.lemmatizer.lemmatize(token)
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    pub fn is_verb_lemma(&self, lemma: &str) -> bool {
        self.verbs.contains(lemma)
    }

    pub fn verbs(&self) -> &WordList {
        &self.verbs
    }

    pub fn stopwords(&self) -> &WordList {
        &self.stopwords
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_splits_and_strips_punctuation() {
        assert_eq!(
            tokenize("Granite is a hard material."),
            vec!["granite", "is", "a", "hard", "material"]
        );
        assert_eq!(tokenize(""), Vec::<String>::new());
        assert_eq!(tokenize("water vapor (gas)"), vec!["water", "vapor", "gas"]);
        assert_eq!(tokenize("well-known  fact!"), vec!["well-known", "fact"]);
        assert_eq!(tokenize("the Earth's surface"), vec!["the", "earth", "surface"]);
    }

    #[test]
    fn lemmatize_rules_and_lexicon() {
        let lem = Lemmatizer::from_default();
        assert_eq!(lem.lemmatize("rocks"), "rock");
        assert_eq!(lem.lemmatize("is"), "be");
        assert_eq!(lem.lemmatize("granite"), "granite");
        assert_eq!(lem.lemmatize("running"), "run");
        assert_eq!(lem.lemmatize("falling"), "fall");
        assert_eq!(lem.lemmatize("stopped"), "stop");
        assert_eq!(lem.lemmatize("babies"), "baby");
        assert_eq!(lem.lemmatize("classes"), "class");
        assert_eq!(lem.lemmatize("meanings"), "mean");
        assert_eq!(lem.lemmatize("gas"), "gas");
        assert_eq!(lem.lemmatize("leaves"), "leaf");
    }

    #[test]
    fn lexicon_targets_are_fixed_points() {
        let lem = Lemmatizer::from_default();
        for target in lem.lexicon.values() {
            assert_eq!(
                &lem.lemmatize(target),
                target,
                "lexicon target {target} is not a lemmatizer fixed point"
            );
        }
    }

    #[test]
    fn affixes_by_length() {
        let a = affixes("photosynthesis");
        assert!(a.contains("pre3=pho"));
        assert!(a.contains("suf5=hesis"));
        assert_eq!(a.len(), 6);

        let s = affixes("sun");
        assert_eq!(s, ["pre3=sun", "suf3=sun"].iter().map(|x| x.to_string()).collect());

        assert!(affixes("at").is_empty());
    }

    #[test]
    fn zone_examples() {
        assert_eq!(zone_of(0, 8).unwrap(), Zone::First);
        assert_eq!(zone_of(4, 8).unwrap(), Zone::Middle);
        assert_eq!(zone_of(7, 8).unwrap(), Zone::Last);
        assert!(zone_of(8, 8).is_err());
    }

    #[test]
    fn process_masks_only_listed_stopwords() {
        let proc = TextProcessor::with_defaults();
        let p = proc.process("Granite is a hard material.");
        assert_eq!(p.tokens.len(), p.lemmas.len());
        assert_eq!(p.tokens.len(), p.content_mask.len());
        for (tok, &keep) in p.tokens.iter().zip(&p.content_mask) {
            assert_eq!(!keep, proc.is_stopword(tok));
        }
        assert_eq!(p.content_lemmas().collect::<Vec<_>>(), vec!["granite", "hard", "material"]);
    }
}
