//! Lexical database, stopwords, text normalization and sense candidates.
//!
//! Normalization pipeline: lowercase, split on non-alphanumeric runs, drop
//! stopwords, Porter-stem, drop stems that are stopwords, deduplicate keeping
//! the first occurrence.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stem::stable_stem;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    pub fn new<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = HashSet::new();
        for w in words {
            let w = w.as_ref().trim().to_lowercase();
            if w.is_empty() {
                continue;
            }
            if w.chars().any(char::is_whitespace) {
                return Err(Error::validation(format!("stopword {w:?} contains whitespace")));
            }
            set.insert(w);
        }
        if set.is_empty() {
            return Err(Error::validation("stopword list is empty"));
        }
        Ok(Self { words: set })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
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

pub fn load_stopwords(path: impl AsRef<Path>) -> Result<StopwordList> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::load(path, e))?;
    StopwordList::parse(&text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sense {
    pub lemma: String,
    pub sense_id: String,
    pub gloss: String,
    pub synonyms: Vec<String>,
}

/// Lemma → senses in file order. Lookup is case-insensitive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<Sense>>,
    // normalized keyword -> lemma, for lemmas whose stem differs from the surface form
    by_stem: BTreeMap<String, String>,
}

impl Lexicon {
    /// Parse the tab-separated format `lemma\tsense_id\tgloss\tsyn1,syn2,...`.
    /// Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, Vec<Sense>> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            if fields.len() != 4 && fields.len() != 3 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 4 tab-separated fields, found {}", fields.len()),
                });
            }
            let lemma = fields[0].trim().to_lowercase();
            let sense_id = fields[1].trim().to_string();
            let gloss = fields[2].trim().to_string();
            if lemma.is_empty() {
                return Err(Error::Parse { line, message: "empty lemma".into() });
            }
            if sense_id.is_empty() {
                return Err(Error::Parse { line, message: "empty sense id".into() });
            }
            if gloss.is_empty() {
                return Err(Error::Parse { line, message: "missing gloss".into() });
            }
            let synonyms = fields
                .get(3)
                .map(|s| {
                    s.split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(String::from)
                        .collect()
                })
                .unwrap_or_default();
            let senses = entries.entry(lemma.clone()).or_default();
            if senses.iter().any(|s| s.sense_id == sense_id) {
                return Err(Error::validation(format!(
                    "duplicate sense id {sense_id:?} for lemma {lemma:?} (line {line})"
                )));
            }
            senses.push(Sense { lemma, sense_id, gloss, synonyms });
        }
        let mut by_stem = BTreeMap::new();
        for lemma in entries.keys() {
            if let [stem] = stem_tokens(lemma).as_slice() {
                if stem != lemma {
                    by_stem.entry(stem.clone()).or_insert_with(|| lemma.clone());
                }
            }
        }
        Ok(Self { entries, by_stem })
    }

    pub fn senses(&self, lemma: &str) -> &[Sense] {
        self.entries
            .get(&lemma.to_lowercase())
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn lemma_count(&self) -> usize {
        self.entries.len()
    }

    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Find the senses for a normalized keyword. Lemmas are stored in surface
    /// form, so a keyword also matches any lemma that normalizes to it.
    fn senses_for_keyword(&self, keyword: &str) -> &[Sense] {
        let direct = self.senses(keyword);
        if !direct.is_empty() {
            return direct;
        }
        self.by_stem
            .get(keyword)
            .map(|lemma| self.senses(lemma))
            .unwrap_or(&[])
    }
}

pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::load(path, e))?;
    Lexicon::parse(&text)
}

/// One filtered sense of a query keyword.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisambiguatedTerm {
    pub keyword: String,
    pub sense_id: String,
    pub words: Vec<String>,
    #[serde(default)]
    pub score: f64,
}

fn raw_tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty())
}

/// Lowercase, split, drop stopwords, stem and deduplicate.
pub fn normalize_text(text: &str, stopwords: &StopwordList) -> Vec<String> {
    let mut seen = HashSet::new();
    analyze_text(text, stopwords)
        .into_iter()
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

/// [`normalize_text`] without deduplication, for term-frequency counting.
pub fn analyze_text(text: &str, stopwords: &StopwordList) -> Vec<String> {
    let lower = text.to_lowercase();
    raw_tokens(&lower)
        .filter(|t| !stopwords.contains(t))
        .map(stable_stem)
        .filter(|s| !stopwords.contains(s))
        .collect()
}

/// Lowercase, split and stem without stopword filtering or deduplication.
/// Used for identifiers and ontology terms that are matched against
/// normalized text.
pub fn stem_tokens(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    raw_tokens(&lower).map(stable_stem).collect()
}

/// Sense candidates for each (already normalized) query keyword.
///
/// Each sense's words are the normalized gloss and synonyms minus every query
/// keyword; senses left with no words are dropped.
pub fn candidate_disambiguations(
    lexicon: &Lexicon,
    query_keywords: &[String],
    stopwords: &StopwordList,
) -> BTreeMap<String, Vec<DisambiguatedTerm>> {
    let query: HashSet<&str> = query_keywords.iter().map(String::as_str).collect();
    let mut out = BTreeMap::new();
    for keyword in query_keywords {
        let candidates = lexicon
            .senses_for_keyword(keyword)
            .iter()
            .filter_map(|sense| {
                let mut text = sense.gloss.clone();
                for syn in &sense.synonyms {
                    text.push(' ');
                    text.push_str(syn);
                }
                let words: Vec<String> = normalize_text(&text, stopwords)
                    .into_iter()
                    .filter(|w| !query.contains(w.as_str()))
                    .collect();
                (!words.is_empty()).then(|| DisambiguatedTerm {
                    keyword: keyword.clone(),
                    sense_id: sense.sense_id.clone(),
                    words,
                    score: 0.0,
                })
            })
            .collect();
        out.insert(keyword.clone(), candidates);
    }
    out
}
