//! Nearest-neighbor recommendation of senses, meta keywords and concepts.
//!
//! Store entries are matched in two steps: an inverted index over entry terms
//! selects the entries that share at least one term with the query, then
//! exact cosine is computed for those candidates only. Entries outside the
//! candidate set have cosine exactly zero, so the result is the same as a full
//! scan.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::behavior::MetaKeyword;
use crate::error::{Error, Result};
use crate::lexicon::{stem_tokens, DisambiguatedTerm};
use crate::profile::{entry_vector, EntryStore, PersonalProfile, SharedKnowledgeBase};
use crate::vector::{cosine, TermVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Personal,
    Shared,
    LexiconOrder,
    Ontology,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate<T> {
    pub id: String,
    pub item: T,
    pub score: f64,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecommenderConfig {
    /// Multiplier on the best SCKB match before it competes with the best
    /// personal match.
    pub shared_weight: f64,
    pub meta_keyword_limit: usize,
    pub sense_k: usize,
    pub concept_k: usize,
}

impl Default for RecommenderConfig {
    fn default() -> Self {
        Self {
            shared_weight: 1.0,
            meta_keyword_limit: 5,
            sense_k: 5,
            concept_k: 5,
        }
    }
}

/// One scored entry: the dot product with the query and the entry's squared
/// norm, which together order candidates without rounding for integral
/// weights.
#[derive(Debug, Clone, Copy)]
struct Match {
    pos: usize,
    dot: f64,
    norm2: f64,
}

impl Match {
    /// `a` before `b` when `a` is more similar; cos² compared by
    /// cross-multiplication so equal ratios compare equal.
    fn cmp_similarity(a: &Match, b: &Match) -> Ordering {
        let lhs = a.dot * a.dot * b.norm2;
        let rhs = b.dot * b.dot * a.norm2;
        rhs.partial_cmp(&lhs).unwrap_or(Ordering::Equal)
    }
}

/// Inverted index over a fixed set of `(id, vector)` entries.
#[derive(Debug, Clone, Default)]
pub struct EntryIndex {
    ids: Vec<u64>,
    vectors: Vec<TermVector>,
    norm2: Vec<f64>,
    postings: HashMap<String, Vec<usize>>,
}

impl EntryIndex {
    pub fn build(entries: impl IntoIterator<Item = (u64, TermVector)>) -> Self {
        let mut idx = EntryIndex::default();
        for (pos, (id, v)) in entries.into_iter().enumerate() {
            for term in v.terms() {
                idx.postings.entry(term.to_string()).or_default().push(pos);
            }
            idx.ids.push(id);
            idx.norm2.push(v.iter().map(|(_, w)| w * w).sum());
            idx.vectors.push(v);
        }
        idx
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Entries sharing at least one term with `query`.
    fn candidates(&self, query: &TermVector) -> Vec<usize> {
        let mut seen = vec![false; self.ids.len()];
        let mut out = Vec::new();
        for term in query.terms() {
            for &pos in self.postings.get(term).map(Vec::as_slice).unwrap_or(&[]) {
                if !seen[pos] {
                    seen[pos] = true;
                    out.push(pos);
                }
            }
        }
        out
    }

    /// Top `k` entries by cosine, ties by ascending id; zero scores excluded.
    pub fn top_k(&self, query: &TermVector, k: usize) -> Vec<(u64, f64)> {
        if k == 0 || query.is_empty() {
            return Vec::new();
        }
        let q_norm2: f64 = query.iter().map(|(_, w)| w * w).sum();
        let mut matches: Vec<Match> = self
            .candidates(query)
            .into_iter()
            .map(|pos| Match {
                pos,
                dot: query.dot(&self.vectors[pos]),
                norm2: self.norm2[pos],
            })
            .filter(|m| m.dot > 0.0)
            .collect();
        matches.sort_by(|a, b| {
            Match::cmp_similarity(a, b).then_with(|| self.ids[a.pos].cmp(&self.ids[b.pos]))
        });
        matches
            .into_iter()
            .take(k)
            .map(|m| {
                let score = (m.dot / (q_norm2.sqrt() * m.norm2.sqrt())).clamp(0.0, 1.0);
                (self.ids[m.pos], score)
            })
            .collect()
    }

    /// Best cosine against any entry, 0 if none overlaps.
    pub fn best(&self, query: &TermVector) -> f64 {
        self.top_k(query, 1).first().map_or(0.0, |&(_, s)| s)
    }
}

/// Recommendation scores are kept to 12 decimals so that equal similarities
/// reached through different float paths tie exactly and fall back to the
/// documented order.
fn rank_score(score: f64) -> f64 {
    (score * 1e12).round() / 1e12
}

/// Two-step nearest neighbor over `(id, vector)` pairs. Returns at most `k`
/// `(id, score)` pairs, score descending then id ascending, zero scores
/// excluded.
pub fn nn_two_step(query: &TermVector, entries: &[(u64, TermVector)], k: usize) -> Vec<(u64, f64)> {
    EntryIndex::build(entries.iter().cloned()).top_k(query, k)
}

fn store_index<S: EntryStore + ?Sized>(store: &S) -> EntryIndex {
    EntryIndex::build(
        store
            .entries()
            .iter()
            .enumerate()
            .map(|(i, e)| (i as u64, entry_vector(e))),
    )
}

/// Ranks each keyword's sense candidates against the personal profile and,
/// when given, the SCKB.
///
/// A sense's score is `max(personal_best, shared_weight * shared_best)`
/// clamped to 1, where each best is the highest cosine between the sense's
/// words and any entry vector. Senses that match nothing keep lexicon order
/// after the scored ones.
pub fn recommend_senses(
    query_keywords: &[String],
    candidates: &BTreeMap<String, Vec<DisambiguatedTerm>>,
    profile: &PersonalProfile,
    sckb: Option<&SharedKnowledgeBase>,
    cfg: &RecommenderConfig,
) -> BTreeMap<String, Vec<ScoredCandidate<DisambiguatedTerm>>> {
    let personal = store_index(profile);
    let shared = sckb.map(store_index);
    let mut out = BTreeMap::new();
    for keyword in query_keywords {
        let Some(senses) = candidates.get(keyword) else {
            out.insert(keyword.clone(), Vec::new());
            continue;
        };
        let mut scored: Vec<ScoredCandidate<DisambiguatedTerm>> = senses
            .iter()
            .map(|sense| {
                let v = TermVector::from_terms(&sense.words);
                let p = rank_score(personal.best(&v));
                let s = rank_score(shared.as_ref().map_or(0.0, |idx| idx.best(&v) * cfg.shared_weight));
                let (score, source) = if p <= 0.0 && s <= 0.0 {
                    (0.0, Source::LexiconOrder)
                } else if p >= s {
                    (p, Source::Personal)
                } else {
                    (s.min(1.0), Source::Shared)
                };
                let mut item = sense.clone();
                item.score = score;
                ScoredCandidate {
                    id: format!("{}/{}", sense.keyword, sense.sense_id),
                    item,
                    score,
                    source,
                }
            })
            .collect();
        // stable: equal scores, including the unscored tail, keep lexicon order
        scored.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal));
        scored.truncate(cfg.sense_k);
        out.insert(keyword.clone(), scored);
    }
    out
}

/// Scores every meta keyword found in the stores against `context` and
/// returns the best `limit`, one per distinct word list.
pub fn recommend_meta_keywords(
    context: &TermVector,
    profile: &PersonalProfile,
    sckb: Option<&SharedKnowledgeBase>,
    cfg: &RecommenderConfig,
) -> Vec<ScoredCandidate<MetaKeyword>> {
    let mut best: HashMap<MetaKeyword, (f64, Source)> = HashMap::new();
    let mut consider = |store: &dyn EntryStore, source: Source, weight: f64| {
        for e in store.entries() {
            for mk in e.selected_meta_keywords.iter().chain(&e.extracted_meta_keywords) {
                let score = rank_score((cosine(&TermVector::from_terms(mk.words()), context) * weight).min(1.0));
                if score <= 0.0 {
                    continue;
                }
                let slot = best.entry(mk.clone()).or_insert((score, source));
                if score > slot.0 {
                    *slot = (score, source);
                }
            }
        }
    };
    consider(profile, Source::Personal, 1.0);
    if let Some(kb) = sckb {
        consider(kb, Source::Shared, cfg.shared_weight);
    }
    let mut out: Vec<_> = best
        .into_iter()
        .map(|(mk, (score, source))| ScoredCandidate {
            id: mk.id(),
            item: mk,
            score,
            source,
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.item.cmp(&b.item))
    });
    out.truncate(cfg.meta_keyword_limit);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub concept_id: String,
    pub label: String,
    pub related_terms: Vec<String>,
    pub parent_id: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ontology {
    concepts: BTreeMap<String, Concept>,
}

impl Ontology {
    /// `concept_id\tlabel\tterm1,term2,...\tparent_id?`, `#` comments allowed.
    /// Terms are stemmed so they match normalized text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut concepts = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
            if !(3..=4).contains(&fields.len()) {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 3 or 4 tab-separated fields, found {}", fields.len()),
                });
            }
            let concept_id = fields[0].to_string();
            if concept_id.is_empty() {
                return Err(Error::Parse { line, message: "empty concept id".into() });
            }
            let mut related_terms: Vec<String> = Vec::new();
            for term in fields[2].split(',').flat_map(stem_tokens) {
                if !related_terms.contains(&term) {
                    related_terms.push(term);
                }
            }
            if related_terms.is_empty() {
                return Err(Error::Parse { line, message: "concept has no related terms".into() });
            }
            let parent_id = fields.get(3).filter(|p| !p.is_empty()).map(|p| p.to_string());
            let concept = Concept {
                concept_id: concept_id.clone(),
                label: fields[1].to_string(),
                related_terms,
                parent_id,
            };
            if concepts.insert(concept_id.clone(), concept).is_some() {
                return Err(Error::validation(format!("duplicate concept id {concept_id:?}")));
            }
        }
        let ontology = Ontology { concepts };
        ontology.check_hierarchy()?;
        Ok(ontology)
    }

    fn check_hierarchy(&self) -> Result<()> {
        for c in self.concepts.values() {
            let mut visited = HashSet::from([c.concept_id.as_str()]);
            let mut cur = c;
            while let Some(parent) = &cur.parent_id {
                let Some(next) = self.concepts.get(parent) else {
                    return Err(Error::validation(format!(
                        "concept {:?} has unknown parent {parent:?}",
                        cur.concept_id
                    )));
                };
                if !visited.insert(parent) {
                    return Err(Error::validation(format!(
                        "cycle in concept hierarchy through {parent:?}"
                    )));
                }
                cur = next;
            }
        }
        Ok(())
    }

    pub fn get(&self, concept_id: &str) -> Option<&Concept> {
        self.concepts.get(concept_id)
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.values()
    }
}

pub fn load_ontology(path: impl AsRef<Path>) -> Result<Ontology> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::load(path, e))?;
    Ontology::parse(&text)
}

/// Concepts whose related terms overlap `context`, best first, ties by id.
pub fn recommend_concepts(
    context: &TermVector,
    ontology: &Ontology,
    k: usize,
) -> Vec<ScoredCandidate<Concept>> {
    let mut out: Vec<_> = ontology
        .concepts()
        .filter_map(|c| {
            let score = rank_score(cosine(&TermVector::from_terms(&c.related_terms), context));
            (score > 0.0).then(|| ScoredCandidate {
                id: c.concept_id.clone(),
                item: c.clone(),
                score,
                source: Source::Ontology,
            })
        })
        .collect();
    // concepts() iterates in id order, so a stable sort keeps ties by id
    out.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal));
    out.truncate(k);
    out
}
