//! Search sessions: the interaction state machine, per-session effort
//! metrics and the orchestration of recommendation, query expansion, search
//! and profile capture.
//!
//! Stage order is query → senses → meta keywords → concepts → results. Every
//! selection stage may be skipped (empty selection) or jumped over; a new
//! query restarts at the sense stage. Baseline (OS3) sessions go straight
//! from query to results and never touch the profile store.
//!
//! Metric definitions:
//! - `queries`: every submitted query, including ones that normalize to nothing.
//! - `clicks`: hit clicks plus recommendation items selected.
//! - `hits`: result items returned, summed over every page request.
//! - `urls`: distinct clicked URLs.
//! - `elapsed_ms`: completion time minus start time from the injected clock.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicI64, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::behavior::{record_click_with_metadata, MetaKeyword};
use crate::error::{Error, Result};
use crate::lexicon::{candidate_disambiguations, normalize_text, DisambiguatedTerm, Lexicon, StopwordList};
use crate::profile::{query_entries, ProfileEntry, ProfileStore, SckbStats};
use crate::query::{build_query, serialize_query, BooleanQuery, DEFAULT_LEAF_CAP};
use crate::recommend::{
    recommend_concepts, recommend_meta_keywords, recommend_senses, Concept, Ontology,
    RecommenderConfig, ScoredCandidate,
};
use crate::search::{paginate, rank_all, Index, SearchAdapter, SearchHit};
use crate::vector::TermVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    /// Personal profile only.
    OS1,
    /// Personal profile and the shared knowledge base.
    OS2,
    /// Baseline engine, no contextual features.
    OS3,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::OS1, Phase::OS2, Phase::OS3];

    pub fn is_contextual(self) -> bool {
        self != Phase::OS3
    }

    pub fn reads_sckb(self) -> bool {
        self == Phase::OS2
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::OS1 => "OS1",
            Phase::OS2 => "OS2",
            Phase::OS3 => "OS3",
        })
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('-', "").as_str() {
            "OS1" | "OSI" => Ok(Phase::OS1),
            "OS2" | "OSII" => Ok(Phase::OS2),
            "OS3" | "OSIII" => Ok(Phase::OS3),
            _ => Err(Error::validation(format!("unknown phase {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    AwaitingQuery,
    SensesOffered,
    MetasOffered,
    ConceptsOffered,
    ResultsShown,
    Completed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Senses,
    Metas,
    Concepts,
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "senses" => Ok(Stage::Senses),
            "metas" => Ok(Stage::Metas),
            "concepts" => Ok(Stage::Concepts),
            _ => Err(Error::validation(format!("unknown stage {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub queries: u64,
    pub clicks: u64,
    pub hits: u64,
    pub urls: u64,
    pub elapsed_ms: u64,
}

pub trait Clock: Send + Sync {
    fn now_ms(&self) -> i64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> i64 {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as i64)
            .unwrap_or(0)
    }
}

/// Clock advanced explicitly; clones share the same time.
#[derive(Debug, Default, Clone)]
pub struct ManualClock(Arc<AtomicI64>);

impl ManualClock {
    pub fn new(start_ms: i64) -> Self {
        Self(Arc::new(AtomicI64::new(start_ms)))
    }

    pub fn advance(&self, ms: u64) {
        self.0.fetch_add(ms as i64, Ordering::SeqCst);
    }

    pub fn set(&self, ms: i64) {
        self.0.store(ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> i64 {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub recommender: RecommenderConfig,
    pub query_cap: usize,
    pub page_size: usize,
    /// Master switch for the shared knowledge base (reads and merges).
    pub sckb_enabled: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            recommender: RecommenderConfig::default(),
            query_cap: DEFAULT_LEAF_CAP,
            page_size: 10,
            sckb_enabled: true,
        }
    }
}

/// Immutable resources shared by all sessions.
pub struct Engine {
    pub lexicon: Lexicon,
    pub stopwords: StopwordList,
    pub ontology: Ontology,
    pub index: Arc<Index>,
    /// Engine used by baseline sessions.
    pub baseline: Arc<dyn SearchAdapter>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub user_id: String,
    pub phase: Phase,
    pub task_id: String,
    pub state: SessionState,
    pub sckb_enabled: bool,
}

/// What the session offers next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Offer {
    Senses {
        senses: BTreeMap<String, Vec<ScoredCandidate<DisambiguatedTerm>>>,
    },
    Metas {
        metas: Vec<ScoredCandidate<MetaKeyword>>,
    },
    Concepts {
        concepts: Vec<ScoredCandidate<Concept>>,
    },
    Results {
        query: String,
        page: usize,
        hits: Vec<SearchHit>,
    },
    None,
}

/// The session interface used by the HTTP layer and the evaluation harness.
pub trait SessionApi: Send + Sync {
    fn create_session(&self, user_id: &str, phase: Phase, task_id: &str) -> Result<SessionInfo>;
    fn submit_query(&self, session_id: &str, raw_query: &str) -> Result<Offer>;
    fn recommendations(&self, session_id: &str) -> Result<Offer>;
    fn apply_selection(&self, session_id: &str, stage: Stage, chosen: &[String]) -> Result<Offer>;
    fn results(&self, session_id: &str, page: usize) -> Result<Vec<SearchHit>>;
    fn report_click(&self, session_id: &str, url: &str) -> Result<SessionMetrics>;
    fn complete_task(&self, session_id: &str, found: bool) -> Result<SessionMetrics>;
    fn metrics(&self, session_id: &str) -> Result<SessionMetrics>;
}

#[derive(Debug, Clone)]
struct Session {
    info: SessionInfo,
    metrics: SessionMetrics,
    started_at: i64,
    completed_at: Option<i64>,
    entry: Option<ProfileEntry>,
    offer: Offer,
    selected_concepts: Vec<Concept>,
    query: Option<BooleanQuery>,
    ranked: Vec<SearchHit>,
    presented: HashSet<String>,
    clicked: HashSet<String>,
    found: Option<bool>,
}

impl Session {
    fn ensure_open(&self) -> Result<()> {
        if self.info.state == SessionState::Completed {
            return Err(Error::state("session is completed"));
        }
        Ok(())
    }

    fn current_stage(&self) -> Option<Stage> {
        match self.info.state {
            SessionState::SensesOffered => Some(Stage::Senses),
            SessionState::MetasOffered => Some(Stage::Metas),
            SessionState::ConceptsOffered => Some(Stage::Concepts),
            _ => None,
        }
    }

    fn present(&mut self, hits: &[SearchHit]) {
        self.metrics.hits += hits.len() as u64;
        self.presented.extend(hits.iter().map(|h| h.url.clone()));
    }
}

pub struct SessionService {
    engine: Arc<Engine>,
    store: Arc<ProfileStore>,
    clock: Arc<dyn Clock>,
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

impl SessionService {
    pub fn new(
        engine: Arc<Engine>,
        store: Arc<ProfileStore>,
        clock: Arc<dyn Clock>,
        config: ServiceConfig,
    ) -> Self {
        Self {
            engine,
            store,
            clock,
            config,
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    pub fn store(&self) -> &ProfileStore {
        &self.store
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>> {
        self.sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("session {id:?}")))
    }

    fn with_session<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> Result<T>) -> Result<T> {
        let slot = self.session(id)?;
        let mut guard = slot.lock().unwrap();
        f(&mut guard)
    }

    /// Most recent profile entries for a user.
    pub fn profile_entries(&self, user_id: &str, limit: usize) -> Result<Vec<ProfileEntry>> {
        if !self.store.user_exists(user_id) {
            return Err(Error::NotFound(format!("user {user_id:?}")));
        }
        Ok(query_entries(&*self.store.profile(user_id)?, limit))
    }

    pub fn sckb_stats(&self) -> SckbStats {
        self.store.sckb_stats()
    }

    pub fn session_info(&self, id: &str) -> Result<SessionInfo> {
        self.with_session(id, |s| Ok(s.info.clone()))
    }

    /// Serialized Boolean query of the latest search, if any.
    pub fn current_query(&self, id: &str) -> Result<Option<String>> {
        self.with_session(id, |s| Ok(s.query.as_ref().map(serialize_query)))
    }

    fn sckb_for(&self, phase: Phase) -> Option<Arc<crate::profile::SharedKnowledgeBase>> {
        (phase.reads_sckb() && self.config.sckb_enabled).then(|| self.store.sckb())
    }

    /// Persist the in-progress entry and share it.
    fn finalize_entry(&self, s: &mut Session) -> Result<()> {
        let Some(entry) = s.entry.take() else { return Ok(()) };
        if !s.info.phase.is_contextual() {
            return Ok(());
        }
        let recorded = self.store.record_new_entry(entry)?;
        if self.config.sckb_enabled {
            self.store.merge_into_sckb(&recorded)?;
        }
        Ok(())
    }

    fn context_vector(&self, s: &Session) -> TermVector {
        let mut v = TermVector::new();
        let Some(entry) = &s.entry else { return v };
        for k in &entry.query_keywords {
            v.add(k, 1.0);
        }
        for t in &entry.selected_terms {
            t.words.iter().for_each(|w| v.add(w, 1.0));
        }
        for m in &entry.selected_meta_keywords {
            m.words().iter().for_each(|w| v.add(w, 1.0));
        }
        for c in &s.selected_concepts {
            c.related_terms.iter().for_each(|w| v.add(w, 1.0));
        }
        v
    }

    fn offer_for(&self, s: &Session, stage: Stage) -> Result<Offer> {
        let entry = s.entry.as_ref().ok_or_else(|| Error::state("no query in progress"))?;
        let profile = self.store.profile(&s.info.user_id)?;
        let sckb = self.sckb_for(s.info.phase);
        let cfg = &self.config.recommender;
        Ok(match stage {
            Stage::Senses => {
                let candidates = candidate_disambiguations(
                    &self.engine.lexicon,
                    &entry.query_keywords,
                    &self.engine.stopwords,
                );
                Offer::Senses {
                    senses: recommend_senses(
                        &entry.query_keywords,
                        &candidates,
                        &profile,
                        sckb.as_deref(),
                        cfg,
                    ),
                }
            }
            Stage::Metas => Offer::Metas {
                metas: recommend_meta_keywords(&self.context_vector(s), &profile, sckb.as_deref(), cfg),
            },
            Stage::Concepts => Offer::Concepts {
                concepts: recommend_concepts(&self.context_vector(s), &self.engine.ontology, cfg.concept_k),
            },
        })
    }

    fn run_search(&self, s: &mut Session) -> Result<Offer> {
        let entry = s.entry.as_ref().ok_or_else(|| Error::state("no query in progress"))?;
        let q = build_query(
            &entry.query_keywords,
            &entry.selected_terms,
            &entry.selected_meta_keywords,
            &s.selected_concepts,
            self.config.query_cap,
        )?;
        let ranked = rank_all(&q, &self.context_vector(s), &self.engine.index);
        let hits = paginate(ranked.clone(), self.config.page_size, 1);
        s.present(&hits);
        s.ranked = ranked;
        let text = serialize_query(&q);
        s.query = Some(q);
        s.info.state = SessionState::ResultsShown;
        Ok(Offer::Results { query: text, page: 1, hits })
    }

    fn select(&self, s: &mut Session, stage: Stage, chosen: &[String]) -> Result<()> {
        let mut ids: Vec<&String> = Vec::new();
        for id in chosen {
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
        if ids.is_empty() {
            return Ok(());
        }
        let unknown = |id: &str| Error::validation(format!("unknown {stage:?} id {id:?}"));
        match &s.offer {
            Offer::Senses { senses } => {
                let all: Vec<&ScoredCandidate<DisambiguatedTerm>> = senses.values().flatten().collect();
                let picked = ids
                    .iter()
                    .map(|id| all.iter().find(|c| &c.id == *id).map(|c| c.item.clone()).ok_or_else(|| unknown(id)))
                    .collect::<Result<Vec<_>>>()?;
                s.entry.as_mut().unwrap().selected_terms.extend(picked);
            }
            Offer::Metas { metas } => {
                let picked = ids
                    .iter()
                    .map(|id| metas.iter().find(|c| &c.id == *id).map(|c| c.item.clone()).ok_or_else(|| unknown(id)))
                    .collect::<Result<Vec<_>>>()?;
                s.entry.as_mut().unwrap().selected_meta_keywords.extend(picked);
            }
            Offer::Concepts { concepts } => {
                let picked = ids
                    .iter()
                    .map(|id| concepts.iter().find(|c| &c.id == *id).map(|c| c.item.clone()).ok_or_else(|| unknown(id)))
                    .collect::<Result<Vec<_>>>()?;
                let entry = s.entry.as_mut().unwrap();
                entry.selected_concepts.extend(picked.iter().map(|c| c.concept_id.clone()));
                s.selected_concepts.extend(picked);
            }
            _ => return Err(Error::state("no recommendations on offer")),
        }
        s.metrics.clicks += ids.len() as u64;
        Ok(())
    }

    fn advance_to(&self, s: &mut Session, stage: Stage) -> Result<()> {
        s.offer = self.offer_for(s, stage)?;
        s.info.state = match stage {
            Stage::Senses => SessionState::SensesOffered,
            Stage::Metas => SessionState::MetasOffered,
            Stage::Concepts => SessionState::ConceptsOffered,
        };
        Ok(())
    }
}

impl SessionApi for SessionService {
    fn create_session(&self, user_id: &str, phase: Phase, task_id: &str) -> Result<SessionInfo> {
        crate::profile::validate_user_id(user_id)?;
        if phase.reads_sckb() && !self.config.sckb_enabled {
            return Err(Error::validation("OS2 sessions need the shared knowledge base enabled"));
        }
        let n = self.next_id.fetch_add(1, Ordering::SeqCst);
        let info = SessionInfo {
            session_id: format!("s{n:06}"),
            user_id: user_id.to_string(),
            phase,
            task_id: task_id.to_string(),
            state: SessionState::AwaitingQuery,
            sckb_enabled: phase.reads_sckb(),
        };
        let session = Session {
            info: info.clone(),
            metrics: SessionMetrics::default(),
            started_at: self.clock.now_ms(),
            completed_at: None,
            entry: None,
            offer: Offer::None,
            selected_concepts: Vec::new(),
            query: None,
            ranked: Vec::new(),
            presented: HashSet::new(),
            clicked: HashSet::new(),
            found: None,
        };
        self.sessions
            .lock()
            .unwrap()
            .insert(info.session_id.clone(), Arc::new(Mutex::new(session)));
        Ok(info)
    }

    fn submit_query(&self, session_id: &str, raw_query: &str) -> Result<Offer> {
        self.with_session(session_id, |s| {
            s.ensure_open()?;
            s.metrics.queries += 1;
            let keywords = normalize_text(raw_query, &self.engine.stopwords);
            if keywords.is_empty() {
                return Err(Error::validation("query has no searchable keywords"));
            }
            let now = self.clock.now_ms();
            if s.info.phase == Phase::OS3 {
                let q = build_query(&keywords, &[], &[], &[], self.config.query_cap.max(keywords.len()))?;
                let text = serialize_query(&q);
                let hits = self.engine.baseline.submit(&text, 1)?;
                s.present(&hits);
                s.query = Some(q);
                s.entry = Some(ProfileEntry::new("", &*s.info.user_id, now, raw_query, keywords));
                s.info.state = SessionState::ResultsShown;
                return Ok(Offer::Results { query: text, page: 1, hits });
            }
            self.finalize_entry(s)?;
            s.entry = Some(ProfileEntry::new("", &*s.info.user_id, now, raw_query, keywords));
            s.selected_concepts.clear();
            s.query = None;
            s.ranked.clear();
            self.advance_to(s, Stage::Senses)?;
            Ok(s.offer.clone())
        })
    }

    fn recommendations(&self, session_id: &str) -> Result<Offer> {
        self.with_session(session_id, |s| Ok(s.offer.clone()))
    }

    fn apply_selection(&self, session_id: &str, stage: Stage, chosen: &[String]) -> Result<Offer> {
        self.with_session(session_id, |s| {
            s.ensure_open()?;
            let Some(current) = s.current_stage() else {
                return Err(Error::state(format!(
                    "no selection stage is open (state {:?})",
                    s.info.state
                )));
            };
            if stage < current {
                return Err(Error::state(format!("stage {stage:?} already passed")));
            }
            // validate against a scratch copy so a bad id changes nothing
            let mut next = s.clone();
            if stage > current {
                self.advance_to(&mut next, stage)?;
            }
            self.select(&mut next, stage, chosen)?;
            let offer = match stage {
                Stage::Senses => {
                    self.advance_to(&mut next, Stage::Metas)?;
                    next.offer.clone()
                }
                Stage::Metas => {
                    self.advance_to(&mut next, Stage::Concepts)?;
                    next.offer.clone()
                }
                Stage::Concepts => {
                    let offer = self.run_search(&mut next)?;
                    next.offer = offer.clone();
                    offer
                }
            };
            *s = next;
            Ok(offer)
        })
    }

    fn results(&self, session_id: &str, page: usize) -> Result<Vec<SearchHit>> {
        self.with_session(session_id, |s| {
            s.ensure_open()?;
            if s.info.state != SessionState::ResultsShown {
                return Err(Error::state("no results to page through"));
            }
            if page == 0 {
                return Err(Error::validation("pages start at 1"));
            }
            let hits = if s.info.phase == Phase::OS3 {
                let text = s.query.as_ref().map(serialize_query).unwrap_or_default();
                self.engine.baseline.submit(&text, page)?
            } else {
                paginate(s.ranked.clone(), self.config.page_size, page)
            };
            s.present(&hits);
            Ok(hits)
        })
    }

    fn report_click(&self, session_id: &str, url: &str) -> Result<SessionMetrics> {
        self.with_session(session_id, |s| {
            s.ensure_open()?;
            if s.info.state != SessionState::ResultsShown {
                return Err(Error::state("clicks are only accepted on shown results"));
            }
            if !s.presented.contains(url) {
                return Err(Error::validation(format!("url {url:?} was not presented")));
            }
            if s.info.phase.is_contextual() {
                if let (Some(entry), Some((_, doc))) =
                    (s.entry.as_mut(), self.engine.index.doc_by_url(url))
                {
                    if let Some(record) =
                        record_click_with_metadata(entry, &doc.metadata, &self.engine.stopwords)
                    {
                        self.store.append_behavior(&s.info.user_id, &record)?;
                    }
                }
            }
            s.metrics.clicks += 1;
            if s.clicked.insert(url.to_string()) {
                s.metrics.urls += 1;
            }
            Ok(s.metrics)
        })
    }

    fn complete_task(&self, session_id: &str, found: bool) -> Result<SessionMetrics> {
        self.with_session(session_id, |s| {
            s.ensure_open()?;
            let now = self.clock.now_ms();
            self.finalize_entry(s)?;
            s.completed_at = Some(now);
            s.metrics.elapsed_ms = (now - s.started_at).max(0) as u64;
            s.found = Some(found);
            s.info.state = SessionState::Completed;
            s.offer = Offer::None;
            Ok(s.metrics)
        })
    }

    fn metrics(&self, session_id: &str) -> Result<SessionMetrics> {
        self.with_session(session_id, |s| {
            let mut m = s.metrics;
            if s.completed_at.is_none() {
                m.elapsed_ms = (self.clock.now_ms() - s.started_at).max(0) as u64;
            }
            Ok(m)
        })
    }
}
