//! Simulated subjects for the three-phase comparison.
//!
//! Each subject works through the tasks in order. Per task it opens a
//! session, issues the task's seed queries one by one, accepts the top
//! recommendation at every stage with probability `p_accept`, browses up to
//! `max_pages` result pages and clicks the first hit whose document is a
//! target, which completes the task. A task whose queries run out is
//! completed as not found. The agent is a directional stand-in for human
//! subjects, nothing more.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search::SearchHit;
use crate::session::{ManualClock, Offer, Phase, SessionApi, SessionMetrics, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_id: String,
    pub target_doc_ids: BTreeSet<u64>,
    pub seed_queries: Vec<String>,
}

/// Simulated think times in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Timing {
    pub query_ms: u64,
    pub select_ms: u64,
    pub hit_ms: u64,
    pub click_ms: u64,
    /// Upper bound of uniform jitter added to every pause.
    pub jitter_ms: u64,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            query_ms: 6_000,
            select_ms: 2_500,
            hit_ms: 800,
            click_ms: 1_500,
            jitter_ms: 1_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaseConfig {
    pub phase: Phase,
    pub subjects: usize,
    pub tasks: Vec<TaskSpec>,
    pub p_accept: f64,
    pub max_queries: usize,
    pub max_pages: usize,
    /// Subject user ids; defaults to `<phase>-s01`, `<phase>-s02`, ...
    pub user_ids: Vec<String>,
    pub timing: Timing,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            phase: Phase::OS1,
            subjects: 10,
            tasks: Vec::new(),
            p_accept: 0.8,
            max_queries: 6,
            max_pages: 2,
            user_ids: Vec::new(),
            timing: Timing::default(),
        }
    }
}

impl PhaseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subjects == 0 {
            return Err(Error::validation("at least one subject is required"));
        }
        if self.tasks.is_empty() {
            return Err(Error::validation("at least one task is required"));
        }
        if !(0.0..=1.0).contains(&self.p_accept) {
            return Err(Error::validation("p_accept must lie in [0, 1]"));
        }
        if self.max_pages == 0 {
            return Err(Error::validation("max_pages must be at least 1"));
        }
        if !self.user_ids.is_empty() && self.user_ids.len() < self.subjects {
            return Err(Error::validation("fewer user ids than subjects"));
        }
        for t in &self.tasks {
            if t.target_doc_ids.is_empty() {
                return Err(Error::validation(format!("task {} has no targets", t.task_id)));
            }
        }
        Ok(())
    }

    pub fn user_id(&self, subject: usize) -> String {
        self.user_ids
            .get(subject)
            .cloned()
            .unwrap_or_else(|| format!("{}-s{:02}", self.phase.to_string().to_lowercase(), subject + 1))
    }
}

/// One subject × task outcome. This is the `rows.jsonl` line format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    pub phase: Phase,
    pub subject: usize,
    pub user_id: String,
    pub task_id: String,
    pub found: bool,
    #[serde(flatten)]
    pub metrics: SessionMetrics,
}

/// Lets the harness pass simulated time. In-process runs advance a
/// [`ManualClock`]; runs against a remote service use [`NoPause`].
pub trait Pacer {
    fn pause(&self, ms: u64);
}

impl Pacer for ManualClock {
    fn pause(&self, ms: u64) {
        self.advance(ms);
    }
}

pub struct NoPause;

impl Pacer for NoPause {
    fn pause(&self, _ms: u64) {}
}

/// Per-subject stream so rows do not depend on subject scheduling.
pub fn subject_rng(seed: u64, subject: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(subject as u64 + 1);
    rng
}

struct Agent<'a> {
    api: &'a dyn SessionApi,
    pacer: &'a dyn Pacer,
    cfg: &'a PhaseConfig,
    rng: ChaCha8Rng,
}

impl Agent<'_> {
    fn pause(&mut self, base: u64) {
        let jitter = match self.cfg.timing.jitter_ms {
            0 => 0,
            j => self.rng.random_range(0..=j),
        };
        self.pacer.pause(base + jitter);
    }

    fn accept(&mut self) -> bool {
        self.rng.random::<f64>() < self.cfg.p_accept
    }

    /// Walks the selection stages until results come back.
    fn select_through(&mut self, session: &str, mut offer: Offer) -> Result<Vec<SearchHit>> {
        loop {
            let (stage, chosen) = match &offer {
                Offer::Results { hits, .. } => return Ok(hits.clone()),
                Offer::None => return Ok(Vec::new()),
                Offer::Senses { senses } => {
                    let tops: Vec<String> = senses
                        .values()
                        .filter_map(|list| list.first().map(|c| c.id.clone()))
                        .collect();
                    let chosen = tops.into_iter().filter(|_| self.accept()).collect::<Vec<_>>();
                    (Stage::Senses, chosen)
                }
                Offer::Metas { metas } => {
                    let top = metas.first().map(|c| c.id.clone());
                    (Stage::Metas, top.into_iter().filter(|_| self.accept()).collect())
                }
                Offer::Concepts { concepts } => {
                    let top = concepts.first().map(|c| c.id.clone());
                    (Stage::Concepts, top.into_iter().filter(|_| self.accept()).collect())
                }
            };
            self.pause(self.cfg.timing.select_ms);
            offer = self.api.apply_selection(session, stage, &chosen)?;
        }
    }

    /// Returns whether a target was clicked.
    fn browse(&mut self, session: &str, task: &TaskSpec, first_page: Vec<SearchHit>) -> Result<bool> {
        let mut hits = first_page;
        let mut page = 1;
        loop {
            for h in &hits {
                self.pause(self.cfg.timing.hit_ms);
                if task.target_doc_ids.contains(&h.doc_id) {
                    self.pause(self.cfg.timing.click_ms);
                    self.api.report_click(session, &h.url)?;
                    return Ok(true);
                }
            }
            if hits.is_empty() || page >= self.cfg.max_pages {
                return Ok(false);
            }
            page += 1;
            hits = self.api.results(session, page)?;
        }
    }

    fn run_task(&mut self, subject: usize, task: &TaskSpec) -> Result<SimulationRow> {
        let user_id = self.cfg.user_id(subject);
        let info = self.api.create_session(&user_id, self.cfg.phase, &task.task_id)?;
        let session = info.session_id.as_str();
        let mut found = false;
        for raw in task.seed_queries.iter().take(self.cfg.max_queries) {
            self.pause(self.cfg.timing.query_ms);
            let offer = match self.api.submit_query(session, raw) {
                Ok(offer) => offer,
                Err(Error::Validation(_)) => continue,
                Err(e) => return Err(e),
            };
            let hits = self.select_through(session, offer)?;
            if self.browse(session, task, hits)? {
                found = true;
                break;
            }
        }
        let metrics = self.api.complete_task(session, found)?;
        Ok(SimulationRow {
            phase: self.cfg.phase,
            subject: subject + 1,
            user_id,
            task_id: task.task_id.clone(),
            found,
            metrics,
        })
    }
}

/// Runs every subject through every task, subjects in order.
pub fn run_phase_simulation(
    api: &dyn SessionApi,
    cfg: &PhaseConfig,
    seed: u64,
    pacer: &dyn Pacer,
) -> Result<Vec<SimulationRow>> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.subjects * cfg.tasks.len());
    for subject in 0..cfg.subjects {
        let mut agent = Agent {
            api,
            pacer,
            cfg,
            rng: subject_rng(seed, subject),
        };
        for task in &cfg.tasks {
            rows.push(agent.run_task(subject, task)?);
        }
    }
    Ok(rows)
}

pub fn write_rows(rows: &[SimulationRow]) -> Result<String> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::validation(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn read_rows(text: &str) -> Result<Vec<SimulationRow>> {
    crate::profile::parse_records(text)
}
