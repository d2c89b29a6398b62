//! Simulation configuration file and in-process phase runs.
//!
//! The config is TOML; relative paths resolve against the file's directory.
//!
//! ```toml
//! [paths]
//! corpus = "corpus"
//! lexicon = "lexicon.tsv"
//! ontology = "ontology.tsv"
//! stopwords = "stopwords.txt"
//! store = "store"
//!
//! [simulation]
//! subjects = 10
//! p_accept = 0.8
//!
//! [[tasks]]
//! task_id = "t1"
//! target_doc_ids = [3]
//! seed_queries = ["java", "java island"]
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::simulate::{run_phase_simulation, PhaseConfig, SimulationRow, TaskSpec, Timing};
use crate::config::{copy_dir, load_engine, ResourcePaths};
use crate::error::{Error, Result};
use crate::profile::ProfileStore;
use crate::session::{Engine, ManualClock, Phase, ServiceConfig, SessionService};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetupPaths {
    #[serde(flatten)]
    pub resources: ResourcePaths,
    /// Seed store (profiles and SCKB). Each run works on a copy.
    pub store: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationParams {
    pub subjects: usize,
    pub p_accept: f64,
    pub max_queries: usize,
    pub max_pages: usize,
    pub timing: Timing,
}

impl Default for SimulationParams {
    fn default() -> Self {
        let d = PhaseConfig::default();
        Self {
            subjects: d.subjects,
            p_accept: d.p_accept,
            max_queries: d.max_queries,
            max_pages: d.max_pages,
            timing: d.timing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationFile {
    pub paths: SetupPaths,
    #[serde(default)]
    pub service: ServiceConfig,
    #[serde(default)]
    pub simulation: SimulationParams,
    pub tasks: Vec<TaskSpec>,
}

impl SimulationFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::validation(format!("simulation config: {e}")))
    }

    /// Loads and resolves paths relative to the file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::load(path, e))?;
        let mut file = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        file.paths.resources = file.paths.resources.relative_to(base);
        file.paths.store = file.paths.store.map(|s| if s.is_absolute() { s } else { base.join(s) });
        Ok(file)
    }
}

/// Loaded resources ready for repeated phase runs.
pub struct SimulationSetup {
    pub file: SimulationFile,
    pub engine: Arc<Engine>,
}

impl SimulationSetup {
    pub fn load(config: impl AsRef<Path>) -> Result<Self> {
        let file = SimulationFile::load(config)?;
        let engine = Arc::new(load_engine(&file.paths.resources, file.service.page_size)?);
        let setup = Self { file, engine };
        setup.check_targets()?;
        Ok(setup)
    }

    fn check_targets(&self) -> Result<()> {
        for t in &self.file.tasks {
            if let Some(missing) = t.target_doc_ids.iter().find(|id| !self.engine.index.docs.contains_key(id)) {
                return Err(Error::validation(format!(
                    "task {} targets unknown document {missing}",
                    t.task_id
                )));
            }
        }
        Ok(())
    }

    pub fn phase_config(&self, phase: Phase) -> PhaseConfig {
        let s = &self.file.simulation;
        PhaseConfig {
            phase,
            subjects: s.subjects,
            tasks: self.file.tasks.clone(),
            p_accept: s.p_accept,
            max_queries: s.max_queries,
            max_pages: s.max_pages,
            user_ids: Vec::new(),
            timing: s.timing,
        }
    }

    /// A service over a fresh copy of the seed store at `store_dir`.
    pub fn service(&self, store_dir: &Path, clock: ManualClock) -> Result<SessionService> {
        if let Some(seed) = &self.file.paths.store {
            copy_dir(seed, store_dir)?;
        }
        let store = Arc::new(ProfileStore::open(store_dir)?);
        Ok(SessionService::new(
            self.engine.clone(),
            store,
            Arc::new(clock),
            self.file.service.clone(),
        ))
    }

    /// One phase in-process with a simulated clock starting at zero.
    pub fn run_phase(&self, phase: Phase, seed: u64, store_dir: &Path) -> Result<Vec<SimulationRow>> {
        let clock = ManualClock::new(0);
        let service = self.service(store_dir, clock.clone())?;
        run_phase_simulation(&service, &self.phase_config(phase), seed, &clock)
    }
}
