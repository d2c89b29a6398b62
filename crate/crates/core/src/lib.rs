//! Contextual search core.
//!
//! Builds personal and shared contextual profiles from what users search for,
//! select and click, recommends disambiguated senses, meta keywords and
//! ontology concepts, expands queries into capped Boolean queries and ranks
//! results from a local index. The [`eval`] module replays the three-phase
//! comparison protocol with simulated subjects.

pub mod behavior;
pub mod config;
pub mod error;
pub mod eval;
pub mod lexicon;
pub mod profile;
pub mod query;
pub mod recommend;
pub mod search;
pub mod session;
pub mod stem;
pub mod vector;

pub use error::{Error, Result};
