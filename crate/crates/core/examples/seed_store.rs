//! Builds a profile store by replaying a scripted search history through the
//! session service.
//!
//! Usage: `seed_store <simulation.toml> <history.toml> <out-dir>`
//!
//! Each history item runs one contextual session: submit the query, select
//! the given sense id, skip meta keywords, select the given concept, click the
//! first listed document that appears in the results and complete the task.

use std::path::PathBuf;
use std::sync::Arc;

use ctxsearch_core::eval::SimulationSetup;
use ctxsearch_core::profile::ProfileStore;
use ctxsearch_core::session::{ManualClock, Offer, Phase, SessionApi, SessionService, Stage};
use serde::Deserialize;

#[derive(Deserialize)]
struct History {
    history: Vec<Item>,
}

#[derive(Deserialize)]
struct Item {
    user: String,
    query: String,
    sense: String,
    concept: String,
    click: Vec<u64>,
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [config, history, out] = args.as_slice() else {
        return Err("usage: seed_store <simulation.toml> <history.toml> <out-dir>".into());
    };
    let setup = SimulationSetup::load(config)?;
    let history: History = toml::from_str(&std::fs::read_to_string(history)?)?;
    let out = PathBuf::from(out);
    if out.exists() {
        std::fs::remove_dir_all(&out)?;
    }
    let store = Arc::new(ProfileStore::open(&out)?);
    let clock = ManualClock::new(1_700_000_000_000);
    let service = SessionService::new(
        setup.engine.clone(),
        store.clone(),
        Arc::new(clock.clone()),
        setup.file.service.clone(),
    );

    for (n, item) in history.history.iter().enumerate() {
        let s = service.create_session(&item.user, Phase::OS1, &format!("seed-{}", n + 1))?;
        let id = s.session_id.as_str();
        clock.advance(30_000);
        let Offer::Senses { senses } = service.submit_query(id, &item.query)? else {
            return Err("expected sense recommendations".into());
        };
        let sense = senses
            .values()
            .flatten()
            .find(|c| c.item.sense_id == item.sense)
            .ok_or_else(|| format!("item {}: sense {} not offered", n + 1, item.sense))?;
        clock.advance(5_000);
        service.apply_selection(id, Stage::Senses, std::slice::from_ref(&sense.id))?;
        service.apply_selection(id, Stage::Metas, &[])?;
        clock.advance(5_000);
        let Offer::Results { hits, .. } =
            service.apply_selection(id, Stage::Concepts, std::slice::from_ref(&item.concept))?
        else {
            return Err("expected results after the concept stage".into());
        };
        if let Some(hit) = hits.iter().find(|h| item.click.contains(&h.doc_id)) {
            clock.advance(10_000);
            service.report_click(id, &hit.url)?;
        } else {
            eprintln!("item {}: no listed document among the results", n + 1);
        }
        service.complete_task(id, true)?;
        clock.advance(60_000);
    }
    let stats = store.sckb_stats();
    println!(
        "seeded {} sessions; SCKB holds {} entries from {} contributions",
        history.history.len(),
        stats.entries,
        stats.contributions
    );
    Ok(())
}
