//! Personal contextual profiles and the shared contextual knowledge base.
//!
//! Both are append-only logs of JSON lines. A personal log holds one
//! [`ProfileEntry`] per line; the shared log holds one [`SckbRecord`] per line,
//! where a later line for an already-known `entry_id` updates its contributor
//! count.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use crate::behavior::{BehaviorRecord, MetaKeyword};
use crate::error::{Error, Result};
use crate::lexicon::{stem_tokens, DisambiguatedTerm};
use crate::vector::TermVector;

/// One captured search interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub entry_id: String,
    pub user_id: String,
    pub timestamp: i64,
    pub raw_query: String,
    pub query_keywords: Vec<String>,
    #[serde(default)]
    pub selected_terms: Vec<DisambiguatedTerm>,
    #[serde(default)]
    pub selected_meta_keywords: Vec<MetaKeyword>,
    #[serde(default)]
    pub selected_concepts: Vec<String>,
    #[serde(default)]
    pub clicked_urls: Vec<String>,
    #[serde(default)]
    pub extracted_meta_keywords: Vec<MetaKeyword>,
}

impl ProfileEntry {
    pub fn new(
        entry_id: impl Into<String>,
        user_id: impl Into<String>,
        timestamp: i64,
        raw_query: impl Into<String>,
        query_keywords: Vec<String>,
    ) -> Self {
        Self {
            entry_id: entry_id.into(),
            user_id: user_id.into(),
            timestamp,
            raw_query: raw_query.into(),
            query_keywords,
            selected_terms: Vec::new(),
            selected_meta_keywords: Vec::new(),
            selected_concepts: Vec::new(),
            clicked_urls: Vec::new(),
            extracted_meta_keywords: Vec::new(),
        }
    }
}

/// Raw term counts over everything the entry captured: query keywords,
/// selected sense words, selected and extracted meta keyword words, and the
/// tokens of selected concept ids.
pub fn entry_vector(entry: &ProfileEntry) -> TermVector {
    let mut v = TermVector::new();
    for k in &entry.query_keywords {
        v.add(k, 1.0);
    }
    for t in &entry.selected_terms {
        for w in &t.words {
            v.add(w, 1.0);
        }
    }
    for mk in entry
        .selected_meta_keywords
        .iter()
        .chain(&entry.extracted_meta_keywords)
    {
        for w in mk.words() {
            v.add(w, 1.0);
        }
    }
    for c in &entry.selected_concepts {
        for t in stem_tokens(c) {
            v.add(&t, 1.0);
        }
    }
    v
}

/// Read access shared by personal profiles and the SCKB.
pub trait EntryStore {
    fn entries(&self) -> &[ProfileEntry];
}

/// Most recent first, at most `limit` entries.
pub fn query_entries<S: EntryStore + ?Sized>(store: &S, limit: usize) -> Vec<ProfileEntry> {
    store.entries().iter().rev().take(limit).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonalProfile {
    pub user_id: String,
    entries: Vec<ProfileEntry>,
}

impl EntryStore for PersonalProfile {
    fn entries(&self) -> &[ProfileEntry] {
        &self.entries
    }
}

impl PersonalProfile {
    pub fn new(user_id: impl Into<String>) -> Self {
        Self {
            user_id: user_id.into(),
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Checks that `entry` may be appended without changing anything.
    pub fn validate(&self, entry: &ProfileEntry) -> Result<()> {
        if entry.user_id != self.user_id {
            return Err(Error::validation(format!(
                "entry user {:?} does not match profile user {:?}",
                entry.user_id, self.user_id
            )));
        }
        if entry.query_keywords.is_empty() {
            return Err(Error::validation("entry has no query keywords"));
        }
        if let Some(last) = self.entries.last() {
            if entry.timestamp < last.timestamp {
                return Err(Error::validation(format!(
                    "timestamp {} precedes previous entry at {}",
                    entry.timestamp, last.timestamp
                )));
            }
        }
        if self.entries.iter().any(|e| e.entry_id == entry.entry_id) {
            return Err(Error::validation(format!("duplicate entry id {:?}", entry.entry_id)));
        }
        Ok(())
    }

    /// In-memory append after validation.
    pub fn push(&mut self, entry: ProfileEntry) -> Result<()> {
        self.validate(&entry)?;
        self.entries.push(entry);
        Ok(())
    }
}

/// Validates, durably appends `entry` to `log`, then adds it to the profile.
/// On a write failure the profile is left unchanged.
pub fn record_entry(profile: &mut PersonalProfile, entry: ProfileEntry, log: &Path) -> Result<()> {
    profile.validate(&entry)?;
    append_lines(log, std::slice::from_ref(&entry))?;
    profile.entries.push(entry);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SckbRecord {
    #[serde(flatten)]
    pub entry: ProfileEntry,
    pub contributor_count: u64,
}

/// Anonymized pool of profile entries, deduplicated by term vector.
#[derive(Debug, Clone, Default)]
pub struct SharedKnowledgeBase {
    entries: Vec<ProfileEntry>,
    contributor_count: BTreeMap<String, u64>,
    by_vector: HashMap<String, usize>,
}

impl PartialEq for SharedKnowledgeBase {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries && self.contributor_count == other.contributor_count
    }
}

impl EntryStore for SharedKnowledgeBase {
    fn entries(&self) -> &[ProfileEntry] {
        &self.entries
    }
}

/// What a merge did to the SCKB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MergeOutcome {
    Appended { entry_id: String },
    Incremented { entry_id: String, contributor_count: u64 },
}

impl SharedKnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contributor_count(&self, entry_id: &str) -> Option<u64> {
        self.contributor_count.get(entry_id).copied()
    }

    pub fn total_contributions(&self) -> u64 {
        self.contributor_count.values().sum()
    }

    /// Pure merge: bump the count of an entry with an identical vector, or
    /// append a copy with the user id stripped and a pool-local id.
    pub fn merge(&mut self, entry: &ProfileEntry) -> MergeOutcome {
        let key = entry_vector(entry).canonical_key();
        if let Some(&idx) = self.by_vector.get(&key) {
            let id = self.entries[idx].entry_id.clone();
            let count = self.contributor_count.entry(id.clone()).or_insert(0);
            *count += 1;
            return MergeOutcome::Incremented {
                entry_id: id,
                contributor_count: *count,
            };
        }
        let mut copy = entry.clone();
        copy.user_id.clear();
        // pool-local id: profile ids embed the user id
        let mut n = self.entries.len() + 1;
        while self.contributor_count.contains_key(&format!("kb-{n}")) {
            n += 1;
        }
        copy.entry_id = format!("kb-{n}");
        let id = copy.entry_id.clone();
        self.by_vector.insert(key, self.entries.len());
        self.contributor_count.insert(id.clone(), 1);
        self.entries.push(copy);
        MergeOutcome::Appended { entry_id: id }
    }

    fn apply_record(&mut self, record: SckbRecord, index: usize) -> Result<()> {
        if !record.entry.user_id.is_empty() {
            return Err(Error::Record {
                record: index,
                message: "shared entries must not carry a user id".into(),
            });
        }
        if record.contributor_count == 0 {
            return Err(Error::Record {
                record: index,
                message: "contributor_count must be positive".into(),
            });
        }
        let id = record.entry.entry_id.clone();
        if let Some(count) = self.contributor_count.get_mut(&id) {
            *count = record.contributor_count;
            return Ok(());
        }
        let key = entry_vector(&record.entry).canonical_key();
        self.by_vector.entry(key).or_insert(self.entries.len());
        self.contributor_count.insert(id, record.contributor_count);
        self.entries.push(record.entry);
        Ok(())
    }

    fn record_for(&self, entry_id: &str) -> Option<SckbRecord> {
        let entry = self.entries.iter().find(|e| e.entry_id == entry_id)?;
        Some(SckbRecord {
            entry: entry.clone(),
            contributor_count: self.contributor_count[entry_id],
        })
    }

    pub fn records(&self) -> Vec<SckbRecord> {
        self.entries
            .iter()
            .map(|e| SckbRecord {
                entry: e.clone(),
                contributor_count: self.contributor_count[&e.entry_id],
            })
            .collect()
    }
}

/// Merges into the SCKB and appends the resulting record to `log`.
pub fn merge_into_sckb(
    sckb: &mut SharedKnowledgeBase,
    entry: &ProfileEntry,
    log: &Path,
) -> Result<MergeOutcome> {
    let mut next = sckb.clone();
    let outcome = next.merge(entry);
    let id = match &outcome {
        MergeOutcome::Appended { entry_id } | MergeOutcome::Incremented { entry_id, .. } => entry_id,
    };
    let record = next.record_for(id).expect("merged entry present");
    append_lines(log, &[record])?;
    *sckb = next;
    Ok(outcome)
}

fn append_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).map_err(std::io::Error::other)?;
        buf.push(b'\n');
    }
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    file.write_all(&buf)?;
    file.sync_data()?;
    Ok(())
}

fn write_lines<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        for item in items {
            serde_json::to_writer(&mut w, &item).map_err(std::io::Error::other)?;
            w.write_all(b"\n")?;
        }
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn read_records<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::load(path, e)),
    };
    parse_records(&text)
}

/// Parses JSON lines; record numbers in errors are 1-based and count
/// non-blank lines.
pub fn parse_records<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| Error::Record {
                record: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Loads a personal profile log. A missing or empty file yields an empty
/// profile.
pub fn load_profile(path: &Path, user_id: &str) -> Result<PersonalProfile> {
    let entries: Vec<ProfileEntry> = read_records(path)?;
    profile_from_entries(user_id, entries)
}

pub fn profile_from_entries(user_id: &str, entries: Vec<ProfileEntry>) -> Result<PersonalProfile> {
    let mut profile = PersonalProfile::new(user_id);
    for (i, e) in entries.into_iter().enumerate() {
        profile.push(e).map_err(|err| Error::Record {
            record: i + 1,
            message: err.to_string(),
        })?;
    }
    Ok(profile)
}

pub fn save_profile(profile: &PersonalProfile, path: &Path) -> Result<()> {
    write_lines(path, &profile.entries)
}

pub fn load_sckb(path: &Path) -> Result<SharedKnowledgeBase> {
    let records: Vec<SckbRecord> = read_records(path)?;
    let mut sckb = SharedKnowledgeBase::new();
    for (i, r) in records.into_iter().enumerate() {
        sckb.apply_record(r, i + 1)?;
    }
    Ok(sckb)
}

/// Writes a compacted log: one record per entry with its final count.
pub fn save_sckb(sckb: &SharedKnowledgeBase, path: &Path) -> Result<()> {
    write_lines(path, sckb.records())
}

pub fn validate_user_id(user_id: &str) -> Result<()> {
    let ok = !user_id.is_empty()
        && user_id.len() <= 128
        && !user_id.starts_with('.')
        && user_id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::validation(format!("invalid user id {user_id:?}")))
    }
}

/// Read/write instrumentation, used to check phase isolation.
#[derive(Debug, Default)]
pub struct StoreCounters {
    pub sckb_reads: AtomicU64,
    pub sckb_writes: AtomicU64,
    pub profile_writes: AtomicU64,
    pub behavior_writes: AtomicU64,
}

impl StoreCounters {
    pub fn total_writes(&self) -> u64 {
        self.sckb_writes.load(Ordering::SeqCst)
            + self.profile_writes.load(Ordering::SeqCst)
            + self.behavior_writes.load(Ordering::SeqCst)
    }
}

/// Directory-backed store: `profiles/<user>.jsonl`, `behavior/<user>.jsonl`
/// and `sckb.jsonl`.
///
/// Writes are serialized per user and for the SCKB. Readers get `Arc`
/// snapshots and never block on writers of other users.
#[derive(Debug)]
pub struct ProfileStore {
    root: PathBuf,
    users: Mutex<HashMap<String, Arc<Mutex<Arc<PersonalProfile>>>>>,
    sckb: Mutex<Arc<SharedKnowledgeBase>>,
    sckb_snapshot: RwLock<Arc<SharedKnowledgeBase>>,
    opted_out: RwLock<HashSet<String>>,
    counters: StoreCounters,
}

impl ProfileStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(root.join("profiles"))?;
        std::fs::create_dir_all(root.join("behavior"))?;
        let sckb = Arc::new(load_sckb(&root.join("sckb.jsonl"))?);
        Ok(Self {
            root,
            users: Mutex::new(HashMap::new()),
            sckb: Mutex::new(sckb.clone()),
            sckb_snapshot: RwLock::new(sckb),
            opted_out: RwLock::new(HashSet::new()),
            counters: StoreCounters::default(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn counters(&self) -> &StoreCounters {
        &self.counters
    }

    pub fn profile_path(&self, user_id: &str) -> PathBuf {
        self.root.join("profiles").join(format!("{user_id}.jsonl"))
    }

    pub fn behavior_path(&self, user_id: &str) -> PathBuf {
        self.root.join("behavior").join(format!("{user_id}.jsonl"))
    }

    pub fn sckb_path(&self) -> PathBuf {
        self.root.join("sckb.jsonl")
    }

    /// Sharing is all-or-nothing per user; everyone shares unless opted out.
    pub fn set_sharing(&self, user_id: &str, enabled: bool) {
        let mut set = self.opted_out.write().unwrap();
        if enabled {
            set.remove(user_id);
        } else {
            set.insert(user_id.to_string());
        }
    }

    pub fn sharing_enabled(&self, user_id: &str) -> bool {
        !self.opted_out.read().unwrap().contains(user_id)
    }

    fn user_slot(&self, user_id: &str) -> Result<Arc<Mutex<Arc<PersonalProfile>>>> {
        validate_user_id(user_id)?;
        let mut users = self.users.lock().unwrap();
        if let Some(slot) = users.get(user_id) {
            return Ok(slot.clone());
        }
        let profile = load_profile(&self.profile_path(user_id), user_id)?;
        let slot = Arc::new(Mutex::new(Arc::new(profile)));
        users.insert(user_id.to_string(), slot.clone());
        Ok(slot)
    }

    pub fn profile(&self, user_id: &str) -> Result<Arc<PersonalProfile>> {
        let slot = self.user_slot(user_id)?;
        let snapshot = slot.lock().unwrap().clone();
        Ok(snapshot)
    }

    pub fn user_exists(&self, user_id: &str) -> bool {
        validate_user_id(user_id).is_ok()
            && (self.users.lock().unwrap().contains_key(user_id)
                || self.profile_path(user_id).exists())
    }

    pub fn record_entry(&self, entry: ProfileEntry) -> Result<()> {
        let slot = self.user_slot(&entry.user_id)?;
        let mut guard = slot.lock().unwrap();
        let mut next = PersonalProfile::clone(&guard);
        let log = self.profile_path(&next.user_id);
        record_entry(&mut next, entry, &log)?;
        *guard = Arc::new(next);
        self.counters.profile_writes.fetch_add(1, Ordering::SeqCst);
        Ok(())
    }

    /// Records a fresh entry, assigning `entry_id` when it is empty. The
    /// timestamp is raised to the newest existing one so concurrent sessions
    /// of one user cannot break the ordering.
    pub fn record_new_entry(&self, mut entry: ProfileEntry) -> Result<ProfileEntry> {
        let slot = self.user_slot(&entry.user_id)?;
        let mut guard = slot.lock().unwrap();
        let mut next = PersonalProfile::clone(&guard);
        if let Some(last) = next.entries.last() {
            entry.timestamp = entry.timestamp.max(last.timestamp);
        }
        if entry.entry_id.is_empty() {
            let mut n = next.len() + 1;
            loop {
                let id = format!("{}-{n}", entry.user_id);
                if !next.entries.iter().any(|e| e.entry_id == id) {
                    entry.entry_id = id;
                    break;
                }
                n += 1;
            }
        }
        let log = self.profile_path(&next.user_id);
        record_entry(&mut next, entry.clone(), &log)?;
        *guard = Arc::new(next);
        self.counters.profile_writes.fetch_add(1, Ordering::SeqCst);
        Ok(entry)
    }

    pub fn append_behavior(&self, user_id: &str, record: &BehaviorRecord) -> Result<()> {
        let slot = self.user_slot(user_id)?;
        let _guard = slot.lock().unwrap();
        append_lines(&self.behavior_path(user_id), std::slice::from_ref(record))?;
        self.counters.behavior_writes.fetch_add(1, Ordering::SeqCst);
        Ok(())
    }

    pub fn behavior(&self, user_id: &str) -> Result<Vec<BehaviorRecord>> {
        validate_user_id(user_id)?;
        read_records(&self.behavior_path(user_id))
    }

    /// Snapshot of the SCKB. Counted, so callers that must not read it can be
    /// checked.
    pub fn sckb(&self) -> Arc<SharedKnowledgeBase> {
        self.counters.sckb_reads.fetch_add(1, Ordering::SeqCst);
        self.sckb_snapshot.read().unwrap().clone()
    }

    /// Merges unless the contributing user opted out of sharing.
    pub fn merge_into_sckb(&self, entry: &ProfileEntry) -> Result<Option<MergeOutcome>> {
        if !self.sharing_enabled(&entry.user_id) {
            return Ok(None);
        }
        let mut guard = self.sckb.lock().unwrap();
        let mut next = SharedKnowledgeBase::clone(&guard);
        let outcome = merge_into_sckb(&mut next, entry, &self.sckb_path())?;
        let next = Arc::new(next);
        *guard = next.clone();
        *self.sckb_snapshot.write().unwrap() = next;
        self.counters.sckb_writes.fetch_add(1, Ordering::SeqCst);
        Ok(Some(outcome))
    }

    /// SCKB size without counting as a recommendation read.
    pub fn sckb_stats(&self) -> SckbStats {
        let s = self.sckb_snapshot.read().unwrap();
        SckbStats {
            entries: s.len(),
            contributions: s.total_contributions(),
        }
    }

    /// Appends validated entries from another log (used by `profile import`).
    pub fn import_entries(&self, user_id: &str, entries: Vec<ProfileEntry>) -> Result<usize> {
        let n = entries.len();
        for (i, e) in entries.into_iter().enumerate() {
            if e.user_id != user_id {
                return Err(Error::Record {
                    record: i + 1,
                    message: format!("entry belongs to user {:?}", e.user_id),
                });
            }
            self.record_entry(e)?;
        }
        Ok(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SckbStats {
    pub entries: usize,
    pub contributions: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    fn entry(id: &str, user: &str, ts: i64, kws: &[&str]) -> ProfileEntry {
        ProfileEntry::new(id, user, ts, kws.join(" "), s(kws))
    }

    #[test]
    fn record_appends_and_persists() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("u.jsonl");
        let mut p = PersonalProfile::new("u");
        record_entry(&mut p, entry("1", "u", 5, &["java"]), &log).unwrap();
        assert_eq!(p.len(), 1);
        record_entry(&mut p, entry("2", "u", 5, &["coffe"]), &log).unwrap();
        assert_eq!(load_profile(&log, "u").unwrap(), p);

        let err = record_entry(&mut p, entry("3", "u", 4, &["x"]), &log);
        assert!(matches!(err, Err(Error::Validation(_))));
        let err = record_entry(&mut p, entry("4", "v", 9, &["x"]), &log);
        assert!(matches!(err, Err(Error::Validation(_))));
        let err = record_entry(&mut p, entry("2", "u", 9, &["x"]), &log);
        assert!(matches!(err, Err(Error::Validation(_))));
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn write_failure_leaves_profile_unchanged() {
        let dir = tempfile::tempdir().unwrap();
        // a directory where the log file should be
        let log = dir.path().join("blocked");
        std::fs::create_dir(&log).unwrap();
        let mut p = PersonalProfile::new("u");
        let err = record_entry(&mut p, entry("1", "u", 1, &["java"]), &log);
        assert!(matches!(err, Err(Error::Storage(_))));
        assert!(p.is_empty());
    }

    #[test]
    fn vector_counts() {
        let e = entry("1", "u", 1, &["java"]);
        assert_eq!(entry_vector(&e), TermVector::from_terms(["java"]));

        let mut e = entry("1", "u", 1, &["java"]);
        e.selected_terms.push(DisambiguatedTerm {
            keyword: "java".into(),
            sense_id: "j1".into(),
            words: s(&["island", "indonesia"]),
            score: 0.0,
        });
        e.extracted_meta_keywords
            .push(MetaKeyword::new(s(&["island", "volcano"])).unwrap());
        e.selected_concepts.push("travel-asia".into());
        let v = entry_vector(&e);
        assert_eq!(v.get("island"), 2.0);
        assert_eq!(v.get("java"), 1.0);
        assert_eq!(v.get("travel"), 1.0);
        assert_eq!(v.get("asia"), 1.0);
    }

    #[test]
    fn sckb_merge_dedup_and_anonymize() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("sckb.jsonl");
        let mut kb = SharedKnowledgeBase::new();
        merge_into_sckb(&mut kb, &entry("a", "u1", 1, &["java"]), &log).unwrap();
        assert_eq!(kb.len(), 1);
        assert_eq!(kb.contributor_count("kb-1"), Some(1));
        assert_eq!(kb.entries()[0].user_id, "");
        assert_eq!(kb.entries()[0].entry_id, "kb-1");

        let out = merge_into_sckb(&mut kb, &entry("b", "u2", 2, &["java"]), &log).unwrap();
        assert_eq!(
            out,
            MergeOutcome::Incremented { entry_id: "kb-1".into(), contributor_count: 2 }
        );
        assert_eq!(kb.len(), 1);
        merge_into_sckb(&mut kb, &entry("c", "u2", 3, &["python"]), &log).unwrap();
        assert_eq!(load_sckb(&log).unwrap(), kb);
    }

    #[test]
    fn sckb_same_entry_n_times() {
        let mut kb = SharedKnowledgeBase::new();
        let e = entry("a", "u1", 1, &["java", "island"]);
        for _ in 0..7 {
            kb.merge(&e);
        }
        assert_eq!(kb.len(), 1);
        assert_eq!(kb.contributor_count("kb-1"), Some(7));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        let mut p = PersonalProfile::new("u");
        for i in 0..3 {
            p.push(entry(&i.to_string(), "u", i, &["java"])).unwrap();
        }
        save_profile(&p, &path).unwrap();
        assert_eq!(load_profile(&path, "u").unwrap(), p);

        let kb_path = dir.path().join("kb.jsonl");
        let mut kb = SharedKnowledgeBase::new();
        kb.merge(&entry("x", "u", 1, &["a"]));
        kb.merge(&entry("y", "u", 1, &["a"]));
        save_sckb(&kb, &kb_path).unwrap();
        assert_eq!(load_sckb(&kb_path).unwrap(), kb);
    }

    #[test]
    fn truncated_record_reports_index() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        let mut p = PersonalProfile::new("u");
        for i in 0..3 {
            p.push(entry(&i.to_string(), "u", i, &["java"])).unwrap();
        }
        save_profile(&p, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, &text[..text.len() - 10]).unwrap();
        match load_profile(&path, "u") {
            Err(Error::Record { record, .. }) => assert_eq!(record, 3),
            other => panic!("expected record error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_empty_store() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        std::fs::write(&path, "").unwrap();
        assert!(load_profile(&path, "u").unwrap().is_empty());
        assert!(load_sckb(&path).unwrap().is_empty());
    }

    #[test]
    fn sckb_log_rejects_user_ids() {
        let line = serde_json::to_string(&SckbRecord {
            entry: entry("a", "leak", 1, &["x"]),
            contributor_count: 1,
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kb.jsonl");
        std::fs::write(&path, line).unwrap();
        assert!(matches!(load_sckb(&path), Err(Error::Record { record: 1, .. })));
    }

    #[test]
    fn query_entries_newest_first() {
        let mut p = PersonalProfile::new("u");
        for i in 0..3 {
            p.push(entry(&i.to_string(), "u", i, &["java"])).unwrap();
        }
        let ids: Vec<_> = query_entries(&p, 2).into_iter().map(|e| e.entry_id).collect();
        assert_eq!(ids, ["2", "1"]);
        assert!(query_entries(&p, 0).is_empty());
        assert!(query_entries(&PersonalProfile::new("u"), 5).is_empty());
    }

    #[test]
    fn directory_store() {
        let dir = tempfile::tempdir().unwrap();
        let store = ProfileStore::open(dir.path()).unwrap();
        store.record_entry(entry("1", "alice", 1, &["java"])).unwrap();
        store.merge_into_sckb(&entry("1", "alice", 1, &["java"])).unwrap();
        store.set_sharing("bob", false);
        assert_eq!(store.merge_into_sckb(&entry("2", "bob", 1, &["x"])).unwrap(), None);
        assert!(matches!(store.profile("../etc"), Err(Error::Validation(_))));

        let reopened = ProfileStore::open(dir.path()).unwrap();
        assert_eq!(reopened.profile("alice").unwrap().len(), 1);
        assert_eq!(reopened.sckb().len(), 1);
        assert_eq!(reopened.counters().sckb_reads.load(Ordering::SeqCst), 1);
        assert!(reopened.user_exists("alice"));
        assert!(!reopened.user_exists("carol"));
    }
}
