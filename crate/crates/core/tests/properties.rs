//! Property tests for invariants of the text pipeline, recommendation,
//! query construction, storage and statistics.

use std::collections::{BTreeMap, BTreeSet};

use ctxsearch_core::behavior::{build_meta_keywords, MetaKeyword, PageMetadata, MAX_META_KEYWORDS_PER_PAGE, MAX_META_KEYWORD_WORDS};
use ctxsearch_core::eval::report::Metric;
use ctxsearch_core::eval::stats::chi_square_sf;
use ctxsearch_core::eval::{aggregate_report, kruskal_wallis, SimulationRow};
use ctxsearch_core::lexicon::{normalize_text, DisambiguatedTerm, StopwordList};
use ctxsearch_core::profile::{load_sckb, profile_from_entries, save_sckb, ProfileEntry, ProfileStore, SharedKnowledgeBase};
use ctxsearch_core::query::{build_query, parse_query, serialize_query, BooleanQuery, Node};
use ctxsearch_core::recommend::{nn_two_step, recommend_meta_keywords, recommend_senses, RecommenderConfig};
use ctxsearch_core::search::{evaluate_boolean, index_corpus, Document};
use ctxsearch_core::session::{Phase, SessionMetrics};
use ctxsearch_core::vector::TermVector;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const STOP: &[&str] = &["the", "a", "of", "and", "is", "in", "to", "be", "it"];

fn stopwords() -> StopwordList {
    StopwordList::new(STOP).unwrap()
}

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        prop::sample::select(STOP).prop_map(str::to_string),
        "[a-z]{1,9}",
        "[A-Z][a-z]{2,7}",
    ]
}

fn text() -> impl Strategy<Value = String> {
    prop::collection::vec((word(), prop::sample::select(&[" ", ", ", "-", ". ", "  "][..])), 0..30)
        .prop_map(|v| v.into_iter().map(|(w, s)| w + s).collect())
}

/// Small integer vectors over `v0..v{vocab}`.
fn sparse(vocab: usize) -> impl Strategy<Value = Vec<(usize, u8)>> {
    prop::collection::vec((0..vocab, 1u8..4), 1..6)
}

fn to_vector(v: &[(usize, u8)]) -> TermVector {
    let mut t = TermVector::new();
    for &(i, w) in v {
        t.add(&format!("v{i}"), w as f64);
    }
    t
}

fn node(vocab: usize) -> impl Strategy<Value = Node> {
    let leaf = (0..vocab).prop_map(|i| Node::Term(format!("w{i}")));
    leaf.prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..4).prop_map(Node::And),
            prop::collection::vec(inner, 1..4).prop_map(Node::Or),
        ]
    })
}

fn truth(node: &Node, terms: &BTreeSet<String>) -> bool {
    match node {
        Node::Term(t) => terms.contains(t),
        Node::And(c) => c.iter().all(|n| truth(n, terms)),
        Node::Or(c) => c.iter().any(|n| truth(n, terms)),
    }
}

/// Text form the parser reads back to the same tree: every group is
/// parenthesized and single-child groups are ORs.
fn canonical(node: Node) -> Node {
    match node {
        Node::Term(t) => Node::Term(t),
        Node::And(c) if c.len() == 1 => Node::Or(c.into_iter().map(canonical).collect()),
        Node::And(c) => Node::And(c.into_iter().map(canonical).collect()),
        Node::Or(c) => Node::Or(c.into_iter().map(canonical).collect()),
    }
}

fn groups() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0u32..12, 1..8), 2..5)
        .prop_map(|g| g.into_iter().map(|v| v.into_iter().map(f64::from).collect()).collect())
}

fn median(v: &[f64]) -> f64 {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn normalize_is_idempotent(t in text()) {
        let sw = stopwords();
        let once = normalize_text(&t, &sw);
        let twice = normalize_text(&once.join(" "), &sw);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn normalize_output_is_clean(t in text()) {
        let sw = stopwords();
        let out = normalize_text(&t, &sw);
        let unique: BTreeSet<&String> = out.iter().collect();
        prop_assert_eq!(unique.len(), out.len());
        for w in &out {
            prop_assert!(!sw.contains(w));
            prop_assert!(!w.is_empty());
            prop_assert!(w.chars().all(|c| c.is_alphanumeric() && !c.is_uppercase()));
        }
    }

    #[test]
    fn meta_keywords_respect_caps(
        raw in prop::collection::vec(text(), 0..9),
        title in text(),
        query in prop::collection::vec("[a-z]{1,6}", 0..3),
    ) {
        let meta = PageMetadata { url: "u".into(), title, meta_keywords_raw: raw, description: String::new() };
        let sw = stopwords();
        let out = build_meta_keywords(&meta, &query, &sw);
        prop_assert!(out.len() <= MAX_META_KEYWORDS_PER_PAGE);
        let distinct: BTreeSet<&MetaKeyword> = out.iter().collect();
        prop_assert_eq!(distinct.len(), out.len());
        for mk in &out {
            prop_assert!((1..=MAX_META_KEYWORD_WORDS).contains(&mk.words().len()));
            for w in mk.words() {
                prop_assert!(!query.contains(w));
                prop_assert!(!sw.contains(w));
            }
        }
    }

    #[test]
    fn nn_matches_full_scan(
        query in sparse(30),
        entries in prop::collection::vec(sparse(30), 0..40),
        k in 1usize..8,
    ) {
        let q = to_vector(&query);
        let store: Vec<(u64, TermVector)> =
            entries.iter().enumerate().map(|(i, e)| (i as u64, to_vector(e))).collect();
        // exact integer comparison of dot/norm via squared cross products
        let dot = |a: &[(usize, u8)], b: &[(usize, u8)]| -> i64 {
            let fa = counts(a);
            let fb = counts(b);
            fa.iter().map(|(t, x)| x * fb.get(t).copied().unwrap_or(0)).sum()
        };
        let qq = dot(&query, &query);
        let mut expect: Vec<(u64, i64, i64)> = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (i as u64, dot(&query, e), dot(e, e)))
            .filter(|&(_, d, _)| d > 0)
            .collect();
        expect.sort_by(|a, b| {
            let lhs = (b.1 * b.1) as i128 * a.2 as i128;
            let rhs = (a.1 * a.1) as i128 * b.2 as i128;
            lhs.cmp(&rhs).then(a.0.cmp(&b.0))
        });
        expect.truncate(k);
        let got = nn_two_step(&q, &store, k);
        let ids: Vec<u64> = got.iter().map(|h| h.0).collect();
        let expect_ids: Vec<u64> = expect.iter().map(|h| h.0).collect();
        prop_assert_eq!(ids, expect_ids);
        for ((_, s), (_, d, n)) in got.iter().zip(&expect) {
            let exact = *d as f64 / ((qq as f64).sqrt() * (*n as f64).sqrt());
            prop_assert!((s - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn boolean_evaluation_matches_truth_table(
        root in node(8),
        docs in prop::collection::vec(prop::collection::btree_set(0usize..8, 0..6), 1..25),
    ) {
        let corpus: Vec<Document> = docs
            .iter()
            .enumerate()
            .map(|(i, terms)| Document {
                doc_id: i as u64 + 1,
                url: format!("u{i}"),
                title: String::new(),
                body_terms: terms.iter().map(|t| format!("w{t}")).collect(),
                metadata: PageMetadata::default(),
            })
            .collect();
        let index = index_corpus(&corpus, &stopwords()).unwrap();
        let q = BooleanQuery { root };
        let expect: BTreeSet<u64> = corpus
            .iter()
            .filter(|d| truth(&q.root, &d.body_terms.iter().cloned().collect()))
            .map(|d| d.doc_id)
            .collect();
        prop_assert_eq!(evaluate_boolean(&q, &index), expect);
    }

    #[test]
    fn serialized_queries_parse_back(children in prop::collection::vec(node(10), 1..5)) {
        let q = BooleanQuery { root: canonical(Node::And(children)) };
        let q = match q.root {
            Node::Or(c) => BooleanQuery { root: Node::And(vec![Node::Or(c)]) },
            root => BooleanQuery { root },
        };
        let text = serialize_query(&q);
        let back = parse_query(&text).unwrap();
        prop_assert_eq!(serialize_query(&back), text);
        prop_assert_eq!(back.leaf_count(), q.leaf_count());
    }

    #[test]
    fn built_queries_respect_cap(
        keywords in prop::collection::btree_set("k[a-z]{1,4}", 1..5),
        senses in prop::collection::vec(prop::collection::vec("[a-z]{2,5}", 1..6), 0..4),
        metas in prop::collection::vec(prop::collection::btree_set("[a-z]{2,5}", 1..6), 0..5),
        cap in 5usize..25,
    ) {
        let keywords: Vec<String> = keywords.into_iter().collect();
        let terms: Vec<DisambiguatedTerm> = senses
            .into_iter()
            .enumerate()
            .map(|(i, words)| DisambiguatedTerm { keyword: keywords[0].clone(), sense_id: format!("s{i}"), words, score: 0.0 })
            .collect();
        let metas: Vec<MetaKeyword> = metas.into_iter().map(|w| MetaKeyword::new(w.into_iter().collect()).unwrap()).collect();
        let q = build_query(&keywords, &terms, &metas, &[], cap).unwrap();
        prop_assert!(q.leaf_count() <= cap);
        let leaves = q.terms();
        prop_assert_eq!(&leaves[..keywords.len()], keywords.iter().map(String::as_str).collect::<Vec<_>>());
        let Node::And(children) = &q.root else { panic!("root must be AND") };
        prop_assert!(children.iter().filter(|c| matches!(c, Node::Or(_))).count() <= 2);
        let total = keywords.len()
            + dedup_excluding(terms.iter().flat_map(|t| t.words.clone()), &keywords).len()
            + dedup_excluding(metas.iter().flat_map(|m| m.words().to_vec()), &keywords).len();
        prop_assert_eq!(q.leaf_count(), total.min(cap));
    }

    #[test]
    fn store_round_trips_entries(
        queries in prop::collection::vec(prop::collection::vec("[a-z]{1,8}", 1..4), 1..8),
        clicks in prop::collection::vec("[a-z]{1,10}", 0..4),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let written: Vec<ProfileEntry> = {
            let store = ProfileStore::open(dir.path()).unwrap();
            queries
                .iter()
                .enumerate()
                .map(|(i, kws)| {
                    let mut e = ProfileEntry::new("", "u-1", i as i64 * 10, kws.join(" "), kws.clone());
                    e.clicked_urls = clicks.iter().map(|c| format!("https://x/{c}")).collect();
                    store.record_new_entry(e).unwrap()
                })
                .collect()
        };
        let store = ProfileStore::open(dir.path()).unwrap();
        let profile = store.profile("u-1").unwrap();
        let read = ctxsearch_core::profile::query_entries(profile.as_ref(), usize::MAX);
        let mut read = read;
        read.reverse();
        prop_assert_eq!(read, written);
    }

    #[test]
    fn kruskal_wallis_ignores_value_order(g in groups(), rot in 0usize..4) {
        let a = kruskal_wallis(&g).unwrap();
        let mut shifted = g.clone();
        let n = shifted.len();
        shifted.rotate_left(rot % n);
        shifted.iter_mut().for_each(|v| v.reverse());
        let b = kruskal_wallis(&shifted).unwrap();
        prop_assert!((a.h - b.h).abs() < 1e-9);
        prop_assert!((a.p - b.p).abs() < 1e-9);
        prop_assert_eq!(a.df, n - 1);
    }

    #[test]
    fn kruskal_wallis_is_rank_based(g in groups()) {
        let a = kruskal_wallis(&g).unwrap();
        let t: Vec<Vec<f64>> = g.iter().map(|v| v.iter().map(|x| (x / 3.0).exp() * 5.0 - 2.0).collect()).collect();
        let b = kruskal_wallis(&t).unwrap();
        prop_assert!((a.h - b.h).abs() < 1e-9);
        prop_assert!(a.h >= 0.0);
        prop_assert!((0.0..=1.0).contains(&a.p));
    }

    #[test]
    fn chi_square_tail_matches_statrs(x in 0.0f64..60.0, df in 1u32..8) {
        let expect = ChiSquared::new(df as f64).unwrap().sf(x);
        prop_assert!((chi_square_sf(x, df as f64) - expect).abs() < 1e-10, "x={x} df={df}");
    }

    #[test]
    fn report_recomputes_from_rows(
        data in prop::collection::vec(prop::collection::vec((0u64..6, 0u64..9, 0u64..30, any::<bool>()), 2..6), 3..=3),
        tasks in 1usize..4,
    ) {
        let mut rows = Vec::new();
        for (phase, subjects) in Phase::ALL.into_iter().zip(&data) {
            for (s, &(queries, clicks, hits, found)) in subjects.iter().enumerate() {
                for t in 0..tasks {
                    rows.push(SimulationRow {
                        phase,
                        subject: s + 1,
                        user_id: format!("u{s}"),
                        task_id: format!("t{t}"),
                        found,
                        metrics: SessionMetrics { queries, clicks: clicks + t as u64, hits, urls: found as u64, elapsed_ms: 1000 * queries },
                    });
                }
            }
        }
        let report = aggregate_report(rows.clone()).unwrap();
        prop_assert_eq!(report.rows.len(), rows.len());
        for (phase, subjects) in Phase::ALL.into_iter().zip(&data) {
            let agg = &report.phases[&phase];
            prop_assert_eq!(agg.subjects, subjects.len());
            prop_assert_eq!(agg.found, subjects.iter().filter(|s| s.3).count() * tasks);
            let totals: Vec<f64> = subjects.iter().map(|s| (s.0 * tasks as u64) as f64).collect();
            prop_assert!((agg.per_subject[Metric::Queries.name()].median - median(&totals)).abs() < 1e-9);
        }
        let samples: Vec<Vec<f64>> = data
            .iter()
            .map(|subjects| subjects.iter().map(|s| (s.2 * tasks as u64) as f64).collect())
            .collect();
        let hits = report.tests.iter().find(|t| t.metric == Metric::Hits).unwrap();
        prop_assert!((hits.h - kruskal_wallis(&samples).unwrap().h).abs() < 1e-9);
        prop_assert_eq!(report.tests.len(), Metric::ALL.len());
    }
    #[test]
    fn sckb_merges_are_anonymous_and_counted(
        picks in prop::collection::vec((0usize..6, 0usize..4), 1..30),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let base: Vec<Vec<String>> = (0..6).map(|i| vec![format!("k{i}"), format!("x{}", i % 3)]).collect();
        let mut kb = SharedKnowledgeBase::new();
        let mut times = BTreeMap::new();
        for (n, &(which, user)) in picks.iter().enumerate() {
            let e = ProfileEntry::new(format!("u{user}-{n}"), format!("u{user}"), n as i64, "q", base[which].clone());
            kb.merge(&e);
            *times.entry(which).or_insert(0u64) += 1;
        }
        let records = kb.records();
        prop_assert_eq!(records.len(), times.len());
        for r in &records {
            prop_assert!(r.entry.user_id.is_empty());
            prop_assert!(!r.entry.entry_id.starts_with('u'));
            let which = base.iter().position(|b| *b == r.entry.query_keywords).unwrap();
            prop_assert_eq!(r.contributor_count, times[&which]);
        }
        prop_assert_eq!(kb.total_contributions(), picks.len() as u64);
        let path = dir.path().join("sckb.jsonl");
        save_sckb(&kb, &path).unwrap();
        prop_assert_eq!(load_sckb(&path).unwrap(), kb);
    }

    #[test]
    fn sense_ranking_ignores_entry_scale(
        history in prop::collection::vec(prop::collection::vec(0usize..12, 1..5), 0..10),
        senses in prop::collection::vec(prop::collection::btree_set(0usize..12, 1..4), 1..6),
        factor in 2usize..5,
    ) {
        let profile = |scale: usize| {
            let entries = history
                .iter()
                .enumerate()
                .map(|(i, words)| {
                    let kws: Vec<String> = words.iter().flat_map(|w| std::iter::repeat_n(format!("v{w}"), scale)).collect();
                    ProfileEntry::new(format!("u-{i}"), "u", i as i64, "q", kws)
                })
                .collect();
            profile_from_entries("u", entries).unwrap()
        };
        let candidates: BTreeMap<String, Vec<DisambiguatedTerm>> = BTreeMap::from([(
            "key".to_string(),
            senses
                .iter()
                .enumerate()
                .map(|(i, ws)| DisambiguatedTerm {
                    keyword: "key".into(),
                    sense_id: format!("s{i}"),
                    words: ws.iter().map(|w| format!("v{w}")).collect(),
                    score: 0.0,
                })
                .collect(),
        )]);
        let cfg = RecommenderConfig { sense_k: 10, ..RecommenderConfig::default() };
        let kw = ["key".to_string()];
        let a = &recommend_senses(&kw, &candidates, &profile(1), None, &cfg)["key"];
        let b = &recommend_senses(&kw, &candidates, &profile(factor), None, &cfg)["key"];
        prop_assert_eq!(a.iter().map(|c| &c.id).collect::<Vec<_>>(), b.iter().map(|c| &c.id).collect::<Vec<_>>());
        for (x, y) in a.iter().zip(b) {
            prop_assert!((x.score - y.score).abs() < 1e-12);
        }
        for w in a.windows(2) {
            prop_assert!(w[0].score >= w[1].score);
        }
        prop_assert!(a.iter().all(|c| (0.0..=1.0 + 1e-12).contains(&c.score)));
    }

    #[test]
    fn meta_recommendations_are_bounded(
        pages in prop::collection::vec(prop::collection::vec(prop::collection::btree_set(0usize..15, 1..6), 0..5), 1..8),
        context in prop::collection::vec(0usize..15, 1..6),
        limit in 1usize..8,
        shared_weight in 0.5f64..3.0,
    ) {
        let entries: Vec<ProfileEntry> = pages
            .iter()
            .enumerate()
            .map(|(i, metas)| {
                let mut e = ProfileEntry::new(format!("u-{i}"), "u", i as i64, "q", vec![format!("q{i}")]);
                e.extracted_meta_keywords = metas
                    .iter()
                    .map(|ws| MetaKeyword::new(ws.iter().map(|w| format!("v{w}")).collect()).unwrap())
                    .collect();
                e
            })
            .collect();
        let mut kb = SharedKnowledgeBase::new();
        entries.iter().for_each(|e| { kb.merge(e); });
        let profile = profile_from_entries("u", entries).unwrap();
        let cfg = RecommenderConfig { meta_keyword_limit: limit, shared_weight, ..RecommenderConfig::default() };
        let ctx = TermVector::from_terms(context.iter().map(|w| format!("v{w}")));
        let out = recommend_meta_keywords(&ctx, &profile, Some(&kb), &cfg);
        prop_assert!(out.len() <= limit);
        for w in out.windows(2) {
            prop_assert!(w[0].score >= w[1].score);
        }
        for c in &out {
            prop_assert!(c.item.words().len() <= MAX_META_KEYWORD_WORDS);
            prop_assert!(c.score > 0.0 && c.score <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn or_group_with_existing_keyword_never_shrinks(
        keywords in prop::collection::btree_set(0usize..6, 1..3),
        extra in prop::collection::vec(6usize..10, 1..3),
        docs in prop::collection::vec(prop::collection::btree_set(0usize..10, 0..7), 1..30),
    ) {
        let corpus: Vec<Document> = docs
            .iter()
            .enumerate()
            .map(|(i, terms)| Document {
                doc_id: i as u64 + 1,
                url: format!("u{i}"),
                title: String::new(),
                body_terms: terms.iter().map(|t| format!("w{t}")).collect(),
                metadata: PageMetadata::default(),
            })
            .collect();
        let index = index_corpus(&corpus, &stopwords()).unwrap();
        let kws: Vec<String> = keywords.iter().map(|k| format!("w{k}")).collect();
        let base = build_query(&kws, &[], &[], &[], 20).unwrap();
        let Node::And(mut children) = base.root.clone() else { panic!() };
        let mut group = vec![Node::Term(kws[0].clone())];
        group.extend(extra.iter().map(|e| Node::Term(format!("w{e}"))));
        children.push(Node::Or(group));
        let widened = BooleanQuery { root: Node::And(children) };
        let before = evaluate_boolean(&base, &index);
        let after = evaluate_boolean(&widened, &index);
        prop_assert!(before.is_subset(&after));
    }

}

fn counts(v: &[(usize, u8)]) -> BTreeMap<usize, i64> {
    let mut m = BTreeMap::new();
    for &(i, w) in v {
        *m.entry(i).or_insert(0) += w as i64;
    }
    m
}

fn dedup_excluding(words: impl Iterator<Item = String>, keywords: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for w in words {
        if !keywords.contains(&w) && !out.contains(&w) {
            out.push(w);
        }
    }
    out
}
