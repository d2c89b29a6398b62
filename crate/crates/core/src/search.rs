//! Local corpus index, Boolean evaluation, TF-IDF ranking and the adapter
//! interface shared by the local engine and external (baseline) engines.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, LazyLock};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::behavior::{extract_page_metadata, PageMetadata};
use crate::error::{Error, Result};
use crate::lexicon::{analyze_text, StopwordList};
use crate::query::{parse_query, BooleanQuery, Node};
use crate::vector::{cosine, TermVector};

/// Header line of serialized index files.
pub const INDEX_MAGIC: &[u8] = b"CTXIDX1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: u64,
    pub url: String,
    pub title: String,
    pub body_terms: Vec<String>,
    pub metadata: PageMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedDoc {
    pub url: String,
    pub title: String,
    pub metadata: PageMetadata,
    pub tf: TermVector,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Index {
    pub postings: BTreeMap<String, Vec<u64>>,
    pub doc_count: usize,
    pub term_doc_freq: BTreeMap<String, usize>,
    pub docs: BTreeMap<u64, IndexedDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub doc_id: u64,
    pub url: String,
    pub title: String,
    pub score: f64,
    pub rank: usize,
}

static SCRIPT_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?is)<(script|style|head)\b.*?</(script|style|head)\s*>").unwrap());
static TAG_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<[^>]*>").unwrap());

/// Visible body text: markup with head, scripts and styles removed.
pub fn body_text(document: &str) -> String {
    let stripped = SCRIPT_RE.replace_all(document, " ");
    TAG_RE.replace_all(&stripped, " ").into_owned()
}

pub fn parse_document(doc_id: u64, url: &str, html: &str, stopwords: &StopwordList) -> Document {
    let metadata = extract_page_metadata(html, url);
    Document {
        doc_id,
        url: url.to_string(),
        title: metadata.title.clone(),
        body_terms: analyze_text(&body_text(html), stopwords),
        metadata,
    }
}

/// Reads every `.html` file in `dir` in file-name order; ids start at 1.
/// An optional `manifest.tsv` maps `file name<TAB>url`; other files get
/// `file:<name>` urls.
pub fn load_corpus(dir: impl AsRef<Path>, stopwords: &StopwordList) -> Result<Vec<Document>> {
    let dir = dir.as_ref();
    let mut manifest = HashMap::new();
    let manifest_path = dir.join("manifest.tsv");
    if manifest_path.exists() {
        let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::load(&manifest_path, e))?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((name, url)) = line.split_once('\t') else {
                return Err(Error::Parse { line: i + 1, message: "expected file<TAB>url".into() });
            };
            manifest.insert(name.trim().to_string(), url.trim().to_string());
        }
    }
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map_err(|e| Error::load(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".html"))
        .collect();
    names.sort();
    names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let path = dir.join(name);
            let html = std::fs::read_to_string(&path).map_err(|e| Error::load(&path, e))?;
            let url = manifest.get(name).cloned().unwrap_or_else(|| format!("file:{name}"));
            Ok(parse_document(i as u64 + 1, &url, &html, stopwords))
        })
        .collect()
}

/// Postings cover body, title and meta-keyword terms.
pub fn index_corpus(docs: &[Document], stopwords: &StopwordList) -> Result<Index> {
    let mut index = Index::default();
    for doc in docs {
        if index.docs.contains_key(&doc.doc_id) {
            return Err(Error::validation(format!("duplicate doc id {}", doc.doc_id)));
        }
        let mut tf = TermVector::from_terms(&doc.body_terms);
        tf.merge(&TermVector::from_terms(analyze_text(&doc.title, stopwords)));
        for raw in &doc.metadata.meta_keywords_raw {
            tf.merge(&TermVector::from_terms(analyze_text(raw, stopwords)));
        }
        for term in tf.terms() {
            index.postings.entry(term.to_string()).or_default().push(doc.doc_id);
            *index.term_doc_freq.entry(term.to_string()).or_insert(0) += 1;
        }
        index.docs.insert(
            doc.doc_id,
            IndexedDoc {
                url: doc.url.clone(),
                title: doc.title.clone(),
                metadata: doc.metadata.clone(),
                tf,
            },
        );
    }
    for list in index.postings.values_mut() {
        list.sort_unstable();
    }
    index.doc_count = index.docs.len();
    Ok(index)
}

impl Index {
    pub fn idf(&self, term: &str) -> f64 {
        match self.term_doc_freq.get(term) {
            Some(&df) if df > 0 => (self.doc_count as f64 / df as f64).ln(),
            _ => 0.0,
        }
    }

    fn postings_set(&self, term: &str) -> BTreeSet<u64> {
        self.postings
            .get(term)
            .map(|p| p.iter().copied().collect())
            .unwrap_or_default()
    }

    pub fn doc_by_url(&self, url: &str) -> Option<(u64, &IndexedDoc)> {
        self.docs.iter().find(|(_, d)| d.url == url).map(|(id, d)| (*id, d))
    }

    fn tfidf(&self, tf: &TermVector) -> TermVector {
        tf.iter().map(|(t, w)| (t, w * self.idf(t))).collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(INDEX_MAGIC)?;
        f.write_all(b"\n")?;
        serde_json::to_writer(&mut f, self).map_err(std::io::Error::other)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::load(path, e))?;
        let body = bytes
            .strip_prefix(INDEX_MAGIC)
            .and_then(|b| b.strip_prefix(b"\n"))
            .ok_or_else(|| Error::Parse { line: 1, message: "missing CTXIDX1 header".into() })?;
        serde_json::from_slice(body).map_err(|e| Error::Parse {
            line: e.line() + 1,
            message: e.to_string(),
        })
    }
}

fn eval_node(node: &Node, idx: &Index) -> BTreeSet<u64> {
    match node {
        Node::Term(t) => idx.postings_set(t),
        Node::And(children) => {
            let mut iter = children.iter();
            let Some(first) = iter.next() else { return BTreeSet::new() };
            let mut acc = eval_node(first, idx);
            for c in iter {
                if acc.is_empty() {
                    break;
                }
                let next = eval_node(c, idx);
                acc.retain(|d| next.contains(d));
            }
            acc
        }
        Node::Or(children) => children.iter().flat_map(|c| eval_node(c, idx)).collect(),
    }
}

/// Exact set semantics; unknown terms match nothing.
pub fn evaluate_boolean(q: &BooleanQuery, idx: &Index) -> BTreeSet<u64> {
    eval_node(&q.root, idx)
}

/// All matching documents ranked, score descending then doc id ascending.
///
/// Score is the cosine between the document's TF-IDF vector and the
/// IDF-weighted context. When the weighted context is empty the score is the
/// summed IDF of the query terms the document contains.
pub fn rank_all(q: &BooleanQuery, context: &TermVector, idx: &Index) -> Vec<SearchHit> {
    let matched = evaluate_boolean(q, idx);
    let weighted_context = idx.tfidf(context);
    let mut query_terms = q.terms();
    query_terms.sort_unstable();
    query_terms.dedup();
    let mut hits: Vec<SearchHit> = matched
        .into_iter()
        .map(|id| {
            let doc = &idx.docs[&id];
            let score = if weighted_context.is_empty() {
                query_terms
                    .iter()
                    .filter(|t| doc.tf.get(t) > 0.0)
                    .map(|t| idx.idf(t))
                    .sum()
            } else {
                cosine(&idx.tfidf(&doc.tf), &weighted_context)
            };
            SearchHit {
                doc_id: id,
                url: doc.url.clone(),
                title: doc.title.clone(),
                score,
                rank: 0,
            }
        })
        .collect();
    hits.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.doc_id.cmp(&b.doc_id))
    });
    for (i, h) in hits.iter_mut().enumerate() {
        h.rank = i + 1;
    }
    hits
}

/// One page (1-based) of [`rank_all`].
pub fn search_ranked(
    q: &BooleanQuery,
    context: &TermVector,
    idx: &Index,
    page_size: usize,
    page: usize,
) -> Vec<SearchHit> {
    paginate(rank_all(q, context, idx), page_size, page)
}

pub fn paginate(hits: Vec<SearchHit>, page_size: usize, page: usize) -> Vec<SearchHit> {
    if page == 0 || page_size == 0 {
        return Vec::new();
    }
    hits.into_iter().skip((page - 1) * page_size).take(page_size).collect()
}

/// A search engine reachable through serialized Boolean queries.
pub trait SearchAdapter: Send + Sync {
    /// Hits for a 1-based page; a page past the end is empty.
    fn submit(&self, query: &str, page: usize) -> Result<Vec<SearchHit>>;
}

/// Adapter over the local index, ranking by the query's own terms.
#[derive(Debug, Clone)]
pub struct LocalAdapter {
    index: Arc<Index>,
    page_size: usize,
}

impl LocalAdapter {
    pub fn new(index: Arc<Index>, page_size: usize) -> Self {
        Self { index, page_size }
    }
}

impl SearchAdapter for LocalAdapter {
    fn submit(&self, query: &str, page: usize) -> Result<Vec<SearchHit>> {
        let q = parse_query(query)?;
        let context = TermVector::from_terms(q.terms());
        Ok(search_ranked(&q, &context, &self.index, self.page_size, page))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ReplayEntry {
    query: String,
    #[serde(default)]
    hits: Vec<SearchHit>,
    #[serde(default)]
    error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ReplayFile {
    page_size: usize,
    queries: Vec<ReplayEntry>,
}

/// Serves canned results from a JSON fixture:
/// `{"page_size": n, "queries": [{"query": "...", "hits": [...]}, {"query": "...", "error": "timeout"}]}`.
/// Unknown queries return no hits.
#[derive(Debug, Clone)]
pub struct ReplayAdapter {
    page_size: usize,
    entries: HashMap<String, ReplayEntry>,
}

impl ReplayAdapter {
    pub fn parse(json: &str) -> Result<Self> {
        let file: ReplayFile =
            serde_json::from_str(json).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
        if file.page_size == 0 {
            return Err(Error::validation("replay page_size must be positive"));
        }
        Ok(Self {
            page_size: file.page_size,
            entries: file.queries.into_iter().map(|e| (e.query.clone(), e)).collect(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::load(path, e))?;
        Self::parse(&text)
    }
}

impl SearchAdapter for ReplayAdapter {
    fn submit(&self, query: &str, page: usize) -> Result<Vec<SearchHit>> {
        let Some(entry) = self.entries.get(query) else {
            return Ok(Vec::new());
        };
        if let Some(err) = &entry.error {
            return Err(Error::Adapter(err.clone()));
        }
        Ok(paginate(entry.hits.clone(), self.page_size, page))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stop() -> StopwordList {
        StopwordList::new(["the", "a", "of"]).unwrap()
    }

    fn doc(id: u64, terms: &[&str]) -> Document {
        Document {
            doc_id: id,
            url: format!("http://d/{id}"),
            title: String::new(),
            body_terms: terms.iter().map(|s| s.to_string()).collect(),
            metadata: PageMetadata::default(),
        }
    }

    fn q(text: &str) -> BooleanQuery {
        parse_query(text).unwrap()
    }

    #[test]
    fn index_postings_and_errors() {
        let mut d3 = doc(3, &["c"]);
        d3.title = "The Title".into();
        d3.metadata.meta_keywords_raw = vec!["meta word".into()];
        let idx = index_corpus(&[doc(1, &["a", "b"]), doc(2, &["a"]), d3], &stop()).unwrap();
        assert_eq!(idx.postings["a"], [1, 2]);
        assert_eq!(idx.postings["titl"], [3]);
        assert_eq!(idx.postings["meta"], [3]);
        assert_eq!(idx.doc_count, 3);
        assert_eq!(idx.postings.len(), 6);
        assert!(index_corpus(&[], &stop()).unwrap().postings.is_empty());
        assert!(matches!(
            index_corpus(&[doc(1, &["a"]), doc(1, &["b"])], &stop()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn boolean_semantics() {
        let idx = index_corpus(&[doc(1, &["a", "b"]), doc(2, &["a"])], &stop()).unwrap();
        assert_eq!(evaluate_boolean(&q("a AND b"), &idx), BTreeSet::from([1]));
        assert_eq!(evaluate_boolean(&q("a OR b"), &idx), BTreeSet::from([1, 2]));
        assert!(evaluate_boolean(&q("zzz"), &idx).is_empty());
    }

    #[test]
    fn ranking_prefers_higher_tf() {
        // equal lengths; "x" twice in doc 1, once in doc 2; "y"/"z" pad
        let docs = [doc(1, &["x", "x", "y"]), doc(2, &["x", "z", "w"]), doc(3, &["q", "r", "s"])];
        let idx = index_corpus(&docs, &stop()).unwrap();
        let hits = search_ranked(&q("x"), &TermVector::from_terms(["x"]), &idx, 10, 1);
        assert_eq!(hits.iter().map(|h| h.doc_id).collect::<Vec<_>>(), [1, 2]);
        assert_eq!(hits[0].rank, 1);
        assert_eq!(hits[1].rank, 2);
        // idf(x) = ln(3/2), idf(y) = idf(z) = idf(w) = ln 3
        let (ix, i3) = ((1.5f64).ln(), 3f64.ln());
        let c1 = 2.0 * ix / ((2.0 * ix).powi(2) + i3 * i3).sqrt();
        let c2 = ix / (ix * ix + 2.0 * i3 * i3).sqrt();
        assert!((hits[0].score - c1).abs() < 1e-12);
        assert!((hits[1].score - c2).abs() < 1e-12);
    }

    #[test]
    fn single_hit_and_empty() {
        let idx = index_corpus(&[doc(1, &["a"]), doc(2, &["b"])], &stop()).unwrap();
        let hits = search_ranked(&q("a"), &TermVector::new(), &idx, 10, 1);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].rank, 1);
        // zero context: summed idf of matched query terms
        assert!((hits[0].score - 2f64.ln()).abs() < 1e-12);
        assert!(search_ranked(&q("zzz"), &TermVector::new(), &idx, 10, 1).is_empty());
    }

    #[test]
    fn pagination() {
        let docs: Vec<_> = (1..=5).map(|i| doc(i, &["a"])).collect();
        let idx = index_corpus(&docs, &stop()).unwrap();
        let ctx = TermVector::from_terms(["a"]);
        let p2 = search_ranked(&q("a"), &ctx, &idx, 2, 2);
        assert_eq!(p2.iter().map(|h| h.rank).collect::<Vec<_>>(), [3, 4]);
        assert!(search_ranked(&q("a"), &ctx, &idx, 2, 4).is_empty());
        assert!(search_ranked(&q("a"), &ctx, &idx, 2, 0).is_empty());
    }

    #[test]
    fn index_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("idx");
        let idx = index_corpus(&[doc(1, &["a", "b"])], &stop()).unwrap();
        idx.save(&path).unwrap();
        assert!(std::fs::read(&path).unwrap().starts_with(b"CTXIDX1\n"));
        assert_eq!(Index::load(&path).unwrap(), idx);
        std::fs::write(&path, b"{}").unwrap();
        assert!(matches!(Index::load(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn corpus_directory_with_manifest() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("b.html"), "<title>Bee</title><body>honey</body>").unwrap();
        std::fs::write(
            dir.path().join("a.html"),
            r#"<head><title>Ant</title><meta name="keywords" content="insect"></head><body>colony of ants</body>"#,
        )
        .unwrap();
        std::fs::write(dir.path().join("manifest.tsv"), "a.html\thttp://ants.example\n").unwrap();
        let docs = load_corpus(dir.path(), &stop()).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].url, "http://ants.example");
        assert_eq!(docs[0].body_terms, ["coloni", "ant"]);
        assert_eq!(docs[1].url, "file:b.html");
        assert_eq!(docs[0].metadata.meta_keywords_raw, ["insect"]);
    }

    #[test]
    fn replay_adapter() {
        let json = r#"{"page_size": 1, "queries": [
            {"query": "java", "hits": [
                {"doc_id": 1, "url": "u1", "title": "t", "score": 1.0, "rank": 1},
                {"doc_id": 2, "url": "u2", "title": "t", "score": 0.5, "rank": 2}]},
            {"query": "slow", "error": "timeout"}]}"#;
        let a = ReplayAdapter::parse(json).unwrap();
        assert_eq!(a.submit("java", 1).unwrap()[0].url, "u1");
        assert_eq!(a.submit("java", 2).unwrap()[0].url, "u2");
        assert!(a.submit("java", 3).unwrap().is_empty());
        assert!(matches!(a.submit("slow", 1), Err(Error::Adapter(_))));
        assert!(a.submit("other", 1).unwrap().is_empty());
    }

    #[test]
    fn local_adapter_parses_serialized_query() {
        let idx = Arc::new(index_corpus(&[doc(1, &["a", "b"]), doc(2, &["a"])], &stop()).unwrap());
        let a = LocalAdapter::new(idx, 10);
        assert_eq!(a.submit("a AND (b)", 1).unwrap().len(), 1);
        assert!(matches!(a.submit("(a", 1), Err(Error::Validation(_))));
    }
}
