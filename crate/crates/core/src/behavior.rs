//! Behavior acquisition: page metadata extraction and capped meta-keyword
//! vectors built from the pages a user clicks.

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{normalize_text, StopwordList};
use crate::profile::ProfileEntry;

/// Words kept from each meta keyword.
pub const MAX_META_KEYWORD_WORDS: usize = 5;
/// Meta keywords kept per page.
pub const MAX_META_KEYWORDS_PER_PAGE: usize = 5;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageMetadata {
    pub url: String,
    pub title: String,
    pub meta_keywords_raw: Vec<String>,
    pub description: String,
}

/// A short keyword phrase of 1..=5 normalized words.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "MetaKeywordRepr")]
pub struct MetaKeyword {
    words: Vec<String>,
}

#[derive(Deserialize)]
struct MetaKeywordRepr {
    words: Vec<String>,
}

impl TryFrom<MetaKeywordRepr> for MetaKeyword {
    type Error = Error;

    fn try_from(r: MetaKeywordRepr) -> Result<Self> {
        MetaKeyword::new(r.words)
    }
}

impl MetaKeyword {
    pub fn new(words: Vec<String>) -> Result<Self> {
        if words.is_empty() || words.len() > MAX_META_KEYWORD_WORDS {
            return Err(Error::validation(format!(
                "meta keyword must have 1..={MAX_META_KEYWORD_WORDS} words, got {}",
                words.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = words.iter().find(|w| !seen.insert(w.as_str())) {
            return Err(Error::validation(format!("duplicate word {dup:?} in meta keyword")));
        }
        Ok(Self { words })
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Identifier used by the session API: the words joined by spaces.
    pub fn id(&self) -> String {
        self.words.join(" ")
    }
}

/// Behavioral data stored per click.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorRecord {
    pub url: String,
    pub timestamp: i64,
    pub query_keywords: Vec<String>,
    pub meta_keywords: Vec<MetaKeyword>,
}

static TITLE_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?is)<title[^>]*>(.*?)(?:</title\s*>|$)").unwrap());
static META_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?is)<meta\b([^>]*)>?").unwrap());
static ATTR_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"(?is)([a-z_:][-a-z0-9_:.]*)\s*=\s*(?:"([^"]*)"|'([^']*)'|([^\s"'>]+))"#).unwrap()
});
static TAG_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<[^>]*>").unwrap());

fn decode_entities(s: &str) -> String {
    s.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&apos;", "'")
        .replace("&nbsp;", " ")
        .replace("&amp;", "&")
}

fn clean(s: &str) -> String {
    let text = TAG_RE.replace_all(s, " ");
    decode_entities(&text).split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Tolerant extraction of title, keyword and description metadata.
pub fn extract_page_metadata(document: &str, url: &str) -> PageMetadata {
    let mut meta = PageMetadata {
        url: url.to_string(),
        ..Default::default()
    };
    if let Some(c) = TITLE_RE.captures(document) {
        meta.title = clean(&c[1]);
    }
    for tag in META_RE.captures_iter(document) {
        let mut name = None;
        let mut content = None;
        for attr in ATTR_RE.captures_iter(&tag[1]) {
            let value = attr
                .get(2)
                .or_else(|| attr.get(3))
                .or_else(|| attr.get(4))
                .map_or("", |m| m.as_str());
            match attr[1].to_ascii_lowercase().as_str() {
                "name" | "property" | "itemprop" => name = Some(value.to_ascii_lowercase()),
                "content" => content = Some(decode_entities(value)),
                _ => {}
            }
        }
        let (Some(name), Some(content)) = (name, content) else { continue };
        match name.as_str() {
            "keywords" => meta.meta_keywords_raw.extend(
                content
                    .split(',')
                    .map(|k| k.split_whitespace().collect::<Vec<_>>().join(" "))
                    .filter(|k| !k.is_empty()),
            ),
            "description" if meta.description.is_empty() => {
                meta.description = content.split_whitespace().collect::<Vec<_>>().join(" ");
            }
            _ => {}
        }
    }
    meta
}

fn filtered_words(raw: &str, query: &HashSet<&str>, stopwords: &StopwordList) -> Vec<String> {
    normalize_text(raw, stopwords)
        .into_iter()
        .filter(|w| !query.contains(w.as_str()))
        .take(MAX_META_KEYWORD_WORDS)
        .collect()
}

/// Capped meta keywords for one page, with query keywords removed. Falls back
/// to the title when the page carries no keyword metadata.
pub fn build_meta_keywords(
    meta: &PageMetadata,
    query_keywords: &[String],
    stopwords: &StopwordList,
) -> Vec<MetaKeyword> {
    let query: HashSet<&str> = query_keywords.iter().map(String::as_str).collect();
    let sources: Vec<&str> = if meta.meta_keywords_raw.iter().all(|k| k.trim().is_empty()) {
        vec![meta.title.as_str()]
    } else {
        meta.meta_keywords_raw.iter().map(String::as_str).collect()
    };
    let mut out: Vec<MetaKeyword> = Vec::new();
    for raw in sources {
        if out.len() == MAX_META_KEYWORDS_PER_PAGE {
            break;
        }
        let words = filtered_words(raw, &query, stopwords);
        if words.is_empty() {
            continue;
        }
        let mk = MetaKeyword::new(words).expect("normalized words are unique and capped");
        if !out.contains(&mk) {
            out.push(mk);
        }
    }
    out
}

/// Records a click on a presented hit into the in-progress entry.
///
/// Every click is appended to `clicked_urls`; metadata is extracted only the
/// first time a URL is clicked within the entry, in which case the resulting
/// behavior record is returned for persistence.
pub fn record_click(
    entry: &mut ProfileEntry,
    presented: &HashSet<String>,
    url: &str,
    document: &str,
    stopwords: &StopwordList,
) -> Result<Option<BehaviorRecord>> {
    if !presented.contains(url) {
        return Err(Error::validation(format!("url {url:?} was not presented in this session")));
    }
    let meta = extract_page_metadata(document, url);
    Ok(record_click_with_metadata(entry, &meta, stopwords))
}

/// [`record_click`] for callers that already hold the page's metadata.
/// The presented-hit check is the caller's responsibility.
pub fn record_click_with_metadata(
    entry: &mut ProfileEntry,
    meta: &PageMetadata,
    stopwords: &StopwordList,
) -> Option<BehaviorRecord> {
    let first_click = !entry.clicked_urls.iter().any(|u| u == &meta.url);
    entry.clicked_urls.push(meta.url.clone());
    if !first_click {
        return None;
    }
    let metas = build_meta_keywords(meta, &entry.query_keywords, stopwords);
    for mk in &metas {
        if !entry.extracted_meta_keywords.contains(mk) {
            entry.extracted_meta_keywords.push(mk.clone());
        }
    }
    Some(BehaviorRecord {
        url: meta.url.clone(),
        timestamp: entry.timestamp,
        query_keywords: entry.query_keywords.clone(),
        meta_keywords: metas,
    })
}
