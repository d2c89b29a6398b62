//! Boolean query construction from a user's selections.
//!
//! Layout: original keywords are ANDed; each non-empty selection category
//! (senses, meta keywords, concepts) becomes one OR group. Total leaves are
//! capped by dropping expansion terms from the lowest-ranked end.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::behavior::MetaKeyword;
use crate::error::{Error, Result};
use crate::lexicon::DisambiguatedTerm;
use crate::recommend::Concept;

pub const DEFAULT_LEAF_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Term(String),
    And(Vec<Node>),
    Or(Vec<Node>),
}

impl Node {
    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Term(_) => 1,
            Node::And(c) | Node::Or(c) => c.iter().map(Node::leaf_count).sum(),
        }
    }

    pub fn collect_terms<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Node::Term(t) => out.push(t),
            Node::And(c) | Node::Or(c) => c.iter().for_each(|n| n.collect_terms(out)),
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, nested: bool) -> fmt::Result {
        match self {
            Node::Term(t) => f.write_str(t),
            Node::And(children) | Node::Or(children) => {
                let (op, parens) = match self {
                    Node::And(_) => (" AND ", nested),
                    _ => (" OR ", true),
                };
                if parens {
                    f.write_str("(")?;
                }
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    c.write(f, true)?;
                }
                if parens {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BooleanQuery {
    pub root: Node,
}

impl BooleanQuery {
    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count()
    }

    pub fn terms(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.root.collect_terms(&mut out);
        out
    }
}

impl fmt::Display for BooleanQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(f, false)
    }
}

/// Infix form with uppercase operators. OR groups are always parenthesized,
/// nested AND groups too; the top-level AND is bare.
pub fn serialize_query(q: &BooleanQuery) -> String {
    q.to_string()
}

fn push_unique(group: &mut Vec<String>, keywords: &[String], term: &str) {
    if !keywords.iter().any(|k| k == term) && !group.iter().any(|t| t == term) {
        group.push(term.to_string());
    }
}

/// Builds `k1 AND k2 ... AND (senses) AND (metas) AND (concepts)`.
///
/// Within a group terms keep rank order and repeats are dropped, as are terms
/// equal to an original keyword. When leaves exceed `cap`, expansion terms are
/// removed starting from the end of the last group.
pub fn build_query(
    query_keywords: &[String],
    selected_terms: &[DisambiguatedTerm],
    selected_metas: &[MetaKeyword],
    selected_concepts: &[Concept],
    cap: usize,
) -> Result<BooleanQuery> {
    if query_keywords.is_empty() {
        return Err(Error::validation("query has no keywords"));
    }
    let mut keywords: Vec<String> = Vec::new();
    for k in query_keywords {
        if !keywords.contains(k) {
            keywords.push(k.clone());
        }
    }
    if keywords.len() > cap {
        return Err(Error::validation(format!(
            "{} keywords exceed the leaf cap of {cap}",
            keywords.len()
        )));
    }

    let mut groups: Vec<Vec<String>> = vec![Vec::new(), Vec::new(), Vec::new()];
    for t in selected_terms {
        t.words.iter().for_each(|w| push_unique(&mut groups[0], &keywords, w));
    }
    for m in selected_metas {
        m.words().iter().for_each(|w| push_unique(&mut groups[1], &keywords, w));
    }
    for c in selected_concepts {
        c.related_terms.iter().for_each(|w| push_unique(&mut groups[2], &keywords, w));
    }

    let mut excess = (keywords.len() + groups.iter().map(Vec::len).sum::<usize>()).saturating_sub(cap);
    for group in groups.iter_mut().rev() {
        let drop = excess.min(group.len());
        group.truncate(group.len() - drop);
        excess -= drop;
    }

    let mut children: Vec<Node> = keywords.into_iter().map(Node::Term).collect();
    children.extend(
        groups
            .into_iter()
            .filter(|g| !g.is_empty())
            .map(|g| Node::Or(g.into_iter().map(Node::Term).collect())),
    );
    Ok(BooleanQuery {
        root: Node::And(children),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Open,
    Close,
    And,
    Or,
    Word(String),
}

fn tokenize(input: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut Vec<Token>| {
        if !word.is_empty() {
            out.push(match word.as_str() {
                "AND" => Token::And,
                "OR" => Token::Or,
                _ => Token::Word(std::mem::take(word)),
            });
            word.clear();
        }
    };
    for c in input.chars() {
        match c {
            '(' | ')' => {
                flush(&mut word, &mut out);
                out.push(if c == '(' { Token::Open } else { Token::Close });
            }
            c if c.is_whitespace() => flush(&mut word, &mut out),
            c => word.push(c),
        }
    }
    flush(&mut word, &mut out);
    out
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn error(&self, msg: &str) -> Error {
        Error::validation(format!("query syntax: {msg} at token {}", self.pos + 1))
    }

    /// A run of atoms joined by one operator kind; returns the operator used.
    fn sequence(&mut self) -> Result<(Vec<Node>, Option<Token>)> {
        let mut items = vec![self.atom()?];
        let mut op: Option<Token> = None;
        while let Some(t @ (Token::And | Token::Or)) = self.tokens.get(self.pos).cloned() {
            if op.as_ref().is_some_and(|o| *o != t) {
                return Err(self.error("mixed AND/OR without parentheses"));
            }
            op = Some(t);
            self.pos += 1;
            items.push(self.atom()?);
        }
        Ok((items, op))
    }

    fn atom(&mut self) -> Result<Node> {
        match self.tokens.get(self.pos).cloned() {
            Some(Token::Word(w)) => {
                self.pos += 1;
                Ok(Node::Term(w))
            }
            Some(Token::Open) => {
                self.pos += 1;
                let (items, op) = self.sequence()?;
                if self.tokens.get(self.pos) != Some(&Token::Close) {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(match op {
                    Some(Token::And) => Node::And(items),
                    _ => Node::Or(items),
                })
            }
            _ => Err(self.error("expected a term or '('")),
        }
    }
}

/// Inverse of [`serialize_query`]. A bare top-level sequence is an AND (an OR
/// when joined by OR); a parenthesized single item is an OR group.
pub fn parse_query(input: &str) -> Result<BooleanQuery> {
    let mut p = Parser {
        tokens: tokenize(input),
        pos: 0,
    };
    if p.tokens.is_empty() {
        return Err(Error::validation("empty query"));
    }
    let (items, op) = p.sequence()?;
    if p.pos != p.tokens.len() {
        return Err(p.error("unexpected trailing input"));
    }
    let root = match op {
        Some(Token::Or) => Node::Or(items),
        _ => Node::And(items),
    };
    Ok(BooleanQuery { root })
}
