//! Workload generators and naive baselines for the benchmarks.

use ctxsearch_core::query::{BooleanQuery, Node};
use ctxsearch_core::vector::{cosine, TermVector};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Sparse vector over `t0..t{vocab}` with 1..=8 terms, weights 1..=3.
pub fn random_vector(rng: &mut ChaCha8Rng, vocab: usize) -> TermVector {
    (0..rng.random_range(1..=8))
        .map(|_| (format!("t{}", rng.random_range(0..vocab)), rng.random_range(1..=3) as f64))
        .collect()
}

pub fn random_store(rng: &mut ChaCha8Rng, n: usize, vocab: usize) -> Vec<(u64, TermVector)> {
    (0..n).map(|i| (i as u64, random_vector(rng, vocab))).collect()
}

/// Full scan: cosine against every entry, then sort.
pub fn brute_force_top_k(query: &TermVector, entries: &[(u64, TermVector)], k: usize) -> Vec<(u64, f64)> {
    let mut scored: Vec<(u64, f64)> = entries
        .iter()
        .map(|(id, v)| (*id, cosine(query, v)))
        .filter(|&(_, s)| s > 0.0)
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

/// Random tree of the given depth over `vocab`, alternating AND and OR levels
/// from an AND root.
pub fn random_query(rng: &mut ChaCha8Rng, depth: usize, vocab: &[String]) -> BooleanQuery {
    fn node(rng: &mut ChaCha8Rng, depth: usize, vocab: &[String], and: bool) -> Node {
        if depth == 0 {
            return Node::Term(vocab.choose(rng).unwrap().clone());
        }
        let children = (0..3).map(|_| node(rng, depth - 1, vocab, !and)).collect();
        if and {
            Node::And(children)
        } else {
            Node::Or(children)
        }
    }
    BooleanQuery {
        root: node(rng, depth, vocab, true),
    }
}
