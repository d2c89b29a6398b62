//! Sparse term vectors and cosine similarity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Sparse map from normalized term to a strictly positive weight.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TermVector {
    weights: BTreeMap<String, f64>,
}

impl TermVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Raw term-frequency counts.
    pub fn from_terms<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v = Self::new();
        for t in terms {
            v.add(t.as_ref(), 1.0);
        }
        v
    }

    /// Adds `weight` to `term`. Non-positive or non-finite weights are ignored.
    pub fn add(&mut self, term: &str, weight: f64) {
        if weight > 0.0 && weight.is_finite() {
            *self.weights.entry(term.to_string()).or_insert(0.0) += weight;
        }
    }

    pub fn set(&mut self, term: &str, weight: f64) {
        if weight > 0.0 && weight.is_finite() {
            self.weights.insert(term.to_string(), weight);
        } else {
            self.weights.remove(term);
        }
    }

    pub fn get(&self, term: &str) -> f64 {
        self.weights.get(term).copied().unwrap_or(0.0)
    }

    pub fn merge(&mut self, other: &TermVector) {
        for (t, w) in &other.weights {
            self.add(t, *w);
        }
    }

    pub fn scaled(&self, factor: f64) -> TermVector {
        let mut out = TermVector::new();
        for (t, w) in &self.weights {
            out.set(t, w * factor);
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights.iter().map(|(t, w)| (t.as_str(), *w))
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.weights.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.weights.values().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &TermVector) -> f64 {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.iter().map(|(t, w)| w * large.get(t)).sum()
    }

    /// Stable textual key; equal vectors produce equal keys.
    pub fn canonical_key(&self) -> String {
        let mut key = String::new();
        for (t, w) in &self.weights {
            key.push_str(t);
            key.push('=');
            key.push_str(&format!("{w:?}"));
            key.push(';');
        }
        key
    }
}

impl<S: AsRef<str>> FromIterator<(S, f64)> for TermVector {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        let mut v = TermVector::new();
        for (t, w) in iter {
            v.add(t.as_ref(), w);
        }
        v
    }
}

/// Cosine similarity in `[0, 1]`; zero when either side is empty.
pub fn cosine(a: &TermVector, b: &TermVector) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (a.dot(b) / denom).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(pairs: &[(&str, f64)]) -> TermVector {
        pairs.iter().map(|&(t, w)| (t, w)).collect()
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine(&v(&[("a", 1.0)]), &v(&[("a", 1.0)])), 1.0);
        assert_eq!(cosine(&v(&[("a", 1.0)]), &v(&[("b", 1.0)])), 0.0);
        let c = cosine(&v(&[("a", 1.0), ("b", 1.0)]), &v(&[("a", 1.0)]));
        assert!((c - 0.7071067811865475).abs() < 1e-15);
        assert_eq!(cosine(&TermVector::new(), &v(&[("a", 1.0)])), 0.0);
    }

    #[test]
    fn non_positive_weights_not_stored() {
        let mut t = TermVector::new();
        t.add("a", 0.0);
        t.add("b", -1.0);
        t.add("c", f64::NAN);
        assert!(t.is_empty());
        t.set("a", 2.0);
        t.set("a", 0.0);
        assert!(t.is_empty());
    }

    #[test]
    fn counts_accumulate() {
        let t = TermVector::from_terms(["java", "island", "java"]);
        assert_eq!(t.get("java"), 2.0);
        assert_eq!(t.get("island"), 1.0);
    }
}
