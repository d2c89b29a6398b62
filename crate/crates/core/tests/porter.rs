//! Single-pass stemming checked against a reference vocabulary produced by an
//! independent Porter implementation (NLTK, original-algorithm mode).

use ctxsearch_core::stem::{porter_stem, stable_stem};

const REFERENCE: &str = include_str!("data/porter_reference.tsv");

#[test]
fn matches_reference_vocabulary() {
    let mut failures = Vec::new();
    let mut total = 0;
    for line in REFERENCE.lines().filter(|l| !l.is_empty()) {
        let (word, expect) = line.split_once('\t').expect("word<TAB>stem");
        total += 1;
        let got = porter_stem(word);
        // words of one or two letters are never stemmed
        if word.len() <= 2 {
            assert_eq!(got, word);
            continue;
        }
        if got != expect {
            failures.push(format!("{word}: got {got}, want {expect}"));
        }
    }
    assert!(total > 5000, "reference table truncated: {total} rows");
    assert!(failures.is_empty(), "{} of {total} differ:\n{}", failures.len(), failures[..failures.len().min(20)].join("\n"));
}

#[test]
fn stable_stem_is_a_fixed_point() {
    for line in REFERENCE.lines().filter(|l| !l.is_empty()) {
        let (word, _) = line.split_once('\t').unwrap();
        let s = stable_stem(word);
        assert_eq!(stable_stem(&s), s, "{word}");
    }
}
