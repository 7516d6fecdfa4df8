use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::sparse::{SparseVector, TermIndex};
use crate::error::{Error, Result};

pub const DEFAULT_MIN_DF: usize = 5;

/// Unigram/bigram vocabulary with document frequencies. Bigrams are stored
/// as the two tokens joined by a single space. Terms are sorted, so the
/// fitted vocabulary does not depend on document order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub terms: TermIndex,
    pub df: Vec<usize>,
    pub n_docs: usize,
    pub min_df: usize,
    pub ngram_range: (usize, usize),
}

/// The distinct n-grams of `tokens` for `n` in `range`.
pub fn ngrams(tokens: &[String], range: (usize, usize)) -> Vec<String> {
    let mut out = Vec::new();
    for n in range.0.max(1)..=range.1 {
        if n > tokens.len() {
            break;
        }
        out.extend(tokens.windows(n).map(|w| w.join(" ")));
    }
    out
}

pub fn fit_vocab(corpus: &[Vec<String>], ngram_range: (usize, usize), min_df: usize) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("cannot fit a vocabulary on an empty corpus".into()));
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for doc in corpus {
        let present: HashSet<String> = ngrams(doc, ngram_range).into_iter().collect();
        for term in present {
            *counts.entry(term).or_default() += 1;
        }
    }
    let (terms, df): (Vec<String>, Vec<usize>) =
        counts.into_iter().filter(|(_, c)| *c >= min_df.max(1)).unzip();
    if terms.is_empty() {
        return Err(Error::EmptyVocabulary(min_df));
    }
    Ok(Vocabulary {
        terms: TermIndex::new(terms),
        df,
        n_docs: corpus.len(),
        min_df,
        ngram_range,
    })
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, index: usize) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + self.df[index] as f64)).ln() + 1.0
    }
}

/// Raw term counts times idf, L2-normalized. Out-of-vocabulary terms are
/// ignored; a sentence without known terms maps to the zero vector.
pub fn tfidf_transform(tokens: &[String], vocab: &Vocabulary) -> SparseVector {
    let pairs: Vec<(usize, f64)> = ngrams(tokens, vocab.ngram_range)
        .iter()
        .filter_map(|t| vocab.terms.get(t))
        .map(|i| (i, 1.0))
        .collect();
    let mut v = SparseVector::from_pairs(vocab.len(), pairs);
    for (slot, &i) in v.values.iter_mut().zip(&v.indices) {
        *slot *= vocab.idf(i);
    }
    let norm = v.norm();
    if norm > 0.0 {
        v.values.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textrep::tokenize;

    fn docs(raw: &[&str]) -> Vec<Vec<String>> {
        raw.iter().map(|d| tokenize(d)).collect()
    }

    #[test]
    fn enumerates_unigrams_and_bigrams() {
        let v = fit_vocab(&docs(&["a b", "a c"]), (1, 2), 1).unwrap();
        assert_eq!(v.terms.terms(), &["a", "a b", "a c", "b", "c"]);
        assert_eq!(v.df, vec![2, 1, 1, 1, 1]);
        let v = fit_vocab(&docs(&["a b", "a c"]), (1, 2), 2).unwrap();
        assert_eq!(v.terms.terms(), &["a"]);
    }

    #[test]
    fn empty_vocabulary() {
        assert!(matches!(
            fit_vocab(&docs(&["a b", "c d"]), (1, 2), 3),
            Err(Error::EmptyVocabulary(3))
        ));
    }

    #[test]
    fn df_counts_presence_not_occurrences() {
        let v = fit_vocab(&docs(&["a a a", "a b"]), (1, 1), 1).unwrap();
        assert_eq!(v.df[v.terms.get("a").unwrap()], 2);
    }

    #[test]
    fn zero_and_unit_vectors() {
        let v = fit_vocab(&docs(&["a b", "a c"]), (1, 2), 1).unwrap();
        let z = tfidf_transform(&tokenize("zzz qqq"), &v);
        assert_eq!(z.nnz(), 0);
        let one = tfidf_transform(&tokenize("b b b"), &v);
        assert_eq!(one.nnz(), 1);
        assert!((one.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_values() {
        // N = 2; df(a) = 2, df(b) = 1, df(a b) = 1.
        let v = fit_vocab(&docs(&["a b", "a c"]), (1, 2), 1).unwrap();
        let out = tfidf_transform(&tokenize("a b a"), &v);
        let idf_a = 1.0_f64;
        let idf_rare = (3.0_f64 / 2.0).ln() + 1.0;
        // counts: a = 2, b = 1, "a b" = 1, "b a" is out of vocabulary.
        let raw = [("a", 2.0 * idf_a), ("a b", idf_rare), ("b", idf_rare)];
        let norm = raw.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        let dense = out.to_dense();
        for (term, x) in raw {
            let i = v.terms.get(term).unwrap();
            assert!((dense[i] - x / norm).abs() < 1e-12, "{term}");
        }
    }
}
