//! Synthetic labeled sentences for demonstrations and sanity checks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{group_by_article, split_groups, CorpusSplit, LabeledSentence, DEFAULT_FRACTIONS};
use crate::features::{bundles_of, ContextBundle};

const FILLER: [&str; 32] = [
    "the", "cells", "were", "measured", "using", "a", "standard", "protocol", "and", "results", "show", "strong",
    "signal", "in", "samples", "from", "each", "group", "we", "observed", "higher", "levels", "of", "protein",
    "under", "stress", "conditions", "with", "treatment", "model", "data", "analysis",
];

/// A sentence record with lengths filled in and no neighbors.
pub fn sentence(id: &str, article_id: &str, text: &str, label: bool) -> LabeledSentence {
    LabeledSentence {
        id: id.to_owned(),
        article_id: article_id.to_owned(),
        text: text.to_owned(),
        label,
        section_type: "results".to_owned(),
        char_len: text.chars().count(),
        word_len: text.split_whitespace().count(),
        prev_id: None,
        next_id: None,
        prev_has_citation: false,
        next_has_citation: false,
    }
}

fn filler(rng: &mut ChaCha8Rng) -> Vec<&'static str> {
    let n = rng.gen_range(5..12);
    (0..n).map(|_| *FILLER.choose(rng).expect("non-empty filler")).collect()
}

fn link(article: &mut [LabeledSentence]) {
    let n = article.len();
    for i in 0..n {
        let prev = (i > 0).then(|| (article[i - 1].id.clone(), article[i - 1].label));
        let next = (i + 1 < n).then(|| (article[i + 1].id.clone(), article[i + 1].label));
        let s = &mut article[i];
        s.prev_has_citation = prev.as_ref().is_some_and(|p| p.1);
        s.next_has_citation = next.as_ref().is_some_and(|p| p.1);
        s.prev_id = prev.map(|p| p.0);
        s.next_id = next.map(|p| p.0);
    }
}

/// `n` sentences in articles of ten; a sentence is citing exactly when it
/// contains the word "previously".
pub fn keyword_corpus(n: usize, seed: u64) -> Vec<LabeledSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for start in (0..n).step_by(10) {
        let art = format!("kw{}", start / 10);
        let mut article: Vec<LabeledSentence> = (start..n.min(start + 10))
            .map(|i| {
                let label = i % 2 == 0;
                let mut words = filler(&mut rng);
                if label {
                    let at = rng.gen_range(0..=words.len());
                    words.insert(at, "previously");
                }
                let pos = i - start;
                sentence(&format!("{art}#{pos}"), &art, &words.join(" "), label)
            })
            .collect();
        link(&mut article);
        out.extend(article);
    }
    out
}

/// [`keyword_corpus`] split 60/20/20 by article.
pub fn keyword_split(n: usize, seed: u64) -> CorpusSplit {
    split_groups(group_by_article(keyword_corpus(n, seed)), DEFAULT_FRACTIONS, seed)
        .expect("at least three synthetic articles")
}

/// Bundles whose label equals the previous sentence's citation flag; the
/// text itself is drawn from one distribution for both classes. Roughly
/// `citing_rate` of the bundles are citing.
pub fn flag_signal_bundles(n: usize, citing_rate: f64, seed: u64) -> Vec<ContextBundle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sentences = Vec::with_capacity(2 * n);
    for i in 0..n {
        let art = format!("fs{i}");
        let flag = rng.gen::<f64>() < citing_rate;
        let mut pair = vec![
            sentence(&format!("{art}#0"), &art, &filler(&mut rng).join(" "), flag),
            sentence(&format!("{art}#1"), &art, &filler(&mut rng).join(" "), flag),
        ];
        link(&mut pair);
        sentences.extend(pair);
    }
    bundles_of(&sentences)
        .into_iter()
        .filter(|b| b.prev_sentence.is_some())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyword_labels_follow_the_keyword() {
        let s = keyword_corpus(25, 1);
        assert_eq!(s.len(), 25);
        for x in &s {
            assert_eq!(x.label, x.text.split(' ').any(|w| w == "previously"));
        }
        assert_eq!(s[1].prev_id.as_deref(), Some("kw0#0"));
        assert!(s[1].prev_has_citation);
        assert!(s[9].next_id.is_none());
    }

    #[test]
    fn flag_bundles_carry_the_label_in_the_flag() {
        let b = flag_signal_bundles(50, 0.3, 2);
        assert_eq!(b.len(), 50);
        for x in &b {
            assert_eq!(x.cur_sentence.prev_has_citation, x.label());
        }
    }
}
