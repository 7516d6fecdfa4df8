use serde::{Deserialize, Serialize};

use super::dataset::{CorpusSplit, LabeledSentence};
use super::jats::ArticleTree;

/// Corpus characteristics: structure counts, class balance and average
/// sentence lengths. Structure counts are `None` when the input carries no
/// section/paragraph information (dataset files).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsTable {
    pub articles: usize,
    pub sections: Option<usize>,
    pub paragraphs: Option<usize>,
    pub sentences: usize,
    pub sentences_without_citations: usize,
    pub sentences_with_citations: usize,
    /// Non-citing over citing sentences; 0 when there are no citing ones.
    pub ratio: f64,
    pub avg_chars: f64,
    pub avg_words: f64,
}

pub fn corpus_stats<'a>(sentences: impl IntoIterator<Item = &'a LabeledSentence>) -> StatsTable {
    let mut articles = std::collections::HashSet::new();
    let (mut n, mut citing, mut chars, mut words) = (0usize, 0usize, 0usize, 0usize);
    for s in sentences {
        articles.insert(s.article_id.as_str());
        n += 1;
        citing += usize::from(s.label);
        chars += s.char_len;
        words += s.word_len;
    }
    let non_citing = n - citing;
    let avg = |total: usize| if n == 0 { 0.0 } else { total as f64 / n as f64 };
    StatsTable {
        articles: articles.len(),
        sections: None,
        paragraphs: None,
        sentences: n,
        sentences_without_citations: non_citing,
        sentences_with_citations: citing,
        ratio: if citing == 0 {
            0.0
        } else {
            non_citing as f64 / citing as f64
        },
        avg_chars: avg(chars),
        avg_words: avg(words),
    }
}

pub fn split_stats(split: &CorpusSplit) -> StatsTable {
    corpus_stats(split.train.iter().chain(&split.validation).chain(&split.test))
}

/// Stats over labeled sentences, with structure counts taken from the parsed trees.
pub fn tree_stats<'a>(
    trees: &[ArticleTree],
    sentences: impl IntoIterator<Item = &'a LabeledSentence>,
) -> StatsTable {
    let mut table = corpus_stats(sentences);
    table.articles = trees.len();
    table.sections = Some(trees.iter().map(|t| t.sections.len()).sum());
    table.paragraphs = Some(trees.iter().map(ArticleTree::paragraph_count).sum());
    table
}

impl StatsTable {
    /// Two-column `item<TAB>value` rendering.
    pub fn to_tsv(&self) -> String {
        let opt = |v: Option<usize>| v.map_or("N/A".to_owned(), |v| v.to_string());
        [
            ("articles", self.articles.to_string()),
            ("sections", opt(self.sections)),
            ("paragraphs", opt(self.paragraphs)),
            ("sentences", self.sentences.to_string()),
            (
                "sentences without citations",
                self.sentences_without_citations.to_string(),
            ),
            (
                "sentences with citations",
                self.sentences_with_citations.to_string(),
            ),
            ("non-citing per citing", format!("{:.4}", self.ratio)),
            ("average characters per sentence", format!("{:.2}", self.avg_chars)),
            ("average words per sentence", format!("{:.2}", self.avg_words)),
        ]
        .iter()
        .map(|(k, v)| format!("{k}\t{v}\n"))
        .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sent(label: bool, chars: usize, words: usize) -> LabeledSentence {
        LabeledSentence {
            id: String::new(),
            article_id: "a".into(),
            text: String::new(),
            label,
            section_type: String::new(),
            char_len: chars,
            word_len: words,
            prev_id: None,
            next_id: None,
            prev_has_citation: false,
            next_has_citation: false,
        }
    }

    #[test]
    fn ratio_and_averages() {
        let v: Vec<_> = (0..12).map(|i| sent(i < 4, 10 + i, 2)).collect();
        let t = corpus_stats(&v);
        assert_eq!(t.sentences_with_citations, 4);
        assert_eq!(t.sentences_without_citations, 8);
        assert_eq!(t.ratio, 2.0);
        assert_eq!(t.avg_words, 2.0);
        assert!((t.avg_chars - 15.5).abs() < 1e-12);
    }

    #[test]
    fn empty_corpus_is_all_zero() {
        let t = corpus_stats(&[]);
        assert_eq!(t.articles, 0);
        assert_eq!(t.sentences, 0);
        assert_eq!(t.ratio, 0.0);
        assert_eq!(t.avg_chars, 0.0);
        assert_eq!(t.avg_words, 0.0);
    }
}
