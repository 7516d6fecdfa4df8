//! Design matrices for the interpretable models.
//!
//! Column layout (contextual mode):
//! `[section block][prev block][cur block][next block][8 handcrafted][2 similarities]`.
//! Each text block is either tf-idf over the fitted vocabulary or an LDA
//! topic mixture. Non-contextual mode keeps only the current-sentence block
//! and its two length features.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::context::ContextBundle;
use super::handcrafted::{handcrafted_features, HANDCRAFTED_NAMES};
use super::scaler::{fit_scaler, ScaleMode, Scaler};
use super::similarity::sparse_cosine;
use crate::error::Result;
use crate::matrix::CsrMatrix;
use crate::textrep::{
    fit_lda, fit_vocab, infer_topics, tfidf_transform, tokenize, LdaConfig, SparseVector, TopicModel,
    Vocabulary, DEFAULT_MIN_DF,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Tfidf,
    Topics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturizerConfig {
    pub representation: Representation,
    pub min_df: usize,
    pub ngram_range: (usize, usize),
    pub lda: LdaConfig,
    pub contextual: bool,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        Self {
            representation: Representation::Tfidf,
            min_df: DEFAULT_MIN_DF,
            ngram_range: (1, 2),
            lda: LdaConfig::default(),
            contextual: true,
        }
    }
}

pub const SIMILARITY_NAMES: [&str; 2] = ["sim_prev_cur", "sim_cur_next"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretableFeaturizer {
    pub config: FeaturizerConfig,
    pub vocab: Vocabulary,
    pub section_vocab: Vocabulary,
    pub topics: Option<TopicModel>,
    pub names: Vec<String>,
    pub categories: Vec<String>,
    pub scaler: Scaler,
}

struct Layout {
    section: usize,
    block: usize,
    contextual: bool,
}

impl Layout {
    fn offsets(&self) -> (usize, usize, usize, usize, usize) {
        if self.contextual {
            let prev = self.section;
            let cur = prev + self.block;
            let next = cur + self.block;
            let numeric = next + self.block;
            (0, prev, cur, next, numeric)
        } else {
            (0, 0, 0, 0, self.block)
        }
    }

    fn width(&self) -> usize {
        let numeric = self.offsets().4;
        numeric + if self.contextual { 10 } else { 2 }
    }
}

impl InterpretableFeaturizer {
    pub fn fit(train: &[ContextBundle], config: &FeaturizerConfig) -> Result<Self> {
        let sentences: Vec<Vec<String>> = train
            .iter()
            .map(|b| tokenize(&b.cur_sentence.text))
            .collect();
        let vocab = fit_vocab(&sentences, config.ngram_range, config.min_df)?;
        let sections: Vec<Vec<String>> = train.iter().map(|b| tokenize(&b.section_type)).collect();
        let section_vocab = if sections.iter().all(Vec::is_empty) {
            fit_vocab(&[vec![crate::corpus::UNKNOWN_SECTION.to_owned()]], (1, 1), 1)?
        } else {
            fit_vocab(&sections, config.ngram_range, 1)?
        };
        let topics = match config.representation {
            Representation::Tfidf => None,
            Representation::Topics => Some(fit_lda(&sentences, &config.lda)?),
        };

        let mut me = Self {
            config: config.clone(),
            vocab,
            section_vocab,
            topics,
            names: Vec::new(),
            categories: Vec::new(),
            scaler: fit_scaler(&CsrMatrix::new(0), &[]),
        };
        me.build_names();
        let raw = me.raw_matrix(train);
        let modes = me.scale_modes();
        me.scaler = fit_scaler(&raw, &modes);
        Ok(me)
    }

    fn layout(&self) -> Layout {
        match &self.topics {
            Some(t) => Layout {
                section: t.k,
                block: t.k,
                contextual: self.config.contextual,
            },
            None => Layout {
                section: self.section_vocab.len(),
                block: self.vocab.len(),
                contextual: self.config.contextual,
            },
        }
    }

    fn block_names(&self, prefix: &str, section: bool) -> Vec<String> {
        match &self.topics {
            Some(t) => (0..t.k).map(|k| format!("{prefix}:topic_{k}")).collect(),
            None => {
                let v = if section { &self.section_vocab } else { &self.vocab };
                v.terms.terms().iter().map(|t| format!("{prefix}:{t}")).collect()
            }
        }
    }

    fn build_names(&mut self) {
        let mut names = Vec::new();
        let mut cats = Vec::new();
        let push_block = |names: &mut Vec<String>, cats: &mut Vec<String>, block: Vec<String>, cat: &str| {
            cats.extend(std::iter::repeat_n(cat.to_owned(), block.len()));
            names.extend(block);
        };
        if self.config.contextual {
            push_block(&mut names, &mut cats, self.block_names("section", true), "section");
            push_block(&mut names, &mut cats, self.block_names("prev", false), "prev");
            push_block(&mut names, &mut cats, self.block_names("cur", false), "cur");
            push_block(&mut names, &mut cats, self.block_names("next", false), "next");
            let numeric: Vec<String> = HANDCRAFTED_NAMES
                .iter()
                .chain(SIMILARITY_NAMES.iter())
                .map(|s| s.to_string())
                .collect();
            push_block(&mut names, &mut cats, numeric, "numeric");
        } else {
            push_block(&mut names, &mut cats, self.block_names("cur", false), "cur");
            let numeric = vec!["char_len_cur".to_owned(), "word_len_cur".to_owned()];
            push_block(&mut names, &mut cats, numeric, "numeric");
        }
        self.names = names;
        self.categories = cats;
    }

    fn scale_modes(&self) -> Vec<ScaleMode> {
        let numeric_start = self.layout().offsets().4;
        (0..self.width())
            .map(|j| if j < numeric_start { ScaleMode::MaxAbs } else { ScaleMode::ZScore })
            .collect()
    }

    pub fn width(&self) -> usize {
        self.layout().width()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.names
    }

    fn text_block(&self, text: &str, section: bool) -> SparseVector {
        let tokens = tokenize(text);
        match &self.topics {
            Some(t) => {
                let theta = infer_topics(&tokens, t);
                SparseVector::from_pairs(t.k, theta.into_iter().enumerate().collect())
            }
            None => tfidf_transform(&tokens, if section { &self.section_vocab } else { &self.vocab }),
        }
    }

    /// Unscaled feature row for one bundle.
    pub fn raw_row(&self, bundle: &ContextBundle) -> Vec<(usize, f64)> {
        let layout = self.layout();
        let (sec_off, prev_off, cur_off, next_off, num_off) = layout.offsets();
        let mut row = Vec::new();
        let shift = |v: &SparseVector, off: usize, row: &mut Vec<(usize, f64)>| {
            row.extend(v.iter().map(|(i, x)| (i + off, x)));
        };
        let cur = self.text_block(&bundle.cur_sentence.text, false);
        let hand = handcrafted_features(bundle).to_array();
        if layout.contextual {
            let empty = || SparseVector::zeros(layout.block);
            let sec = self.text_block(&bundle.section_type, true);
            let prev = bundle
                .prev_sentence
                .as_ref()
                .map_or_else(empty, |s| self.text_block(&s.text, false));
            let next = bundle
                .next_sentence
                .as_ref()
                .map_or_else(empty, |s| self.text_block(&s.text, false));
            shift(&sec, sec_off, &mut row);
            shift(&prev, prev_off, &mut row);
            shift(&cur, cur_off, &mut row);
            shift(&next, next_off, &mut row);
            for (k, v) in hand.iter().enumerate() {
                row.push((num_off + k, *v));
            }
            // Similarities always use tf-idf, whatever the block representation.
            let tf = |s: &str| tfidf_transform(&tokenize(s), &self.vocab);
            let cur_tf = tf(&bundle.cur_sentence.text);
            let sim = |o: &Option<crate::corpus::LabeledSentence>| {
                o.as_ref().map_or(0.0, |s| sparse_cosine(&cur_tf, &tf(&s.text)))
            };
            row.push((num_off + 8, sim(&bundle.prev_sentence)));
            row.push((num_off + 9, sim(&bundle.next_sentence)));
        } else {
            shift(&cur, cur_off, &mut row);
            row.push((num_off, hand[2]));
            row.push((num_off + 1, hand[3]));
        }
        row.retain(|(_, v)| *v != 0.0);
        row
    }

    fn raw_matrix(&self, bundles: &[ContextBundle]) -> CsrMatrix {
        let rows: Vec<Vec<(usize, f64)>> = bundles.par_iter().map(|b| self.raw_row(b)).collect();
        let mut m = CsrMatrix::new(self.width());
        for r in rows {
            m.push_pairs(r);
        }
        m
    }

    /// Scaled design matrix.
    pub fn transform(&self, bundles: &[ContextBundle]) -> CsrMatrix {
        let rows: Vec<Vec<(usize, f64)>> = bundles
            .par_iter()
            .map(|b| {
                let raw = self.raw_row(b);
                let (idx, val): (Vec<usize>, Vec<f64>) = raw.into_iter().unzip();
                self.scaler.apply_row(&idx, &val)
            })
            .collect();
        let mut m = CsrMatrix::new(self.width());
        for r in rows {
            m.push_pairs(r);
        }
        m
    }

    /// Feature name to category (`section`, `prev`, `cur`, `next`, `numeric`).
    pub fn category_map(&self) -> Vec<(String, String)> {
        self.names.iter().cloned().zip(self.categories.iter().cloned()).collect()
    }
}
