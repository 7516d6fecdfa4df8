//! Inference on unlabeled text, shared by the command line and the service.
//!
//! Raw text is segmented into sentences, citation hints are stripped and the
//! sentences cleaned. Sentences are linked as one article. Neighbor citation
//! flags are 0 by default; in two-pass mode, the first pass's decisions
//! become the flags of a second pass.

use serde::{Deserialize, Serialize};

use crate::corpus::{
    char_len, clean_sentence, segment_sentences, strip_citation_hints, word_len, LabeledSentence, UNKNOWN_SECTION,
};
use crate::error::{Error, Result};
use crate::features::{bundles_of, ContextBundle};
use crate::pipeline::TrainedModel;

/// One input sentence with an optional section type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceInput {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section_type: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictOptions {
    /// A sentence is worthy when its probability is at least this.
    pub threshold: f64,
    /// Use neighbors as context; otherwise every sentence stands alone.
    pub contextual: bool,
    pub two_pass: bool,
}

impl Default for PredictOptions {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            contextual: true,
            two_pass: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSentence {
    pub text: String,
    pub probability: f64,
    pub worthy: bool,
    pub section_type: String,
}

/// Segments raw text, strips citation hints and cleans each sentence.
/// Sentences left empty are dropped.
pub fn prepare_text(raw: &str, section_type: Option<&str>) -> Vec<SentenceInput> {
    segment_sentences(raw)
        .into_iter()
        .map(|s| clean_sentence(&strip_citation_hints(&s)))
        .filter(|s| !s.is_empty())
        .map(|text| SentenceInput {
            text,
            section_type: section_type.map(str::to_owned),
        })
        .collect()
}

fn records(inputs: &[SentenceInput]) -> Vec<LabeledSentence> {
    let n = inputs.len();
    let id = |i: usize| format!("input#{i}");
    inputs
        .iter()
        .enumerate()
        .map(|(i, s)| LabeledSentence {
            id: id(i),
            article_id: "input".to_owned(),
            text: s.text.clone(),
            label: false,
            section_type: s.section_type.clone().unwrap_or_else(|| UNKNOWN_SECTION.to_owned()),
            char_len: char_len(&s.text),
            word_len: word_len(&s.text),
            prev_id: (i > 0).then(|| id(i - 1)),
            next_id: (i + 1 < n).then(|| id(i + 1)),
            prev_has_citation: false,
            next_has_citation: false,
        })
        .collect()
}

fn context(sentences: &[LabeledSentence], contextual: bool) -> Vec<ContextBundle> {
    if contextual {
        bundles_of(sentences)
    } else {
        sentences.iter().cloned().map(ContextBundle::isolated).collect()
    }
}

/// Scores sentences in order.
pub fn score_sentences(model: &TrainedModel, inputs: &[SentenceInput], opts: &PredictOptions) -> Result<Vec<ScoredSentence>> {
    if !(opts.threshold > 0.0 && opts.threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold must lie in (0, 1), got {}",
            opts.threshold
        )));
    }
    let mut sentences = records(inputs);
    let mut probs = model.predict(&context(&sentences, opts.contextual))?;
    if opts.two_pass && opts.contextual {
        let worthy: Vec<bool> = probs.iter().map(|&p| p >= opts.threshold).collect();
        for (i, s) in sentences.iter_mut().enumerate() {
            s.prev_has_citation = i > 0 && worthy[i - 1];
            s.next_has_citation = i + 1 < worthy.len() && worthy[i + 1];
        }
        probs = model.predict(&context(&sentences, true))?;
    }
    Ok(sentences
        .into_iter()
        .zip(probs)
        .map(|(s, p)| ScoredSentence {
            text: s.text,
            probability: p,
            worthy: p >= opts.threshold,
            section_type: s.section_type,
        })
        .collect())
}

/// [`prepare_text`] followed by [`score_sentences`].
pub fn predict_text(
    model: &TrainedModel,
    raw: &str,
    section_type: Option<&str>,
    opts: &PredictOptions,
) -> Result<Vec<ScoredSentence>> {
    score_sentences(model, &prepare_text(raw, section_type), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{train_model, ModelFamily, TrainSpec};
    use crate::synthetic::keyword_split;

    fn model() -> TrainedModel {
        let mut spec = TrainSpec::new(ModelFamily::Enlr);
        spec.featurizer.min_df = 1;
        train_model(&spec, &keyword_split(100, 2), None).unwrap().model
    }

    #[test]
    fn raw_text_is_segmented_stripped_and_ordered() {
        let p = prepare_text("As shown previously [12], cells grow. We measured the protein levels (Smith et al., 2010).", None);
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].text, "As shown previously , cells grow.");
        assert!(!p[1].text.contains("Smith"));
        let m = model();
        let out = predict_text(&m, "The cells were measured previously. The data show strong signal.", Some("results"), &PredictOptions::default()).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out[0].text.starts_with("The cells"));
        assert!(out[0].probability > out[1].probability);
        assert_eq!(out[1].section_type, "results");
    }

    #[test]
    fn threshold_rule_and_validation() {
        let m = model();
        let inputs = prepare_text("The cells were measured previously. The data show strong signal.", None);
        let strict = PredictOptions {
            threshold: 0.99,
            ..Default::default()
        };
        for s in score_sentences(&m, &inputs, &strict).unwrap() {
            assert_eq!(s.worthy, s.probability >= 0.99);
        }
        for bad in [0.0, 1.0, f64::NAN] {
            let o = PredictOptions {
                threshold: bad,
                ..Default::default()
            };
            assert!(score_sentences(&m, &inputs, &o).is_err());
        }
    }

    #[test]
    fn two_pass_feeds_decisions_back_as_flags() {
        let m = model();
        let inputs = prepare_text("The cells were measured previously. The data show strong signal. We observed higher levels.", None);
        let one = score_sentences(&m, &inputs, &PredictOptions::default()).unwrap();
        let two = score_sentences(
            &m,
            &inputs,
            &PredictOptions {
                two_pass: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(one.len(), two.len());
        assert!(one[0].worthy);
        assert_ne!(one[1].probability, two[1].probability);
    }
}
