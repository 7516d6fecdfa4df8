use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusSplit, LabeledSentence};
use crate::error::{Error, Result};

/// The citation context of one sentence: its neighbors and section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextBundle {
    pub prev_sentence: Option<LabeledSentence>,
    pub cur_sentence: LabeledSentence,
    pub next_sentence: Option<LabeledSentence>,
    pub section_type: String,
}

impl ContextBundle {
    /// A bundle with no neighbors.
    pub fn isolated(sentence: LabeledSentence) -> Self {
        Self {
            section_type: sentence.section_type.clone(),
            prev_sentence: None,
            cur_sentence: sentence,
            next_sentence: None,
        }
    }

    pub fn label(&self) -> bool {
        self.cur_sentence.label
    }
}

/// Resolves neighbor ids across every sentence of a split, including the
/// ones kept only as context.
pub struct ContextIndex<'a> {
    by_id: HashMap<&'a str, &'a LabeledSentence>,
}

impl<'a> ContextIndex<'a> {
    pub fn new(sentences: impl IntoIterator<Item = &'a LabeledSentence>) -> Self {
        Self {
            by_id: crate::corpus::index_by_id(sentences),
        }
    }

    pub fn for_split(split: &'a CorpusSplit) -> Self {
        Self::new(split.all())
    }

    pub fn get(&self, id: &str) -> Option<&'a LabeledSentence> {
        self.by_id.get(id).copied()
    }

    pub fn bundle(&self, sentence: &LabeledSentence) -> ContextBundle {
        let resolve = |id: &Option<String>| id.as_deref().and_then(|i| self.get(i)).cloned();
        ContextBundle {
            prev_sentence: resolve(&sentence.prev_id),
            next_sentence: resolve(&sentence.next_id),
            section_type: sentence.section_type.clone(),
            cur_sentence: sentence.clone(),
        }
    }
}

/// Context bundle of `sentences[index]`, neighbors looked up in `index_of`.
pub fn assemble_context(
    index_of: &ContextIndex,
    sentences: &[LabeledSentence],
    index: usize,
) -> Result<ContextBundle> {
    let s = sentences.get(index).ok_or(Error::IndexOutOfRange {
        index,
        len: sentences.len(),
    })?;
    Ok(index_of.bundle(s))
}

/// Bundles for every sentence of `part`, resolved against the whole split.
pub fn bundles(split: &CorpusSplit, part: &[LabeledSentence]) -> Vec<ContextBundle> {
    let index = ContextIndex::for_split(split);
    part.iter().map(|s| index.bundle(s)).collect()
}

/// Bundles for a standalone list of sentences (neighbors resolved within it).
pub fn bundles_of(sentences: &[LabeledSentence]) -> Vec<ContextBundle> {
    let index = ContextIndex::new(sentences);
    sentences.iter().map(|s| index.bundle(s)).collect()
}
