use serde::{Deserialize, Serialize};

use super::context::ContextBundle;

pub const HANDCRAFTED_NAMES: [&str; 8] = [
    "char_len_prev",
    "word_len_prev",
    "char_len_cur",
    "word_len_cur",
    "char_len_next",
    "word_len_next",
    "prev_has_citation",
    "next_has_citation",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HandcraftedFeatures {
    pub char_len_prev: usize,
    pub word_len_prev: usize,
    pub char_len_cur: usize,
    pub word_len_cur: usize,
    pub char_len_next: usize,
    pub word_len_next: usize,
    pub prev_has_citation: bool,
    pub next_has_citation: bool,
}

impl HandcraftedFeatures {
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.char_len_prev as f64,
            self.word_len_prev as f64,
            self.char_len_cur as f64,
            self.word_len_cur as f64,
            self.char_len_next as f64,
            self.word_len_next as f64,
            f64::from(u8::from(self.prev_has_citation)),
            f64::from(u8::from(self.next_has_citation)),
        ]
    }
}

/// Lengths of the three sentences plus the neighbor citation flags.
///
/// The flags are read from the current sentence record, which holds corpus
/// labels at training time and whatever the inference policy put there at
/// prediction time. A missing neighbor contributes zeros.
pub fn handcrafted_features(bundle: &ContextBundle) -> HandcraftedFeatures {
    let cur = &bundle.cur_sentence;
    let prev = bundle.prev_sentence.as_ref();
    let next = bundle.next_sentence.as_ref();
    HandcraftedFeatures {
        char_len_prev: prev.map_or(0, |s| s.char_len),
        word_len_prev: prev.map_or(0, |s| s.word_len),
        char_len_cur: cur.char_len,
        word_len_cur: cur.word_len,
        char_len_next: next.map_or(0, |s| s.char_len),
        word_len_next: next.map_or(0, |s| s.word_len),
        prev_has_citation: prev.is_some() && cur.prev_has_citation,
        next_has_citation: next.is_some() && cur.next_has_citation,
    }
}
