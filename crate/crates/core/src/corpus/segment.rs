use std::ops::Range;

use serde::{Deserialize, Serialize};

/// Abbreviations that never end a sentence, matched case-insensitively at a
/// word boundary.
pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "et al.", "e.g.", "i.e.", "vs.", "cf.", "ca.", "approx.", "resp.", "Fig.", "Figs.", "Eq.",
    "Eqs.", "Ref.", "Refs.", "Tab.", "Sec.", "Sect.", "Suppl.", "No.", "Nos.", "Dr.", "Mr.",
    "Mrs.", "Ms.", "Prof.", "St.", "Vol.", "pp.", "Inc.", "Ltd.", "Co.", "sp.", "spp.",
];

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SegmenterConfig {
    pub abbreviations: Vec<String>,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            abbreviations: DEFAULT_ABBREVIATIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl SegmenterConfig {
    fn ends_with_abbreviation(&self, text: &str, dot: usize) -> bool {
        let head = &text[..=dot];
        self.abbreviations.iter().any(|abbr| {
            if abbr.len() > head.len() || !head.is_char_boundary(head.len() - abbr.len()) {
                return false;
            }
            let start = head.len() - abbr.len();
            head[start..].eq_ignore_ascii_case(abbr)
                && head[..start]
                    .chars()
                    .next_back()
                    .is_none_or(|c| !c.is_alphanumeric())
        })
    }
}

/// Splits a paragraph into sentences with the default abbreviation list.
pub fn segment_sentences(paragraph: &str) -> Vec<String> {
    segment_with(paragraph, &SegmenterConfig::default())
}

pub fn segment_with(paragraph: &str, config: &SegmenterConfig) -> Vec<String> {
    segment_spans(paragraph, config)
        .into_iter()
        .map(|r| paragraph[r].to_owned())
        .collect()
}

/// Byte ranges of the sentences in `text`, whitespace-trimmed.
///
/// A boundary follows `.`, `!` or `?` (plus any closing quotes) when the next
/// non-space character is uppercase or a digit, the terminator is not the end
/// of a listed abbreviation, and every parenthesis/bracket opened so far has
/// been closed.
pub fn segment_spans(text: &str, config: &SegmenterConfig) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start = 0;
    let mut depth: i32 = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();

    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth = (depth - 1).max(0),
            '.' | '!' | '?' if depth == 0 => {
                // Swallow runs of terminators and closing quotes.
                let mut j = i + 1;
                while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?' | '"' | '\'' | '”' | '’') {
                    j += 1;
                }
                let end = chars.get(j).map_or(text.len(), |&(p, _)| p);
                let mut k = j;
                while k < chars.len() && chars[k].1.is_whitespace() {
                    k += 1;
                }
                let has_gap = k > j;
                let next_ok = chars
                    .get(k)
                    .is_some_and(|&(_, n)| n.is_uppercase() || n.is_ascii_digit());
                let abbreviated = c == '.' && config.ends_with_abbreviation(text, pos);
                if has_gap && next_ok && !abbreviated {
                    push_trimmed(text, start..end, &mut spans);
                    start = end;
                    i = k;
                    continue;
                }
                i = j;
                continue;
            }
            _ => {}
        }
        i += 1;
    }
    push_trimmed(text, start..text.len(), &mut spans);
    spans
}

fn push_trimmed(text: &str, range: Range<usize>, out: &mut Vec<Range<usize>>) {
    let slice = &text[range.clone()];
    let lead = slice.len() - slice.trim_start().len();
    let trimmed = slice.trim();
    if !trimmed.is_empty() {
        let s = range.start + lead;
        out.push(s..s + trimmed.len());
    }
}
