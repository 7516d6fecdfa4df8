/// Noise cleanup applied after hint stripping: trims whitespace, drops
/// leading digits and punctuation, and drops trailing digits.
pub fn clean_sentence(text: &str) -> String {
    let head = text.trim_start_matches(|c: char| {
        c.is_whitespace() || c.is_ascii_digit() || is_punctuation(c)
    });
    head.trim_end_matches(|c: char| c.is_whitespace() || c.is_ascii_digit())
        .to_owned()
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || matches!(c, '–' | '—' | '•' | '·' | '‐' | '‘' | '’' | '“' | '”')
}
