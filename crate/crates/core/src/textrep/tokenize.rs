/// Placeholder that replaces every numeric token.
pub const NUM_TOKEN: &str = "<num>";

/// Lowercased alphanumeric runs. Numbers, including decimals such as `0.05`
/// or `1,000`, collapse to a single [`NUM_TOKEN`].
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() {
            let c = chars[i];
            let joins_number = matches!(c, '.' | ',')
                && i > start
                && chars[i - 1].is_ascii_digit()
                && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit());
            if c.is_alphanumeric() || joins_number {
                i += 1;
            } else {
                break;
            }
        }
        let word: String = chars[start..i].iter().collect();
        if word.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') {
            tokens.push(NUM_TOKEN.to_owned());
        } else {
            tokens.extend(word.to_lowercase().split(['.', ',']).filter(|s| !s.is_empty()).map(str::to_owned));
        }
    }
    tokens
}
