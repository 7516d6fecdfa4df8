//! Removal of surface citation hints (bracketed reference numbers,
//! author–year parentheticals, trailing "et al.") from sentence text.

use std::borrow::Cow;
use std::sync::LazyLock;

use fancy_regex::Regex;

/// Bracketed or parenthesized numeric reference lists: `[1, 2]`, `(1-3)`,
/// `[8],[9],[12]`, `( 1-2; 4-6; 8 )`. A group opening the text is left alone
/// so that enumerations such as `(1) First ...` survive.
const NUMERIC_GROUP: &str = r"[\[\(]\s*(?:\d[\s,\-–;]*)*\d\s*[\]\)]";

/// Parenthesized text that contains a year or an "et al.".
const AUTHOR_YEAR: &str = r"[\(\[]\s*(?:[^\(\)\[\]]*(?:(?:(?:16|17|18|19|20)\d{2}(?!\d))|(?:\bet[.\s\x{a0}]*al\.))[^\(\)]*)?[\)\]]";

/// "et al." plus an optional trailing year, parenthesized or not.
const ET_AL: &str = r"\bet[.\s\x{a0}]+al\b[.\s\(\[]*(?:(?:16|17|18|19|20)\d{2})*[\)\]\s]*(?=\D)";

pub(crate) static HINT_PATTERNS: LazyLock<[Regex; 3]> = LazyLock::new(|| {
    let numeric = format!(r"(?<!^){NUMERIC_GROUP}(?:\s*[,;]\s*{NUMERIC_GROUP})*");
    [
        Regex::new(&numeric).expect("numeric hint pattern"),
        Regex::new(AUTHOR_YEAR).expect("author-year hint pattern"),
        Regex::new(ET_AL).expect("et al. hint pattern"),
    ]
});

const MAX_ROUNDS: usize = 32;

/// Deletes every citation hint from `text`.
///
/// The three patterns are applied in order and the whole pass repeats until
/// nothing changes, so the result never contains a match and the function
/// is idempotent. Surrounding whitespace is kept as is; cleanup happens in
/// [`clean_sentence`](super::clean_sentence).
pub fn strip_citation_hints(text: &str) -> String {
    let mut current = text.to_owned();
    for _ in 0..MAX_ROUNDS {
        let mut changed = false;
        for re in HINT_PATTERNS.iter() {
            if let Cow::Owned(next) = replace_all(re, &current) {
                if next != current {
                    changed = true;
                    current = next;
                }
            }
        }
        if !changed {
            break;
        }
    }
    current
}

/// True when any hint pattern matches somewhere in `text`.
pub fn contains_citation_hint(text: &str) -> bool {
    HINT_PATTERNS
        .iter()
        .any(|re| re.is_match(text).unwrap_or(false))
}

fn replace_all<'t>(re: &Regex, text: &'t str) -> Cow<'t, str> {
    // A backtrack-limit error leaves the text untouched.
    match re.try_replacen(text, 0, "") {
        Ok(out) => out,
        Err(err) => {
            log::warn!("citation hint pattern aborted: {err}");
            Cow::Borrowed(text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_lists() {
        assert_eq!(
            strip_citation_hints("cause intellectual disability [1, 2]."),
            "cause intellectual disability ."
        );
        assert_eq!(strip_citation_hints("shown [8],[9],[12] here"), "shown  here");
        assert_eq!(strip_citation_hints("as in ( 1-2; 4-6; 8 )."), "as in .");
    }

    #[test]
    fn author_year() {
        assert_eq!(
            strip_citation_hints("as shown (Kobayashi et al., 2005)."),
            "as shown ."
        );
        assert_eq!(strip_citation_hints("(see Methods)"), "(see Methods)");
    }

    #[test]
    fn leading_enumeration_survives() {
        assert_eq!(strip_citation_hints("(1) First step"), "(1) First step");
    }

    #[test]
    fn et_al_inside_words_is_not_a_hint() {
        let s = "We used a set algebra on the data.";
        assert_eq!(strip_citation_hints(s), s);
        assert_eq!(
            strip_citation_hints("Smith et al. 2008 found this."),
            "Smith found this."
        );
    }

    #[test]
    fn nested_brackets_reach_fixed_point() {
        let once = strip_citation_hints("x [[1]] y");
        assert_eq!(strip_citation_hints(&once), once);
        assert!(!contains_citation_hint(&once));
    }

    proptest::proptest! {
        #[test]
        fn stripping_is_idempotent_and_complete(text in r"[a-zA-Z0-9 ,;.\-\[\]\(\)]{0,60}") {
            let once = strip_citation_hints(&text);
            proptest::prop_assert_eq!(strip_citation_hints(&once), once.clone());
            proptest::prop_assert!(!contains_citation_hint(&once));
        }

        #[test]
        fn author_year_fragments_are_removed(
            name in "[A-Z][a-z]{2,9}", year in 1900u32..2030, suffix in "[a-c]?",
        ) {
            let out = strip_citation_hints(&format!("seen ({name} et al., {year}{suffix}) here"));
            proptest::prop_assert_eq!(out, "seen  here");
        }
    }
}
