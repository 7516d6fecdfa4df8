//! Sentence segmentation, citation hint removal and cleaning.

use citeworth::corpus::{clean_sentence, contains_citation_hint, segment_sentences, strip_citation_hints};

const PARAGRAPH: &str = "Folding was studied in E. coli [1, 2]. Rates vary (Kobayashi et al., 2005; Kim and li, 2008). \
Smith et al. (2008) measured it at pH 7.4 (see Methods). Values are shown in Fig. 2.";

fn main() {
    for raw in segment_sentences(PARAGRAPH) {
        let stripped = strip_citation_hints(&raw);
        let cleaned = clean_sentence(&stripped);
        println!("raw:     {raw}");
        println!("cleaned: {cleaned}");
        println!("had hint: {}\n", contains_citation_hint(&raw));
    }
}
