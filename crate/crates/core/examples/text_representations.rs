//! Tokenization, tf-idf vectors and LDA topic proportions.

use citeworth::synthetic::keyword_corpus;
use citeworth::textrep::{fit_lda, fit_vocab, infer_topics, tfidf_transform, tokenize, LdaConfig};

fn main() -> citeworth::Result<()> {
    let docs: Vec<Vec<String>> = keyword_corpus(200, 1).iter().map(|s| tokenize(&s.text)).collect();

    let vocab = fit_vocab(&docs, (1, 2), 2)?;
    let v = tfidf_transform(&docs[0], &vocab);
    println!("vocabulary: {} terms", vocab.len());
    println!("tokens: {:?}", docs[0]);
    println!("tf-idf nonzeros: {}, norm {:.3}", v.nnz(), v.norm());

    let config = LdaConfig {
        topics: 4,
        iterations: 200,
        burn_in: 50,
        seed: 1,
        ..Default::default()
    };
    let topics = fit_lda(&docs, &config)?;
    for k in 0..topics.k {
        println!("topic {k}: {:?}", topics.top_terms(k, 5));
    }
    let theta = infer_topics(&docs[0], &topics);
    println!("proportions of the first sentence: {theta:.3?}");
    Ok(())
}
