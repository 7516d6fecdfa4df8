//! Text representations: tf-idf n-gram vectors, LDA topic mixtures and
//! token embedding tables.

mod embeddings;
mod lda;
mod sparse;
mod tokenize;
mod vocab;

pub use embeddings::{load_embeddings, EmbeddingTable};
pub use lda::{fit_lda, infer_topics, GibbsSampler, LdaConfig, TopicModel};
pub use sparse::{SparseVector, TermIndex};
pub use tokenize::{tokenize, NUM_TOKEN};
pub use vocab::{fit_vocab, ngrams, tfidf_transform, Vocabulary, DEFAULT_MIN_DF};
