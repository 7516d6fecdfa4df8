//! Latent Dirichlet Allocation fitted by collapsed Gibbs sampling.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sparse::TermIndex;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub topics: usize,
    /// Symmetric document-topic prior; `None` means `50 / topics`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub infer_iterations: usize,
    pub infer_burn_in: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            topics: 200,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            burn_in: 200,
            infer_iterations: 50,
            infer_burn_in: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub k: usize,
    pub vocab: TermIndex,
    /// `k` rows of term distributions over `vocab`.
    pub phi: Vec<Vec<f64>>,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub infer_iterations: usize,
    pub infer_burn_in: usize,
    pub seed: u64,
}

/// Collapsed Gibbs sampler state: one topic per token plus the count tables.
pub struct GibbsSampler {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<usize>>,
    assignments: Vec<Vec<usize>>,
    doc_topic: Vec<Vec<usize>>,
    topic_word: Vec<Vec<usize>>,
    topic_total: Vec<usize>,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
}

impl GibbsSampler {
    pub fn new(docs: Vec<Vec<usize>>, v: usize, k: usize, alpha: f64, beta: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut doc_topic = vec![vec![0; k]; docs.len()];
        let mut topic_word = vec![vec![0; v]; k];
        let mut topic_total = vec![0; k];
        let assignments = docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.iter()
                    .map(|&w| {
                        let z = rng.gen_range(0..k);
                        doc_topic[d][z] += 1;
                        topic_word[z][w] += 1;
                        topic_total[z] += 1;
                        z
                    })
                    .collect()
            })
            .collect();
        Self {
            k,
            v,
            alpha,
            beta,
            docs,
            assignments,
            doc_topic,
            topic_word,
            topic_total,
            rng,
            weights: vec![0.0; k],
        }
    }

    /// One full sweep over every token.
    pub fn sweep(&mut self) {
        let vbeta = self.v as f64 * self.beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i];
                let old = self.assignments[d][i];
                self.doc_topic[d][old] -= 1;
                self.topic_word[old][w] -= 1;
                self.topic_total[old] -= 1;

                let mut total = 0.0;
                for t in 0..self.k {
                    total += (self.doc_topic[d][t] as f64 + self.alpha)
                        * (self.topic_word[t][w] as f64 + self.beta)
                        / (self.topic_total[t] as f64 + vbeta);
                    self.weights[t] = total;
                }
                let new = draw(&self.weights, total, &mut self.rng);

                self.assignments[d][i] = new;
                self.doc_topic[d][new] += 1;
                self.topic_word[new][w] += 1;
                self.topic_total[new] += 1;
            }
        }
    }

    pub fn total_assignments(&self) -> usize {
        self.topic_total.iter().sum()
    }

    pub fn token_count(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    pub fn doc_topic_total(&self) -> usize {
        self.doc_topic.iter().flatten().sum()
    }

    /// Smoothed term distributions from the current counts.
    pub fn phi(&self) -> Vec<Vec<f64>> {
        let vbeta = self.v as f64 * self.beta;
        (0..self.k)
            .map(|t| {
                let denom = self.topic_total[t] as f64 + vbeta;
                self.topic_word[t]
                    .iter()
                    .map(|&c| (c as f64 + self.beta) / denom)
                    .collect()
            })
            .collect()
    }
}

/// Index drawn from the cumulative weights.
fn draw(cumulative: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let u = rng.gen::<f64>() * total;
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

pub fn fit_lda(corpus: &[Vec<String>], config: &LdaConfig) -> Result<TopicModel> {
    if config.topics < 2 {
        return Err(Error::InvalidArgument("LDA needs at least 2 topics".into()));
    }
    if corpus.iter().all(Vec::is_empty) {
        return Err(Error::InvalidArgument("cannot fit LDA on an empty corpus".into()));
    }
    if config.iterations <= config.burn_in {
        return Err(Error::InvalidArgument("iterations must exceed burn-in".into()));
    }
    let terms: BTreeSet<&String> = corpus.iter().flatten().collect();
    let vocab = TermIndex::new(terms.into_iter().cloned().collect());
    let docs: Vec<Vec<usize>> = corpus
        .iter()
        .map(|d| d.iter().filter_map(|t| vocab.get(t)).collect())
        .collect();
    let k = config.topics;
    let alpha = config.alpha.unwrap_or(50.0 / k as f64);
    let mut sampler = GibbsSampler::new(docs, vocab.len(), k, alpha, config.beta, config.seed);

    let mut phi = vec![vec![0.0; vocab.len()]; k];
    let mut samples = 0usize;
    for it in 0..config.iterations {
        sampler.sweep();
        if it >= config.burn_in {
            for (acc, row) in phi.iter_mut().zip(sampler.phi()) {
                acc.iter_mut().zip(row).for_each(|(a, x)| *a += x);
            }
            samples += 1;
        }
    }
    for row in &mut phi {
        row.iter_mut().for_each(|x| *x /= samples as f64);
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= s);
    }
    Ok(TopicModel {
        k,
        vocab,
        phi,
        alpha,
        beta: config.beta,
        iterations: config.iterations,
        burn_in: config.burn_in,
        infer_iterations: config.infer_iterations,
        infer_burn_in: config.infer_burn_in,
        seed: config.seed,
    })
}

/// Topic proportions of one document with `phi` held fixed. Deterministic:
/// the sampler is seeded from the model seed. Unknown tokens are ignored and
/// an empty document yields the uniform vector.
pub fn infer_topics(tokens: &[String], model: &TopicModel) -> Vec<f64> {
    let k = model.k;
    let words: Vec<usize> = tokens.iter().filter_map(|t| model.vocab.get(t)).collect();
    if words.is_empty() {
        return vec![1.0 / k as f64; k];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut counts = vec![0usize; k];
    let mut z: Vec<usize> = words
        .iter()
        .map(|_| {
            let t = rng.gen_range(0..k);
            counts[t] += 1;
            t
        })
        .collect();
    let mut weights = vec![0.0; k];
    let mut theta = vec![0.0; k];
    let mut samples = 0usize;
    let iterations = model.infer_iterations.max(model.infer_burn_in + 1);
    let denom = words.len() as f64 + k as f64 * model.alpha;
    for it in 0..iterations {
        for (i, &w) in words.iter().enumerate() {
            counts[z[i]] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                total += (counts[t] as f64 + model.alpha) * model.phi[t][w];
                weights[t] = total;
            }
            z[i] = draw(&weights, total, &mut rng);
            counts[z[i]] += 1;
        }
        if it >= model.infer_burn_in {
            for t in 0..k {
                theta[t] += (counts[t] as f64 + model.alpha) / denom;
            }
            samples += 1;
        }
    }
    let s: f64 = theta.iter().sum();
    theta.iter_mut().for_each(|x| *x /= s);
    debug_assert!(samples > 0);
    theta
}

impl TopicModel {
    /// The `n` highest-probability terms of `topic`.
    pub fn top_terms(&self, topic: usize, n: usize) -> Vec<&str> {
        let mut idx: Vec<usize> = (0..self.vocab.len()).collect();
        idx.sort_by(|&a, &b| {
            self.phi[topic][b]
                .partial_cmp(&self.phi[topic][a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        idx.into_iter().take(n).map(|i| self.vocab.term(i)).collect()
    }
}
