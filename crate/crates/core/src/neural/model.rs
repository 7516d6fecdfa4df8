use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::attention::{attention_backward, attention_pool, AttentionVariant, Pooled};
use super::lstm::{bilstm_backward, bilstm_forward, BiLstmCache, LstmParams};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::features::{fit_scaler, handcrafted_features, ContextBundle, ScaleMode, Scaler};
use crate::matrix::CsrMatrix;
use crate::textrep::{tokenize, EmbeddingTable, TermIndex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralConfig {
    pub char_dim: usize,
    pub char_hidden: usize,
    pub word_dim: usize,
    pub hidden: usize,
    pub mlp_hidden: usize,
    pub dropout: f64,
    pub l2: f64,
    pub attention: AttentionVariant,
    pub contextual: bool,
    pub min_word_count: usize,
    pub max_vocab: Option<usize>,
    pub seed: u64,
}

impl Default for NeuralConfig {
    fn default() -> Self {
        Self {
            char_dim: 15,
            char_hidden: 15,
            word_dim: 128,
            hidden: 128,
            mlp_hidden: 64,
            dropout: 0.5,
            l2: 1e-7,
            attention: AttentionVariant::Sdp,
            contextual: true,
            min_word_count: 1,
            max_vocab: Some(50_000),
            seed: 42,
        }
    }
}

impl NeuralConfig {
    pub fn token_dim(&self) -> usize {
        self.word_dim + 2 * self.char_hidden
    }

    pub fn branches(&self) -> usize {
        if self.contextual {
            4
        } else {
            1
        }
    }

    pub fn fusion_dim(&self) -> usize {
        let pooled = self.branches() * 2 * self.hidden;
        if self.contextual {
            pooled + 8
        } else {
            pooled
        }
    }
}

/// Every trainable tensor, grouped by layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralParams {
    /// Row 0 is the unknown-character row.
    pub char_emb: Tensor,
    pub char_fwd: LstmParams,
    pub char_bwd: LstmParams,
    pub word_emb: Tensor,
    pub enc_fwd: LstmParams,
    pub enc_bwd: LstmParams,
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
}

pub const PARAM_GROUPS: [&str; 18] = [
    "char_emb",
    "char_fwd.w",
    "char_fwd.u",
    "char_fwd.b",
    "char_bwd.w",
    "char_bwd.u",
    "char_bwd.b",
    "word_emb",
    "enc_fwd.w",
    "enc_fwd.u",
    "enc_fwd.b",
    "enc_bwd.w",
    "enc_bwd.u",
    "enc_bwd.b",
    "mlp.w1",
    "mlp.b1",
    "mlp.w2",
    "mlp.b2",
];

impl NeuralParams {
    /// Tensors in [`PARAM_GROUPS`] order.
    pub fn tensors(&self) -> Vec<(&'static str, &Tensor)> {
        let t = [
            &self.char_emb,
            &self.char_fwd.w,
            &self.char_fwd.u,
            &self.char_fwd.b,
            &self.char_bwd.w,
            &self.char_bwd.u,
            &self.char_bwd.b,
            &self.word_emb,
            &self.enc_fwd.w,
            &self.enc_fwd.u,
            &self.enc_fwd.b,
            &self.enc_bwd.w,
            &self.enc_bwd.u,
            &self.enc_bwd.b,
            &self.w1,
            &self.b1,
            &self.w2,
            &self.b2,
        ];
        PARAM_GROUPS.iter().copied().zip(t).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        let t = [
            &mut self.char_emb,
            &mut self.char_fwd.w,
            &mut self.char_fwd.u,
            &mut self.char_fwd.b,
            &mut self.char_bwd.w,
            &mut self.char_bwd.u,
            &mut self.char_bwd.b,
            &mut self.word_emb,
            &mut self.enc_fwd.w,
            &mut self.enc_fwd.u,
            &mut self.enc_fwd.b,
            &mut self.enc_bwd.w,
            &mut self.enc_bwd.u,
            &mut self.enc_bwd.b,
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
        ];
        PARAM_GROUPS.iter().copied().zip(t).collect()
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.tensors_mut().into_iter().for_each(|(_, t)| t.data.fill(0.0));
        z
    }

    pub fn sum_sq(&self) -> f64 {
        self.tensors().iter().map(|(_, t)| t.sum_sq()).sum()
    }

    pub fn count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn add_assign(&mut self, other: &Self) {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_assign(b);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.data.iter().all(|v| v.is_finite()))
    }
}

/// Token ids of one sentence: word rows (absent when out of vocabulary) and
/// character rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSeq {
    pub words: Vec<Option<usize>>,
    pub chars: Vec<Vec<usize>>,
}

/// A model-ready example.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    /// `[section, prev, cur, next]` in contextual mode, `[cur]` otherwise.
    /// Empty branches are `None`.
    pub branches: Vec<Option<EncodedSeq>>,
    /// Z-scored handcrafted features.
    pub hand: [f64; 8],
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralModel {
    pub config: NeuralConfig,
    pub words: TermIndex,
    pub chars: TermIndex,
    pub hand_scaler: Scaler,
    pub params: NeuralParams,
}

fn xavier(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let s = (6.0 / (rows + cols).max(1) as f64).sqrt();
    Tensor::uniform(rows, cols, s, rng)
}

impl NeuralModel {
    /// Randomly initialized model over the given vocabularies.
    pub fn new(config: NeuralConfig, words: Vec<String>, chars: Vec<char>, hand_scaler: Scaler) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let c = &config;
        let emb_scale = |d: usize| (3.0 / d.max(1) as f64).sqrt();
        let params = NeuralParams {
            char_emb: Tensor::uniform(chars.len() + 1, c.char_dim, emb_scale(c.char_dim), &mut rng),
            char_fwd: LstmParams::init(c.char_dim, c.char_hidden, &mut rng),
            char_bwd: LstmParams::init(c.char_dim, c.char_hidden, &mut rng),
            word_emb: Tensor::uniform(words.len(), c.word_dim, emb_scale(c.word_dim), &mut rng),
            enc_fwd: LstmParams::init(c.token_dim(), c.hidden, &mut rng),
            enc_bwd: LstmParams::init(c.token_dim(), c.hidden, &mut rng),
            w1: xavier(c.mlp_hidden, c.fusion_dim(), &mut rng),
            b1: Tensor::vector(c.mlp_hidden),
            w2: xavier(2, c.mlp_hidden, &mut rng),
            b2: Tensor::vector(2),
        };
        Self {
            words: TermIndex::new(words),
            chars: TermIndex::new(chars.into_iter().map(String::from).collect()),
            hand_scaler,
            params,
            config,
        }
    }

    /// Builds vocabularies and handcrafted-feature statistics from training
    /// bundles, then initializes parameters. Pre-trained rows seed the word
    /// table; a different dimension goes through a fixed random projection.
    pub fn build(config: NeuralConfig, train: &[ContextBundle], pretrained: Option<&EmbeddingTable>) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut counts: HashMap<String, usize> = HashMap::new();
        let mut charset = std::collections::BTreeSet::new();
        for b in train {
            for tok in tokenize(&b.cur_sentence.text).into_iter().chain(tokenize(&b.section_type)) {
                charset.extend(tok.chars());
                *counts.entry(tok).or_default() += 1;
            }
        }
        let mut words: Vec<(String, usize)> =
            counts.into_iter().filter(|(_, c)| *c >= config.min_word_count).collect();
        words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        if let Some(max) = config.max_vocab {
            words.truncate(max);
        }
        let words: Vec<String> = words.into_iter().map(|(w, _)| w).collect();
        let hand: Vec<Vec<f64>> = train.iter().map(|b| handcrafted_features(b).to_array().to_vec()).collect();
        let scaler = fit_scaler(&CsrMatrix::from_dense(&hand), &[ScaleMode::ZScore; 8]);
        let mut model = Self::new(config, words, charset.into_iter().collect(), scaler);
        if let Some(table) = pretrained {
            model.seed_word_vectors(table);
        }
        Ok(model)
    }

    fn seed_word_vectors(&mut self, table: &EmbeddingTable) {
        let dw = self.config.word_dim;
        let projection = (table.dim != dw).then(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ 0x5eed);
            let s = (3.0 / table.dim.max(1) as f64).sqrt();
            Tensor::uniform(dw, table.dim, s, &mut rng)
        });
        for i in 0..self.words.len() {
            if let Some(v) = table.get(self.words.term(i)) {
                let row = self.params.word_emb.row_mut(i);
                match &projection {
                    Some(p) => {
                        row.fill(0.0);
                        p.matvec_add(v, row);
                    }
                    None => row.copy_from_slice(v),
                }
            }
        }
    }

    fn char_rows(&self, word: &str) -> Vec<usize> {
        let mut buf = [0u8; 4];
        word.chars()
            .map(|c| self.chars.get(c.encode_utf8(&mut buf)).map_or(0, |i| i + 1))
            .collect()
    }

    fn encode_text(&self, text: &str) -> Option<EncodedSeq> {
        let tokens = tokenize(text);
        (!tokens.is_empty()).then(|| self.encode_tokens(&tokens))
    }

    fn encode_tokens(&self, tokens: &[String]) -> EncodedSeq {
        EncodedSeq {
            words: tokens.iter().map(|t| self.words.get(t)).collect(),
            chars: tokens.iter().map(|t| self.char_rows(t)).collect(),
        }
    }

    /// Tokenizes and indexes one bundle. Fails on an empty current sentence.
    pub fn encode(&self, bundle: &ContextBundle) -> Result<Example> {
        let cur = self.encode_text(&bundle.cur_sentence.text).ok_or(Error::EmptyInput)?;
        Ok(self.assemble(bundle, Some(cur)))
    }

    /// Like [`NeuralModel::encode`], but an empty current sentence becomes a
    /// zero branch instead of an error.
    pub fn encode_lenient(&self, bundle: &ContextBundle) -> Example {
        let cur = self.encode_text(&bundle.cur_sentence.text);
        self.assemble(bundle, cur)
    }

    fn assemble(&self, bundle: &ContextBundle, cur: Option<EncodedSeq>) -> Example {
        let raw = handcrafted_features(bundle).to_array();
        let scaled = self.hand_scaler.apply_dense(&raw);
        let mut hand = [0.0; 8];
        hand.copy_from_slice(&scaled);
        if !self.config.contextual {
            // Only the current sentence's lengths; neighbor features stay zero.
            for k in [0, 1, 4, 5, 6, 7] {
                hand[k] = 0.0;
            }
        }
        let branches = if self.config.contextual {
            vec![
                self.encode_text(&bundle.section_type),
                bundle.prev_sentence.as_ref().and_then(|s| self.encode_text(&s.text)),
                cur,
                bundle.next_sentence.as_ref().and_then(|s| self.encode_text(&s.text)),
            ]
        } else {
            vec![cur]
        };
        Example {
            branches,
            hand,
            label: bundle.label(),
        }
    }

    /// Encodes every bundle, skipping those with empty current sentences.
    /// Returns the examples and the number skipped.
    pub fn encode_all(&self, bundles: &[ContextBundle]) -> (Vec<Example>, usize) {
        let encoded: Vec<Option<Example>> = bundles.par_iter().map(|b| self.encode(b).ok()).collect();
        let skipped = encoded.iter().filter(|e| e.is_none()).count();
        (encoded.into_iter().flatten().collect(), skipped)
    }
}

struct CharCache {
    xs: Vec<Vec<f64>>,
    bi: BiLstmCache,
}

fn char_forward(rows: &[usize], p: &NeuralParams) -> (Vec<f64>, Option<(Vec<usize>, CharCache)>) {
    let hc = p.char_fwd.hidden();
    if rows.is_empty() {
        return (vec![0.0; 2 * hc], None);
    }
    let xs: Vec<Vec<f64>> = rows.iter().map(|&r| p.char_emb.row(r).to_vec()).collect();
    let (enc, bi) = bilstm_forward(&xs, &p.char_fwd, &p.char_bwd);
    let mut out = enc.h[rows.len() - 1][..hc].to_vec();
    out.extend_from_slice(&enc.h[0][hc..]);
    (out, Some((rows.to_vec(), CharCache { xs, bi })))
}

/// Concatenated final forward and backward states of the character BiLSTM.
pub fn char_encode(word: &str, model: &NeuralModel) -> Vec<f64> {
    char_forward(&model.char_rows(word), &model.params).0
}

/// Per-token `[word vector ⊕ char encoding]` rows. Out-of-vocabulary words
/// get a zero word vector.
pub fn embed_tokens(tokens: &[String], model: &NeuralModel) -> Vec<Vec<f64>> {
    let seq = model.encode_tokens(tokens);
    embed(&seq, &model.params).0
}

type TokenCaches = Vec<Option<(Vec<usize>, CharCache)>>;

fn embed(seq: &EncodedSeq, p: &NeuralParams) -> (Vec<Vec<f64>>, TokenCaches) {
    let dw = p.word_emb.cols;
    let mut rows = Vec::with_capacity(seq.words.len());
    let mut caches = Vec::with_capacity(seq.words.len());
    for (w, chars) in seq.words.iter().zip(&seq.chars) {
        let mut x = match w {
            Some(i) => p.word_emb.row(*i).to_vec(),
            None => vec![0.0; dw],
        };
        let (c, cache) = char_forward(chars, p);
        x.extend(c);
        rows.push(x);
        caches.push(cache);
    }
    (rows, caches)
}

struct BranchCache {
    tokens: TokenCaches,
    xs: Vec<Vec<f64>>,
    bi: BiLstmCache,
    h: Vec<Vec<f64>>,
    pooled: Pooled,
}

fn branch_forward(seq: &EncodedSeq, model: &NeuralModel) -> (Vec<f64>, BranchCache) {
    let p = &model.params;
    let (xs, tokens) = embed(seq, p);
    let (enc, bi) = bilstm_forward(&xs, &p.enc_fwd, &p.enc_bwd);
    let pooled = attention_pool(&enc.h, enc.last(), model.config.attention, None);
    (
        pooled.z.clone(),
        BranchCache {
            tokens,
            xs,
            bi,
            h: enc.h,
            pooled,
        },
    )
}

fn branch_backward(seq: &EncodedSeq, cache: &BranchCache, dz: &[f64], model: &NeuralModel, g: &mut NeuralParams) {
    let p = &model.params;
    let n = cache.h.len();
    let mut dh = vec![vec![0.0; dz.len()]; n];
    let q = &cache.h[n - 1];
    let dq = attention_backward(&cache.h, q, model.config.attention, &cache.pooled, dz, &mut dh);
    for (d, v) in dh[n - 1].iter_mut().zip(&dq) {
        *d += v;
    }
    let mut dxs = vec![vec![0.0; cache.xs[0].len()]; n];
    bilstm_backward(&cache.bi, &p.enc_fwd, &p.enc_bwd, &dh, &mut g.enc_fwd, &mut g.enc_bwd, &mut dxs);
    let dw = p.word_emb.cols;
    let hc = p.char_fwd.hidden();
    for (t, dx) in dxs.iter().enumerate() {
        if let Some(w) = seq.words[t] {
            for (a, b) in g.word_emb.row_mut(w).iter_mut().zip(&dx[..dw]) {
                *a += b;
            }
        }
        if let Some((rows, cc)) = &cache.tokens[t] {
            let m = rows.len();
            let mut dhc = vec![vec![0.0; 2 * hc]; m];
            dhc[m - 1][..hc].copy_from_slice(&dx[dw..dw + hc]);
            for (a, b) in dhc[0][hc..].iter_mut().zip(&dx[dw + hc..]) {
                *a += b;
            }
            let mut dcx = vec![vec![0.0; cc.xs[0].len()]; m];
            bilstm_backward(&cc.bi, &p.char_fwd, &p.char_bwd, &dhc, &mut g.char_fwd, &mut g.char_bwd, &mut dcx);
            for (&r, d) in rows.iter().zip(&dcx) {
                for (a, b) in g.char_emb.row_mut(r).iter_mut().zip(d) {
                    *a += b;
                }
            }
        }
    }
}

pub(crate) struct ExampleCache {
    branches: Vec<Option<BranchCache>>,
    fusion: Vec<f64>,
    mask: Option<Vec<f64>>,
    pre1: Vec<f64>,
    h1: Vec<f64>,
}

/// Two-class output with its logits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Output {
    pub logits: [f64; 2],
    pub probs: [f64; 2],
}

impl Output {
    /// `-ln p(label)`, computed from the logits.
    pub fn cross_entropy(&self, label: bool) -> f64 {
        let m = self.logits[0].max(self.logits[1]);
        let lse = m + ((self.logits[0] - m).exp() + (self.logits[1] - m).exp()).ln();
        lse - self.logits[usize::from(label)]
    }
}

pub(crate) fn example_forward(
    model: &NeuralModel,
    ex: &Example,
    dropout_rng: Option<&mut ChaCha8Rng>,
) -> (Output, ExampleCache) {
    let p = &model.params;
    let width = 2 * model.config.hidden;
    let mut fusion = Vec::with_capacity(model.config.fusion_dim());
    let mut branches = Vec::with_capacity(ex.branches.len());
    for b in &ex.branches {
        match b {
            Some(seq) => {
                let (z, cache) = branch_forward(seq, model);
                fusion.extend(z);
                branches.push(Some(cache));
            }
            None => {
                fusion.extend(std::iter::repeat_n(0.0, width));
                branches.push(None);
            }
        }
    }
    if model.config.contextual {
        fusion.extend(ex.hand);
    }
    let mask = dropout_rng.filter(|_| model.config.dropout > 0.0).map(|rng| {
        let keep = 1.0 - model.config.dropout;
        (0..fusion.len())
            .map(|_| if rng.gen::<f64>() < model.config.dropout { 0.0 } else { 1.0 / keep })
            .collect::<Vec<f64>>()
    });
    if let Some(m) = &mask {
        fusion.iter_mut().zip(m).for_each(|(f, k)| *f *= k);
    }
    let mut pre1 = p.b1.data.clone();
    p.w1.matvec_add(&fusion, &mut pre1);
    let h1: Vec<f64> = pre1.iter().map(|v| v.max(0.0)).collect();
    let mut logits = [p.b2.data[0], p.b2.data[1]];
    p.w2.matvec_add(&h1, &mut logits);
    let m = logits[0].max(logits[1]);
    let e = [(logits[0] - m).exp(), (logits[1] - m).exp()];
    let s = e[0] + e[1];
    let out = Output {
        logits,
        probs: [e[0] / s, e[1] / s],
    };
    (
        out,
        ExampleCache {
            branches,
            fusion,
            mask,
            pre1,
            h1,
        },
    )
}

pub(crate) fn example_backward(
    model: &NeuralModel,
    ex: &Example,
    cache: &ExampleCache,
    dlogits: [f64; 2],
    g: &mut NeuralParams,
) {
    let p = &model.params;
    g.w2.add_outer(&dlogits, &cache.h1);
    g.b2.data[0] += dlogits[0];
    g.b2.data[1] += dlogits[1];
    let mut dh1 = vec![0.0; cache.h1.len()];
    p.w2.tmatvec_add(&dlogits, &mut dh1);
    let dpre1: Vec<f64> = dh1
        .iter()
        .zip(&cache.pre1)
        .map(|(d, &a)| if a > 0.0 { *d } else { 0.0 })
        .collect();
    g.w1.add_outer(&dpre1, &cache.fusion);
    for (a, b) in g.b1.data.iter_mut().zip(&dpre1) {
        *a += b;
    }
    let mut dfusion = vec![0.0; cache.fusion.len()];
    p.w1.tmatvec_add(&dpre1, &mut dfusion);
    if let Some(m) = &cache.mask {
        dfusion.iter_mut().zip(m).for_each(|(d, k)| *d *= k);
    }
    let width = 2 * model.config.hidden;
    for (k, (seq, bc)) in ex.branches.iter().zip(&cache.branches).enumerate() {
        if let (Some(seq), Some(bc)) = (seq, bc) {
            branch_backward(seq, bc, &dfusion[k * width..(k + 1) * width], model, g);
        }
    }
}

/// Evaluation-mode class probabilities of an encoded example.
pub fn forward_example(model: &NeuralModel, ex: &Example) -> Output {
    example_forward(model, ex, None).0
}

/// Evaluation-mode class probabilities `[p(non-citing), p(citing)]`.
pub fn forward(bundle: &ContextBundle, model: &NeuralModel) -> Result<[f64; 2]> {
    Ok(forward_example(model, &model.encode(bundle)?).probs)
}

/// Citing-class probabilities, evaluated in parallel.
pub fn predict_examples(model: &NeuralModel, examples: &[Example]) -> Vec<f64> {
    examples.par_iter().map(|e| forward_example(model, e).probs[1]).collect()
}

/// Mean `-ln p(label)` over predicted distributions.
pub fn cross_entropy(probs: &[[f64; 2]], labels: &[bool]) -> f64 {
    let s: f64 = probs.iter().zip(labels).map(|(p, &l)| -p[usize::from(l)].ln()).sum();
    s / probs.len() as f64
}

/// `λ Σ θ²` over every trainable parameter.
pub fn l2_penalty(params: &NeuralParams, lambda: f64) -> f64 {
    lambda * params.sum_sq()
}

/// Mean cross-entropy of `batch` in evaluation mode, without the penalty.
pub fn data_loss(model: &NeuralModel, batch: &[Example]) -> f64 {
    let s: f64 = batch
        .par_iter()
        .map(|e| forward_example(model, e).cross_entropy(e.label))
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    s / batch.len() as f64
}

/// Evaluation-mode training objective: mean cross-entropy plus `λ‖θ‖²`.
pub fn loss(model: &NeuralModel, batch: &[Example], lambda: f64) -> f64 {
    data_loss(model, batch) + l2_penalty(&model.params, lambda)
}

const GRAD_CHUNKS: usize = 8;

/// Objective value and gradient over a batch. With `dropout_seeds`, each
/// example gets its own dropout stream; without, evaluation mode.
/// Chunking is fixed so the summation order never depends on thread count.
pub fn batch_gradient(
    model: &NeuralModel,
    batch: &[Example],
    lambda: f64,
    dropout_seeds: Option<&[u64]>,
) -> (f64, NeuralParams) {
    let n = batch.len();
    let chunk = n.div_ceil(GRAD_CHUNKS).max(1);
    let parts: Vec<(f64, NeuralParams)> = batch
        .par_chunks(chunk)
        .enumerate()
        .map(|(c, exs)| {
            let mut g = model.params.zeros_like();
            let mut total = 0.0;
            for (k, ex) in exs.iter().enumerate() {
                let mut rng = dropout_seeds.map(|s| ChaCha8Rng::seed_from_u64(s[c * chunk + k]));
                let (out, cache) = example_forward(model, ex, rng.as_mut());
                total += out.cross_entropy(ex.label);
                let y = usize::from(ex.label);
                let mut d = out.probs;
                d[y] -= 1.0;
                let scale = 1.0 / n as f64;
                example_backward(model, ex, &cache, [d[0] * scale, d[1] * scale], &mut g);
            }
            (total, g)
        })
        .collect();
    let mut grad = model.params.zeros_like();
    let mut total = 0.0;
    for (t, g) in &parts {
        total += t;
        grad.add_assign(g);
    }
    for ((_, g), (_, p)) in grad.tensors_mut().into_iter().zip(model.params.tensors()) {
        for (a, b) in g.data.iter_mut().zip(&p.data) {
            *a += 2.0 * lambda * b;
        }
    }
    (total / n as f64 + l2_penalty(&model.params, lambda), grad)
}
