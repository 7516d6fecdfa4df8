//! Loss-only forward pass, generic over the scalar type.
//!
//! Written independently of the cached training path so it can serve as an
//! oracle for it. Instantiated with a double-double scalar it gives finite
//! differences whose rounding noise is far below any gradient of interest.

use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};

use twofloat::TwoFloat;

use super::attention::AttentionVariant;
use super::model::{Example, NeuralModel};

pub(crate) trait Real:
    Copy
    + PartialOrd
    + From<f64>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn tanh(self) -> Self;
    fn sqrt(self) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f64 {
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for TwoFloat {
    fn exp(self) -> Self {
        TwoFloat::exp(self)
    }
    fn ln(self) -> Self {
        TwoFloat::ln(self)
    }
    fn tanh(self) -> Self {
        TwoFloat::tanh(self)
    }
    fn sqrt(self) -> Self {
        TwoFloat::sqrt(self)
    }
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

const CHAR_EMB: usize = 0;
/// First group downstream of the character encoder.
pub(crate) const AFTER_CHARS: usize = WORD_EMB;
/// First group downstream of the fusion vector.
pub(crate) const AFTER_FUSION: usize = W1;
const CHAR_FWD: usize = 1;
const CHAR_BWD: usize = 4;
const WORD_EMB: usize = 7;
const ENC_FWD: usize = 8;
const ENC_BWD: usize = 11;
const W1: usize = 14;
const B1: usize = 15;
const W2: usize = 16;
const B2: usize = 17;

/// Parameter groups in `PARAM_GROUPS` order, each with its column count.
/// Character encodings and fusion vectors may be frozen while only later
/// groups change.
pub(crate) struct RefParams<S> {
    pub groups: Vec<Vec<S>>,
    cols: Vec<usize>,
    chars: Option<HashMap<Vec<usize>, Vec<S>>>,
    fusions: Option<Vec<Vec<S>>>,
}

impl<S: Real> RefParams<S> {
    pub fn of(model: &NeuralModel) -> Self {
        let t = model.params.tensors();
        Self {
            groups: t.iter().map(|(_, t)| t.data.iter().map(|&v| S::from(v)).collect()).collect(),
            cols: t.iter().map(|(_, t)| t.cols).collect(),
            chars: None,
            fusions: None,
        }
    }

    /// Caches every character encoding of `batch` at the current values.
    pub fn freeze_chars(&mut self, batch: &[Example]) {
        let mut map = HashMap::new();
        for seq in batch.iter().flat_map(|e| e.branches.iter().flatten()) {
            for c in &seq.chars {
                if !map.contains_key(c) {
                    map.insert(c.clone(), self.char_vector(c));
                }
            }
        }
        self.chars = Some(map);
    }

    /// Caches every fusion vector of `batch` at the current values.
    pub fn freeze_fusion(&mut self, model: &NeuralModel, batch: &[Example]) {
        let f = batch.iter().map(|e| self.fusion(model, e)).collect();
        self.fusions = Some(f);
    }

    fn row(&self, g: usize, r: usize) -> &[S] {
        let c = self.cols[g];
        &self.groups[g][r * c..(r + 1) * c]
    }

    fn affine(&self, w: usize, b: Option<usize>, x: &[S], out: &mut [S]) {
        let c = self.cols[w];
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = b.map_or(S::from(0.0), |b| self.groups[b][r]);
            for (wv, xv) in self.groups[w][r * c..(r + 1) * c].iter().zip(x) {
                acc = acc + *wv * *xv;
            }
            *o = *o + acc;
        }
    }

    /// Hidden states by position for the LSTM whose `w` group is `base`.
    fn lstm(&self, base: usize, xs: &[Vec<S>], reverse: bool) -> Vec<Vec<S>> {
        let hd = self.groups[base + 2].len() / 4;
        let zero = S::from(0.0);
        let one = S::from(1.0);
        let mut h = vec![zero; hd];
        let mut c = vec![zero; hd];
        let mut out = vec![Vec::new(); xs.len()];
        let order: Vec<usize> = if reverse {
            (0..xs.len()).rev().collect()
        } else {
            (0..xs.len()).collect()
        };
        for t in order {
            let mut a = vec![zero; 4 * hd];
            self.affine(base, Some(base + 2), &xs[t], &mut a);
            self.affine(base + 1, None, &h, &mut a);
            let sig = |v: S| one / (one + (-v).exp());
            for j in 0..hd {
                let i = sig(a[j]);
                let f = sig(a[hd + j]);
                let g = a[2 * hd + j].tanh();
                let o = sig(a[3 * hd + j]);
                c[j] = f * c[j] + i * g;
                h[j] = o * c[j].tanh();
            }
            out[t] = h.clone();
        }
        out
    }

    fn bilstm(&self, fwd: usize, bwd: usize, xs: &[Vec<S>]) -> Vec<Vec<S>> {
        let f = self.lstm(fwd, xs, false);
        let b = self.lstm(bwd, xs, true);
        f.into_iter().zip(b).map(|(f, b)| [f, b].concat()).collect()
    }

    fn char_vector(&self, rows: &[usize]) -> Vec<S> {
        let hc = self.groups[CHAR_FWD + 2].len() / 4;
        if rows.is_empty() {
            return vec![S::from(0.0); 2 * hc];
        }
        let xs: Vec<Vec<S>> = rows.iter().map(|&r| self.row(CHAR_EMB, r).to_vec()).collect();
        let h = self.bilstm(CHAR_FWD, CHAR_BWD, &xs);
        [&h[rows.len() - 1][..hc], &h[0][hc..]].concat()
    }

    fn pool(&self, words: &[Option<usize>], chars: &[Vec<usize>], variant: AttentionVariant) -> Vec<S> {
        let dw = self.cols[WORD_EMB];
        let xs: Vec<Vec<S>> = words
            .iter()
            .zip(chars)
            .map(|(w, c)| {
                let word = w.map_or_else(|| vec![S::from(0.0); dw], |i| self.row(WORD_EMB, i).to_vec());
                let chars = match &self.chars {
                    Some(map) => map[c].clone(),
                    None => self.char_vector(c),
                };
                [word, chars].concat()
            })
            .collect();
        let h = self.bilstm(ENC_FWD, ENC_BWD, &xs);
        let q = &h[h.len() - 1];
        let dot = |a: &[S], b: &[S]| a.iter().zip(b).fold(S::from(0.0), |s, (x, y)| s + *x * *y);
        let scores: Vec<S> = h
            .iter()
            .map(|k| match variant {
                AttentionVariant::Dp => dot(q, k),
                AttentionVariant::Sdp => dot(q, k) / S::from(k.len() as f64).sqrt(),
                AttentionVariant::Cos => {
                    let d = dot(q, q).sqrt() * dot(k, k).sqrt();
                    if d == S::from(0.0) {
                        d
                    } else {
                        dot(q, k) / d
                    }
                }
            })
            .collect();
        let m = scores.iter().copied().fold(scores[0], |a, b| if b > a { b } else { a });
        let e: Vec<S> = scores.iter().map(|&s| (s - m).exp()).collect();
        let total = e.iter().fold(S::from(0.0), |a, &b| a + b);
        let mut z = vec![S::from(0.0); q.len()];
        for (w, k) in e.iter().zip(&h) {
            for (zj, kj) in z.iter_mut().zip(k) {
                *zj = *zj + *w / total * *kj;
            }
        }
        z
    }

    fn fusion(&self, model: &NeuralModel, ex: &Example) -> Vec<S> {
        let width = 2 * model.config.hidden;
        let mut fusion = Vec::new();
        for b in &ex.branches {
            match b {
                Some(seq) => fusion.extend(self.pool(&seq.words, &seq.chars, model.config.attention)),
                None => fusion.extend(std::iter::repeat_n(S::from(0.0), width)),
            }
        }
        if model.config.contextual {
            fusion.extend(ex.hand.iter().map(|&v| S::from(v)));
        }
        fusion
    }

    /// Evaluation-mode cross-entropy of one example.
    fn example_loss(&self, fusion: &[S], label: bool) -> S {
        let zero = S::from(0.0);
        let mut h1 = vec![zero; self.groups[B1].len()];
        self.affine(W1, Some(B1), fusion, &mut h1);
        for v in &mut h1 {
            if !(*v > zero) {
                *v = zero;
            }
        }
        let mut logits = [zero; 2];
        self.affine(W2, Some(B2), &h1, &mut logits);
        let m = if logits[1] > logits[0] { logits[1] } else { logits[0] };
        let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
        lse - logits[usize::from(label)]
    }

    /// Mean cross-entropy over `batch` plus `λ Σ θ²`.
    pub fn objective(&self, model: &NeuralModel, batch: &[Example], lambda: f64) -> S {
        let mut data = S::from(0.0);
        for (i, ex) in batch.iter().enumerate() {
            let l = match &self.fusions {
                Some(f) => self.example_loss(&f[i], ex.label),
                None => self.example_loss(&self.fusion(model, ex), ex.label),
            };
            data = data + l;
        }
        let data = data / S::from(batch.len() as f64);
        let sq = self
            .groups
            .iter()
            .flatten()
            .fold(S::from(0.0), |s, &v| s + v * v);
        data + S::from(lambda) * sq
    }
}
