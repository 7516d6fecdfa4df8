//! LSTM cells and bidirectional encoding with explicit backward passes.
//!
//! Gate pre-activations are stacked in blocks of `hidden` rows in the order
//! input, forget, cell candidate, output:
//!
//! ```text
//! a = W x_t + U h_{t-1} + b
//! i = σ(a_i)  f = σ(a_f)  g = tanh(a_g)  o = σ(a_o)
//! c_t = f ⊙ c_{t-1} + i ⊙ g
//! h_t = o ⊙ tanh(c_t)
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{sigmoid, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    /// Input-to-hidden weights, `4H × I`.
    pub w: Tensor,
    /// Hidden-to-hidden weights, `4H × H`.
    pub u: Tensor,
    /// Biases, `4H × 1`.
    pub b: Tensor,
}

/// Gate blocks within the stacked pre-activation vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Cell = 2,
    Output = 3,
}

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w: Tensor::zeros(4 * hidden, input),
            u: Tensor::zeros(4 * hidden, hidden),
            b: Tensor::vector(4 * hidden),
        }
    }

    /// Uniform init scaled by fan-in; forget bias starts at 1.
    pub fn init<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let s = 1.0 / ((input + hidden).max(1) as f64).sqrt();
        let mut p = Self {
            w: Tensor::uniform(4 * hidden, input, s, rng),
            u: Tensor::uniform(4 * hidden, hidden, s, rng),
            b: Tensor::vector(4 * hidden),
        };
        p.gate_bias_mut(Gate::Forget).fill(1.0);
        p
    }

    pub fn hidden(&self) -> usize {
        self.b.rows / 4
    }

    pub fn input(&self) -> usize {
        self.w.cols
    }

    pub fn gate_bias_mut(&mut self, gate: Gate) -> &mut [f64] {
        let h = self.hidden();
        let k = gate as usize;
        &mut self.b.data[k * h..(k + 1) * h]
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input(), self.hidden())
    }
}

#[derive(Debug, Clone, Default)]
struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Activated gates `[i, f, g, o]`.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

fn step(x: &[f64], h_prev: &[f64], c_prev: &[f64], p: &LstmParams) -> (Vec<f64>, Vec<f64>, StepCache) {
    let hd = p.hidden();
    let mut a = p.b.data.clone();
    p.w.matvec_add(x, &mut a);
    p.u.matvec_add(h_prev, &mut a);
    for k in 0..4 * hd {
        a[k] = if (2 * hd..3 * hd).contains(&k) { a[k].tanh() } else { sigmoid(a[k]) };
    }
    let mut c = vec![0.0; hd];
    let mut h = vec![0.0; hd];
    let mut tanh_c = vec![0.0; hd];
    for j in 0..hd {
        let (i, f, g, o) = (a[j], a[hd + j], a[2 * hd + j], a[3 * hd + j]);
        c[j] = f * c_prev[j] + i * g;
        tanh_c[j] = c[j].tanh();
        h[j] = o * tanh_c[j];
    }
    let cache = StepCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        gates: a,
        tanh_c,
    };
    (h, c, cache)
}

/// One time step: `(h_t, c_t)` from `x_t` and the previous state.
pub fn lstm_step(x: &[f64], h_prev: &[f64], c_prev: &[f64], p: &LstmParams) -> (Vec<f64>, Vec<f64>) {
    let (h, c, _) = step(x, h_prev, c_prev, p);
    (h, c)
}

/// Cached activations of one directional pass.
#[derive(Debug, Clone, Default)]
pub struct LstmCache {
    /// Steps in processing order.
    steps: Vec<StepCache>,
    reverse: bool,
}

/// Runs the sequence left to right (or right to left when `reverse`).
/// Hidden states are returned at their original positions.
pub fn lstm_forward(xs: &[Vec<f64>], p: &LstmParams, reverse: bool) -> (Vec<Vec<f64>>, LstmCache) {
    let n = xs.len();
    let hd = p.hidden();
    let mut hs = vec![Vec::new(); n];
    let mut h = vec![0.0; hd];
    let mut c = vec![0.0; hd];
    let mut steps = Vec::with_capacity(n);
    for k in 0..n {
        let t = if reverse { n - 1 - k } else { k };
        let (h2, c2, cache) = step(&xs[t], &h, &c, p);
        hs[t] = h2.clone();
        h = h2;
        c = c2;
        steps.push(cache);
    }
    (hs, LstmCache { steps, reverse })
}

/// Backpropagates `dhs` (gradients of the returned hidden states, by
/// position) into `grad` and `dxs`.
pub fn lstm_backward(cache: &LstmCache, p: &LstmParams, dhs: &[Vec<f64>], grad: &mut LstmParams, dxs: &mut [Vec<f64>]) {
    let n = cache.steps.len();
    let hd = p.hidden();
    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];
    let mut da = vec![0.0; 4 * hd];
    for k in (0..n).rev() {
        let t = if cache.reverse { n - 1 - k } else { k };
        let s = &cache.steps[k];
        let g = &s.gates;
        for j in 0..hd {
            let dh = dhs[t].get(j).copied().unwrap_or(0.0) + dh_next[j];
            let (i, f, cg, o) = (g[j], g[hd + j], g[2 * hd + j], g[3 * hd + j]);
            let tc = s.tanh_c[j];
            let dc = dc_next[j] + dh * o * (1.0 - tc * tc);
            da[j] = dc * cg * i * (1.0 - i);
            da[hd + j] = dc * s.c_prev[j] * f * (1.0 - f);
            da[2 * hd + j] = dc * i * (1.0 - cg * cg);
            da[3 * hd + j] = dh * tc * o * (1.0 - o);
            dc_next[j] = dc * f;
        }
        grad.w.add_outer(&da, &s.x);
        grad.u.add_outer(&da, &s.h_prev);
        for (gb, d) in grad.b.data.iter_mut().zip(&da) {
            *gb += d;
        }
        p.w.tmatvec_add(&da, &mut dxs[t]);
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        p.u.tmatvec_add(&da, &mut dh_next);
    }
}

/// Per-token BiLSTM states `h_t = fwd_t ⊕ bwd_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderState {
    pub h: Vec<Vec<f64>>,
    pub hidden: usize,
}

impl EncoderState {
    /// State at the final time step.
    pub fn last(&self) -> &[f64] {
        self.h.last().map_or(&[], Vec::as_slice)
    }
}

#[derive(Debug, Clone, Default)]
pub struct BiLstmCache {
    fwd: LstmCache,
    bwd: LstmCache,
}

pub fn bilstm_forward(xs: &[Vec<f64>], fwd: &LstmParams, bwd: &LstmParams) -> (EncoderState, BiLstmCache) {
    let (hf, cf) = lstm_forward(xs, fwd, false);
    let (hb, cb) = lstm_forward(xs, bwd, true);
    let h = hf
        .into_iter()
        .zip(hb)
        .map(|(mut a, b)| {
            a.extend(b);
            a
        })
        .collect();
    (
        EncoderState {
            h,
            hidden: fwd.hidden(),
        },
        BiLstmCache { fwd: cf, bwd: cb },
    )
}

pub fn bilstm_encode(xs: &[Vec<f64>], fwd: &LstmParams, bwd: &LstmParams) -> EncoderState {
    bilstm_forward(xs, fwd, bwd).0
}

/// Splits `dh` (per position, width `2H`) across both directions.
pub fn bilstm_backward(
    cache: &BiLstmCache,
    fwd: &LstmParams,
    bwd: &LstmParams,
    dh: &[Vec<f64>],
    gfwd: &mut LstmParams,
    gbwd: &mut LstmParams,
    dxs: &mut [Vec<f64>],
) {
    let hd = fwd.hidden();
    let df: Vec<Vec<f64>> = dh.iter().map(|d| d[..hd].to_vec()).collect();
    let db: Vec<Vec<f64>> = dh.iter().map(|d| d[hd..].to_vec()).collect();
    lstm_backward(&cache.fwd, fwd, &df, gfwd, dxs);
    lstm_backward(&cache.bwd, bwd, &db, gbwd, dxs);
}
