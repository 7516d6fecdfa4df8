//! Attention pooling over encoder states. Keys and values are the rows of
//! `H`; the query is supplied by the caller (the final encoder state).

use serde::{Deserialize, Serialize};

use super::tensor::{dot, norm, softmax};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionVariant {
    /// Cosine similarity.
    Cos,
    /// Dot product.
    Dp,
    /// Dot product divided by `√d_k`.
    #[default]
    Sdp,
}

impl AttentionVariant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Cos => "cos",
            Self::Dp => "dp",
            Self::Sdp => "sdp",
        }
    }
}

impl std::str::FromStr for AttentionVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cos" => Ok(Self::Cos),
            "dp" => Ok(Self::Dp),
            "sdp" => Ok(Self::Sdp),
            other => Err(format!("unknown attention variant `{other}` (expected cos, dp or sdp)")),
        }
    }
}

/// Cosine score; 0 when either vector is zero.
pub fn score_cos(q: &[f64], k: &[f64]) -> f64 {
    let d = norm(q) * norm(k);
    if d == 0.0 {
        0.0
    } else {
        (dot(q, k) / d).clamp(-1.0, 1.0)
    }
}

pub fn score_dp(q: &[f64], k: &[f64]) -> f64 {
    dot(q, k)
}

pub fn score_sdp(q: &[f64], k: &[f64], d_k: usize) -> f64 {
    dot(q, k) / (d_k as f64).sqrt()
}

pub fn score(variant: AttentionVariant, q: &[f64], k: &[f64]) -> f64 {
    match variant {
        AttentionVariant::Cos => score_cos(q, k),
        AttentionVariant::Dp => score_dp(q, k),
        AttentionVariant::Sdp => score_sdp(q, k, k.len()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pooled {
    pub z: Vec<f64>,
    pub alpha: Vec<f64>,
    scores: Vec<f64>,
}

/// Softmax-weighted average of the rows of `h`. Rows whose mask entry is
/// false score `-inf` and receive zero weight.
pub fn attention_pool(h: &[Vec<f64>], query: &[f64], variant: AttentionVariant, mask: Option<&[bool]>) -> Pooled {
    let scores: Vec<f64> = h
        .iter()
        .enumerate()
        .map(|(i, k)| {
            if mask.is_some_and(|m| !m[i]) {
                f64::NEG_INFINITY
            } else {
                score(variant, query, k)
            }
        })
        .collect();
    let alpha = softmax(&scores);
    let dim = h.first().map_or(0, Vec::len);
    let mut z = vec![0.0; dim];
    for (a, k) in alpha.iter().zip(h) {
        if *a != 0.0 {
            for (zj, kj) in z.iter_mut().zip(k) {
                *zj += a * kj;
            }
        }
    }
    Pooled { z, alpha, scores }
}

/// Gradients of the pooled vector: accumulates into `dh` (per row) and
/// returns the gradient with respect to the query.
pub fn attention_backward(
    h: &[Vec<f64>],
    query: &[f64],
    variant: AttentionVariant,
    pooled: &Pooled,
    dz: &[f64],
    dh: &mut [Vec<f64>],
) -> Vec<f64> {
    let n = h.len();
    let dalpha: Vec<f64> = h.iter().map(|k| dot(dz, k)).collect();
    let mean: f64 = pooled.alpha.iter().zip(&dalpha).map(|(a, d)| a * d).sum();
    let mut dq = vec![0.0; query.len()];
    let qn = norm(query);
    for i in 0..n {
        let a = pooled.alpha[i];
        if a == 0.0 {
            continue;
        }
        for (d, z) in dh[i].iter_mut().zip(dz) {
            *d += a * z;
        }
        let ds = a * (dalpha[i] - mean);
        let k = &h[i];
        match variant {
            AttentionVariant::Dp | AttentionVariant::Sdp => {
                let c = if variant == AttentionVariant::Sdp {
                    ds / (k.len() as f64).sqrt()
                } else {
                    ds
                };
                for j in 0..k.len() {
                    dq[j] += c * k[j];
                    dh[i][j] += c * query[j];
                }
            }
            AttentionVariant::Cos => {
                let kn = norm(k);
                if qn == 0.0 || kn == 0.0 {
                    continue;
                }
                let s = pooled.scores[i];
                let inv = 1.0 / (qn * kn);
                for j in 0..k.len() {
                    dq[j] += ds * (k[j] * inv - s * query[j] / (qn * qn));
                    dh[i][j] += ds * (query[j] * inv - s * k[j] / (kn * kn));
                }
            }
        }
    }
    dq
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn singleton_returns_the_state() {
        let h = vec![vec![0.3, -0.7, 1.1]];
        for v in [AttentionVariant::Cos, AttentionVariant::Dp, AttentionVariant::Sdp] {
            let p = attention_pool(&h, &h[0], v, None);
            assert_eq!(p.z, h[0]);
            assert_eq!(p.alpha, vec![1.0]);
        }
    }

    #[test]
    fn sdp_with_unit_dimension_is_dp() {
        for (q, k) in [(0.3, -1.7), (2.5, 4.0), (-1e-3, 7.0)] {
            assert_eq!(score_sdp(&[q], &[k], 1).to_bits(), score_dp(&[q], &[k]).to_bits());
            assert_eq!(
                score(AttentionVariant::Sdp, &[q], &[k]).to_bits(),
                score(AttentionVariant::Dp, &[q], &[k]).to_bits()
            );
        }
    }

    #[test]
    fn masked_rows_get_no_weight() {
        let h = vec![vec![1.0, 0.0], vec![5.0, 5.0], vec![0.0, 1.0]];
        let p = attention_pool(&h, &[1.0, 1.0], AttentionVariant::Dp, Some(&[true, false, true]));
        assert!(p.alpha[1] < 1e-12);
        assert!((p.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let h = vec![vec![0.2, -0.4, 0.9], vec![-0.5, 0.1, 0.3], vec![0.7, 0.6, -0.2]];
        let w = [0.3, -1.1, 0.8];
        for v in [AttentionVariant::Cos, AttentionVariant::Dp, AttentionVariant::Sdp] {
            let f = |h: &[Vec<f64>]| {
                let q = h.last().unwrap().clone();
                dot(&attention_pool(h, &q, v, None).z, &w)
            };
            let q = h[2].clone();
            let p = attention_pool(&h, &q, v, None);
            let mut dh = vec![vec![0.0; 3]; 3];
            let dq = attention_backward(&h, &q, v, &p, &w, &mut dh);
            for (d, g) in dh[2].iter_mut().zip(&dq) {
                *d += g;
            }
            let eps = 1e-6;
            for i in 0..3 {
                for j in 0..3 {
                    let mut a = h.clone();
                    a[i][j] += eps;
                    let up = f(&a);
                    a[i][j] -= 2.0 * eps;
                    let num = (up - f(&a)) / (2.0 * eps);
                    assert!((num - dh[i][j]).abs() < 1e-7, "{v:?} {i} {j}: {num} vs {}", dh[i][j]);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn weights_form_a_distribution(
            h in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 4), 1..12),
            q in proptest::collection::vec(-5.0f64..5.0, 4),
            v in prop_oneof![Just(AttentionVariant::Cos), Just(AttentionVariant::Dp), Just(AttentionVariant::Sdp)],
        ) {
            let p = attention_pool(&h, &q, v, None);
            prop_assert!(p.alpha.iter().all(|&a| a >= 0.0));
            prop_assert!((p.alpha.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn cosine_bounds(
            q in proptest::collection::vec(-5.0f64..5.0, 3),
            k in proptest::collection::vec(-5.0f64..5.0, 3),
        ) {
            prop_assume!(norm(&q) > 1e-6 && norm(&k) > 1e-6);
            let s = score_cos(&q, &k);
            prop_assert!((-1.0..=1.0).contains(&s));
            prop_assert!((score_cos(&q, &q) - 1.0).abs() < 1e-12);
        }
    }
}
