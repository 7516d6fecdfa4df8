//! Central finite-difference verification of the analytic gradients.
//!
//! The numeric side evaluates the objective in double-double precision, so
//! the differences resolve gradients many orders of magnitude smaller than
//! the loss itself.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use super::model::{batch_gradient, Example, NeuralModel, NeuralParams};
use super::reference::{Real, RefParams, AFTER_CHARS, AFTER_FUSION};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheckOptions {
    pub epsilon: f64,
    /// Coordinates checked per group (all of them when the group is smaller).
    pub coords_per_group: usize,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            coords_per_group: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCheck {
    pub group: String,
    pub checked: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub groups: Vec<GroupCheck>,
    pub max_rel_error: f64,
}

/// `|a − n| / max(|a|, |n|, 1e-12)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12)
}

pub fn grad_check(model: &NeuralModel, batch: &[Example], epsilon: f64) -> GradCheckReport {
    let opts = GradCheckOptions {
        epsilon,
        ..Default::default()
    };
    grad_check_with(model, batch, &opts, |_| {})
}

/// Like [`grad_check`], with `corrupt` applied to the analytic gradient
/// before comparison.
pub fn grad_check_with<F: Fn(&mut NeuralParams)>(
    model: &NeuralModel,
    batch: &[Example],
    opts: &GradCheckOptions,
    corrupt: F,
) -> GradCheckReport {
    let lambda = model.config.l2;
    let (_, mut analytic) = batch_gradient(model, batch, lambda, None);
    corrupt(&mut analytic);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut probe = RefParams::<TwoFloat>::of(model);
    let eps = TwoFloat::from(opts.epsilon);
    let mut groups = Vec::new();
    for (g, (name, tensor)) in model.params.tensors().into_iter().enumerate() {
        if g == AFTER_CHARS {
            probe.freeze_chars(batch);
        }
        if g == AFTER_FUSION {
            probe.freeze_fusion(model, batch);
        }
        let len = tensor.len();
        let picks = sample(&mut rng, len, opts.coords_per_group.min(len));
        let mut worst: f64 = 0.0;
        for k in picks.iter() {
            let orig = probe.groups[g][k];
            probe.groups[g][k] = orig + eps;
            let up = probe.objective(model, batch, lambda);
            probe.groups[g][k] = orig - eps;
            let dn = probe.objective(model, batch, lambda);
            probe.groups[g][k] = orig;
            let numeric = ((up - dn) / (eps * 2.0)).to_f64();
            worst = worst.max(relative_error(analytic.tensors()[g].1.data[k], numeric));
        }
        groups.push(GroupCheck {
            group: name.to_owned(),
            checked: picks.len(),
            max_rel_error: worst,
        });
    }
    let max_rel_error = groups.iter().fold(0.0f64, |m, g| m.max(g.max_rel_error));
    GradCheckReport { groups, max_rel_error }
}
