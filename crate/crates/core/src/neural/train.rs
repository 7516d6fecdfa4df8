use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{batch_gradient, data_loss, predict_examples, Example, NeuralModel, NeuralParams};
use crate::error::{Error, Result};
use crate::eval::prf1_at;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Epochs without a validation F1 improvement before stopping.
    pub patience: usize,
    pub max_epochs: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 64,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            patience: 3,
            max_epochs: 50,
            threshold: 0.5,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training objective over the epoch's minibatches.
    pub train_loss: f64,
    /// Validation cross-entropy in evaluation mode.
    pub val_loss: f64,
    pub val_precision: f64,
    pub val_recall: f64,
    pub val_f1: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    /// Zero-based index of the epoch whose parameters were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl History {
    pub fn val_f1(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.val_f1).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,val_precision,val_recall,val_f1\n");
        for e in &self.epochs {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                e.epoch, e.train_loss, e.val_loss, e.val_precision, e.val_recall, e.val_f1
            );
        }
        out
    }
}

/// First and second moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    m: NeuralParams,
    v: NeuralParams,
    t: i32,
}

impl Adam {
    pub fn new(params: &NeuralParams) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut NeuralParams, grad: &NeuralParams, cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        let groups = params
            .tensors_mut()
            .into_iter()
            .zip(grad.tensors())
            .zip(self.m.tensors_mut().into_iter().zip(self.v.tensors_mut()));
        for (((_, p), (_, g)), ((_, m), (_, v))) in groups {
            for k in 0..p.data.len() {
                let gk = g.data[k];
                m.data[k] = cfg.beta1 * m.data[k] + (1.0 - cfg.beta1) * gk;
                v.data[k] = cfg.beta2 * v.data[k] + (1.0 - cfg.beta2) * gk * gk;
                let mhat = m.data[k] / c1;
                let vhat = v.data[k] / c2;
                p.data[k] -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.epsilon);
            }
        }
    }
}

fn validate(cfg: &TrainConfig) -> Result<()> {
    if !(cfg.learning_rate > 0.0) || cfg.batch_size == 0 || cfg.max_epochs == 0 {
        return Err(Error::InvalidArgument(
            "learning rate, batch size and epoch count must be positive".into(),
        ));
    }
    Ok(())
}

/// Adam on shuffled minibatches with early stopping on validation F1.
/// The model ends holding the parameters of its best validation epoch. On a
/// non-finite loss the update is discarded, the model keeps its last finite
/// state and the error is returned.
pub fn train(model: &mut NeuralModel, cfg: &TrainConfig, train: &[Example], valid: &[Example]) -> Result<History> {
    validate(cfg)?;
    if train.is_empty() || valid.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(&model.params);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = History::default();
    let mut best_f1 = f64::NEG_INFINITY;
    let mut best_params = model.params.clone();
    let mut since_best = 0;
    let labels: Vec<bool> = valid.iter().map(|e| e.label).collect();

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0;
        for (step, idx) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<Example> = idx.iter().map(|&i| train[i].clone()).collect();
            let seeds: Vec<u64> = (0..batch.len()).map(|_| rng.gen()).collect();
            let (value, grad) = batch_gradient(model, &batch, model.config.l2, Some(&seeds));
            if !value.is_finite() || !grad.all_finite() {
                model.params = best_params;
                return Err(Error::NonFiniteLoss { epoch, step });
            }
            adam.step(&mut model.params, &grad, cfg);
            if !model.params.all_finite() {
                model.params = best_params;
                return Err(Error::NonFiniteLoss { epoch, step });
            }
            total += value;
            batches += 1;
        }
        let probs = predict_examples(model, valid);
        let m = prf1_at(&probs, &labels, cfg.threshold)?;
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: total / batches as f64,
            val_loss: data_loss(model, valid),
            val_precision: m.precision,
            val_recall: m.recall,
            val_f1: m.f1,
        });
        log::info!("epoch {epoch}: loss {:.4}, validation F1 {:.4}", total / batches as f64, m.f1);
        if m.f1 > best_f1 {
            best_f1 = m.f1;
            best_params = model.params.clone();
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                history.stopped_early = true;
                break;
            }
        }
    }
    model.params = best_params;
    Ok(history)
}
