//! Trains the attention network, prints its learning curve and verifies its
//! analytic gradients on a tiny instance.

use citeworth::features::bundles_of;
use citeworth::neural::{grad_check, AttentionVariant, NeuralConfig, NeuralModel};
use citeworth::pipeline::{train_model, ModelFamily, TrainSpec};
use citeworth::synthetic::{keyword_corpus, keyword_split};

fn main() -> citeworth::Result<()> {
    let tiny = NeuralConfig {
        char_dim: 3,
        char_hidden: 3,
        word_dim: 4,
        hidden: 4,
        mlp_hidden: 5,
        max_vocab: Some(10),
        ..Default::default()
    };
    let sample = bundles_of(&keyword_corpus(12, 5));
    let model = NeuralModel::build(tiny, &sample, None)?;
    let (examples, _) = model.encode_all(&sample[..4]);
    for g in grad_check(&model, &examples, 1e-5).groups {
        println!("{:<12} max relative error {:.2e}", g.group, g.max_rel_error);
    }

    let mut spec = TrainSpec::new(ModelFamily::Neural);
    spec.neural.hidden = 16;
    spec.neural.word_dim = 16;
    spec.neural.char_dim = 4;
    spec.neural.char_hidden = 4;
    spec.neural.mlp_hidden = 16;
    spec.neural.attention = AttentionVariant::Sdp;
    spec.train.max_epochs = 8;
    spec.train.learning_rate = 0.01;
    let split = keyword_split(300, 2);
    let outcome = train_model(&spec, &split, None)?;
    if let Some(h) = &outcome.history {
        for e in &h.epochs {
            println!("epoch {} train loss {:.4} val F1 {:.3}", e.epoch, e.train_loss, e.val_f1);
        }
    }
    let eval = outcome.model.evaluate(&split, &split.test, 0.5)?;
    println!("test {:?}", eval.metrics);
    Ok(())
}
