//! Cross-validated elastic-net logistic regression on interpretable features.

use citeworth::features::{bundles, FeaturizerConfig, InterpretableFeaturizer};
use citeworth::linear_models::{train_enlr, EnlrGrid};
use citeworth::synthetic::keyword_split;

fn main() -> citeworth::Result<()> {
    let split = keyword_split(300, 3);
    let train = bundles(&split, &split.train);
    let featurizer = InterpretableFeaturizer::fit(&train, &FeaturizerConfig { min_df: 1, ..Default::default() })?;
    let x = featurizer.transform(&train);
    let y: Vec<bool> = train.iter().map(|b| b.label()).collect();

    let grid = EnlrGrid {
        cv_folds: 3,
        ..Default::default()
    };
    let (model, cv) = train_enlr(&x, &y, &grid)?;
    for p in &cv {
        println!("alpha {:<4} lambda {:<7} mean F1 {:.3}", p.alpha, p.lambda, p.mean_f1);
    }
    println!("chosen alpha {} lambda {}", model.alpha, model.lambda);

    let mut coef: Vec<(&String, f64)> = featurizer.feature_names().iter().zip(model.beta.iter().copied()).collect();
    coef.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    for (name, w) in coef.iter().take(8) {
        println!("{w:+.3} {name}");
    }
    let test = featurizer.transform(&bundles(&split, &split.test));
    let p = model.predict_rows(&test)?;
    println!("first test probabilities: {:.3?}", &p[..5.min(p.len())]);
    Ok(())
}
