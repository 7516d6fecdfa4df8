//! Random forest plus elastic net importance report with category totals.

use citeworth::pipeline::{feature_importances, ModelFamily, TrainSpec};
use citeworth::synthetic::keyword_split;

fn main() -> citeworth::Result<()> {
    let mut spec = TrainSpec::new(ModelFamily::Rf);
    spec.featurizer.min_df = 1;
    spec.rf.trees = 50;
    spec.enlr.cv_folds = 3;
    let report = feature_importances(&spec, &keyword_split(300, 4))?;
    print!("{}", report.categories_csv());
    for f in report.top(10) {
        println!("{:.4} {:+} {:<10} {}", f.importance, f.sign, f.category, f.feature);
    }
    Ok(())
}
