//! Down-sampling sweep and cross-corpus generalization grid.

use citeworth::eval::{cross_corpus, ratio_sweep, sweep_csv, NamedCorpus, SWEEP_RATIOS};
use citeworth::corpus::CorpusSplit;
use citeworth::pipeline::{train_model, ModelFamily, TrainSpec, TrainedModel};
use citeworth::synthetic::keyword_split;

fn enlr(split: &CorpusSplit) -> citeworth::Result<TrainedModel> {
    let mut spec = TrainSpec::new(ModelFamily::Enlr);
    spec.featurizer.min_df = 1;
    spec.enlr.cv_folds = 3;
    Ok(train_model(&spec, split, None)?.model)
}

fn main() -> citeworth::Result<()> {
    let mut skewed = keyword_split(400, 5);
    let mut flipped = 0;
    for s in skewed.train.iter_mut().filter(|s| s.label) {
        if flipped % 4 != 0 {
            s.label = false;
        }
        flipped += 1;
    }
    let rows = ratio_sweep(&skewed, &SWEEP_RATIOS, 1, 0.5, enlr)?;
    print!("{}", sweep_csv(&rows));

    let corpora = [
        NamedCorpus { name: "pmoa".into(), split: keyword_split(200, 1) },
        NamedCorpus { name: "acl".into(), split: keyword_split(200, 2) },
    ];
    print!("{}", cross_corpus(&corpora, 3, 0.5, enlr)?.to_csv());
    Ok(())
}
