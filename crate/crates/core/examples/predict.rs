//! Trains a model, round-trips it through a model file and scores raw text.

use citeworth::artifact::ModelArtifact;
use citeworth::pipeline::{train_model, ModelFamily, TrainSpec};
use citeworth::predict::{predict_text, PredictOptions};
use citeworth::synthetic::keyword_split;

fn main() -> citeworth::Result<()> {
    let mut spec = TrainSpec::new(ModelFamily::Enlr);
    spec.featurizer.min_df = 1;
    let model = train_model(&spec, &keyword_split(200, 2), None)?.model;
    let path = std::env::temp_dir().join("citeworth-example.model");
    ModelArtifact::new(model).save(&path)?;
    let loaded = ModelArtifact::load(&path)?;
    println!("{} model, format version {}", loaded.header.family, loaded.header.format_version);

    let text = "The cells were measured previously [4]. The data show strong signal. We observed higher levels.";
    for two_pass in [false, true] {
        let opts = PredictOptions { two_pass, ..Default::default() };
        for s in predict_text(&loaded.model, text, Some("results"), &opts)? {
            println!("{:.3} {} {}", s.probability, u8::from(s.worthy), s.text);
        }
    }
    Ok(())
}
