//! One interface over the three model families: training from a corpus
//! split and scoring context bundles.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusSplit;
use crate::error::{Error, Result};
use crate::eval::{prf1_at, ConfusionCounts, MetricTriple};
use crate::features::{bundles, ContextBundle, FeaturizerConfig, InterpretableFeaturizer};
use crate::linear_models::{
    importance_report, train_enlr, train_rf, CvPoint, EnlrGrid, EnlrModel, ImportanceReport, RfConfig, RfModel,
};
use crate::neural::{predict_examples, train, AttentionVariant, History, NeuralConfig, NeuralModel, TrainConfig};
use crate::textrep::EmbeddingTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Enlr,
    Rf,
    Neural,
}

impl ModelFamily {
    pub fn name(self) -> &'static str {
        match self {
            Self::Enlr => "enlr",
            Self::Rf => "rf",
            Self::Neural => "neural",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "enlr" => Ok(Self::Enlr),
            "rf" => Ok(Self::Rf),
            "neural" => Ok(Self::Neural),
            other => Err(Error::InvalidArgument(format!(
                "unknown model family {other:?} (expected enlr, rf or neural)"
            ))),
        }
    }
}

/// Everything needed to train one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub family: ModelFamily,
    pub contextual: bool,
    pub featurizer: FeaturizerConfig,
    pub enlr: EnlrGrid,
    pub rf: RfConfig,
    pub neural: NeuralConfig,
    pub train: TrainConfig,
}

impl TrainSpec {
    pub fn new(family: ModelFamily) -> Self {
        Self {
            family,
            contextual: true,
            featurizer: FeaturizerConfig::default(),
            enlr: EnlrGrid::default(),
            rf: RfConfig::default(),
            neural: NeuralConfig::default(),
            train: TrainConfig::default(),
        }
    }

    /// Sets the seed of every stochastic component.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.enlr.seed = seed;
        self.rf.seed = seed;
        self.neural.seed = seed;
        self.train.seed = seed;
        self.featurizer.lda.seed = seed;
        self
    }
}

/// A trained model with the preprocessing it needs at inference.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Enlr {
        featurizer: InterpretableFeaturizer,
        model: EnlrModel,
    },
    Rf {
        featurizer: InterpretableFeaturizer,
        model: RfModel,
    },
    Neural(Box<NeuralModel>),
}

/// A trained model plus its training diagnostics.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    /// Cross-validation grid of the elastic net.
    pub cv: Vec<CvPoint>,
    /// Per-epoch curve of the neural model.
    pub history: Option<History>,
}

fn labels(b: &[ContextBundle]) -> Vec<bool> {
    b.iter().map(ContextBundle::label).collect()
}

/// Trains on `split.train`; the neural model also early-stops on
/// `split.validation`. Neighbors resolve across the whole split.
pub fn train_model(spec: &TrainSpec, split: &CorpusSplit, pretrained: Option<&EmbeddingTable>) -> Result<TrainOutcome> {
    if split.train.is_empty() {
        return Err(Error::EmptyInput);
    }
    let train_b = bundles(split, &split.train);
    let y = labels(&train_b);
    let fit_features = || {
        let cfg = FeaturizerConfig {
            contextual: spec.contextual,
            ..spec.featurizer.clone()
        };
        let f = InterpretableFeaturizer::fit(&train_b, &cfg)?;
        let x = f.transform(&train_b);
        Ok::<_, Error>((f, x))
    };
    match spec.family {
        ModelFamily::Enlr => {
            let (featurizer, x) = fit_features()?;
            let (model, cv) = train_enlr(&x, &y, &spec.enlr)?;
            let model = model.with_feature_names(featurizer.feature_names().to_vec());
            Ok(TrainOutcome {
                model: TrainedModel::Enlr { featurizer, model },
                cv,
                history: None,
            })
        }
        ModelFamily::Rf => {
            let (featurizer, x) = fit_features()?;
            let model = train_rf(&x, &y, &spec.rf)?.with_feature_names(featurizer.feature_names().to_vec());
            Ok(TrainOutcome {
                model: TrainedModel::Rf { featurizer, model },
                cv: Vec::new(),
                history: None,
            })
        }
        ModelFamily::Neural => {
            let config = NeuralConfig {
                contextual: spec.contextual,
                ..spec.neural.clone()
            };
            let mut model = NeuralModel::build(config, &train_b, pretrained)?;
            let (train_ex, skipped) = model.encode_all(&train_b);
            let (valid_ex, _) = model.encode_all(&bundles(split, &split.validation));
            if skipped > 0 {
                log::warn!("{skipped} training sentences have no tokens and were skipped");
            }
            let history = train(&mut model, &spec.train, &train_ex, &valid_ex)?;
            Ok(TrainOutcome {
                model: TrainedModel::Neural(Box::new(model)),
                cv: Vec::new(),
                history: Some(history),
            })
        }
    }
}

impl TrainedModel {
    pub fn family(&self) -> ModelFamily {
        match self {
            Self::Enlr { .. } => ModelFamily::Enlr,
            Self::Rf { .. } => ModelFamily::Rf,
            Self::Neural(_) => ModelFamily::Neural,
        }
    }

    pub fn contextual(&self) -> bool {
        match self {
            Self::Enlr { featurizer, .. } | Self::Rf { featurizer, .. } => featurizer.config.contextual,
            Self::Neural(m) => m.config.contextual,
        }
    }

    pub fn attention(&self) -> Option<AttentionVariant> {
        match self {
            Self::Neural(m) => Some(m.config.attention),
            _ => None,
        }
    }

    /// Citing-class probability of every bundle. A current sentence without
    /// tokens scores through an empty branch in the neural model.
    pub fn predict(&self, bundles: &[ContextBundle]) -> Result<Vec<f64>> {
        match self {
            Self::Enlr { featurizer, model } => model.predict_rows(&featurizer.transform(bundles)),
            Self::Rf { featurizer, model } => model.predict_rows(&featurizer.transform(bundles)),
            Self::Neural(m) => {
                let ex: Vec<_> = bundles.par_iter().map(|b| m.encode_lenient(b)).collect();
                Ok(predict_examples(m, &ex))
            }
        }
    }

    /// Metrics on `part`, resolving neighbors within `split`.
    pub fn evaluate(&self, split: &CorpusSplit, part: &[crate::corpus::LabeledSentence], threshold: f64) -> Result<Evaluation> {
        let b = bundles(split, part);
        let probs = self.predict(&b)?;
        let y = labels(&b);
        let preds: Vec<bool> = probs.iter().map(|&p| p >= threshold).collect();
        Ok(Evaluation {
            counts: ConfusionCounts::from_pairs(&preds, &y)?,
            metrics: prf1_at(&probs, &y, threshold)?,
        })
    }
}

/// Trains an elastic net and a forest on one shared feature space and
/// reports forest importances signed by the elastic-net coefficients.
pub fn feature_importances(spec: &TrainSpec, split: &CorpusSplit) -> Result<ImportanceReport> {
    let train_b = bundles(split, &split.train);
    let y = labels(&train_b);
    let cfg = FeaturizerConfig {
        contextual: spec.contextual,
        ..spec.featurizer.clone()
    };
    let f = InterpretableFeaturizer::fit(&train_b, &cfg)?;
    let x = f.transform(&train_b);
    let (enlr, _) = train_enlr(&x, &y, &spec.enlr)?;
    let rf = train_rf(&x, &y, &spec.rf)?;
    let categories: Vec<String> = f.category_map().into_iter().map(|(_, c)| c).collect();
    importance_report(&rf, &enlr, f.feature_names(), &categories)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub counts: ConfusionCounts,
    pub metrics: MetricTriple,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::keyword_split;

    #[test]
    fn families_parse_and_print() {
        for f in [ModelFamily::Enlr, ModelFamily::Rf, ModelFamily::Neural] {
            assert_eq!(f.name().parse::<ModelFamily>().unwrap(), f);
        }
        assert!("svm".parse::<ModelFamily>().is_err());
    }

    #[test]
    fn interpretable_families_learn_the_keyword() {
        let split = keyword_split(200, 3);
        for family in [ModelFamily::Enlr, ModelFamily::Rf] {
            let mut spec = TrainSpec::new(family);
            spec.featurizer.min_df = 1;
            spec.rf.trees = 20;
            let out = train_model(&spec, &split, None).unwrap();
            assert_eq!(out.model.family(), family);
            let e = out.model.evaluate(&split, &split.test, 0.5).unwrap();
            assert!(e.metrics.f1 > 0.9, "{family}: {:?}", e.metrics);
            assert_eq!(e.counts.total(), split.test.len());
        }
    }

    #[test]
    fn importances_rank_the_keyword_first() {
        let mut spec = TrainSpec::new(ModelFamily::Rf);
        spec.featurizer.min_df = 1;
        spec.rf.trees = 20;
        let r = feature_importances(&spec, &keyword_split(200, 3)).unwrap();
        let kw = r.top(3).iter().find(|f| f.category == "cur" && f.feature.contains("previously"));
        assert_eq!(kw.map(|f| f.sign), Some(1), "{:?}", r.top(3));
    }
}
