//! Interpretable models: elastic-net logistic regression, random forest and
//! the combined importance report.

mod enlr;
mod forest;
mod importance;

pub use enlr::{
    enlr_objective, fit_enlr, lambda_max, predict_enlr, sigmoid, smooth_gradient, train_enlr, CvPoint,
    EnlrGrid, EnlrModel, FitTrace, SolverOptions,
};
pub use forest::{predict_rf, rf_decision, train_rf, Node, RfConfig, RfModel, Tree};
pub use importance::{importance_report, CategoryImportance, FeatureImportance, ImportanceReport};
