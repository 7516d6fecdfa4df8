//! Metrics, down-sampling, cross-corpus generalization and ranked reports.

mod harness;
mod metrics;

pub use harness::{
    check_corpus, combine, cross_corpus, downsample, natural_ratio, ranked_csv, ranked_report, ratio_sweep,
    sweep_csv, Downsampled, GeneralizationRow, GeneralizationTable, NamedCorpus, RankedRow, SweepRow, COMBINED,
    SWEEP_RATIOS,
};
pub use metrics::{f1_score, prf1, prf1_at, ConfusionCounts, MetricTriple};
