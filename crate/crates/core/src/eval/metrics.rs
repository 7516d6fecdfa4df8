use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn from_pairs(predictions: &[bool], labels: &[bool]) -> Result<Self> {
        if predictions.len() != labels.len() {
            return Err(Error::LengthMismatch(predictions.len(), labels.len()));
        }
        let mut c = Self::default();
        for (&p, &l) in predictions.iter().zip(labels) {
            match (p, l) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Precision, recall and F1 of the positive class.
    pub fn metrics(&self) -> MetricTriple {
        let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
        let p = ratio(self.tp, self.tp + self.fp);
        let r = ratio(self.tp, self.tp + self.fn_);
        let precision = p.unwrap_or(0.0);
        let recall = r.unwrap_or(0.0);
        let f1 = f1_score(precision, recall);
        MetricTriple {
            precision,
            recall,
            f1,
            degenerate: p.is_none() || r.is_none() || precision + recall == 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricTriple {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when a zero denominator forced a metric to 0.
    pub degenerate: bool,
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Metrics of the citing class.
pub fn prf1(predictions: &[bool], labels: &[bool]) -> Result<MetricTriple> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(ConfusionCounts::from_pairs(predictions, labels)?.metrics())
}

/// Thresholded metrics from probabilities: `p >= threshold` is citing.
pub fn prf1_at(probabilities: &[f64], labels: &[bool], threshold: f64) -> Result<MetricTriple> {
    let preds: Vec<bool> = probabilities.iter().map(|&p| p >= threshold).collect();
    prf1(&preds, labels)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn direct_arithmetic() {
        let c = ConfusionCounts { tp: 2, fp: 0, fn_: 2, tn: 5 };
        let m = c.metrics();
        assert_eq!((m.precision, m.recall), (1.0, 0.5));
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!(!m.degenerate);
    }

    #[test]
    fn all_negative_is_degenerate() {
        let m = prf1(&[false, false, false], &[true, false, true]).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert!(m.degenerate);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(prf1(&[true], &[true, false]), Err(Error::LengthMismatch(1, 2))));
        assert!(matches!(prf1(&[], &[]), Err(Error::EmptyInput)));
    }

    fn pairs() -> impl Strategy<Value = Vec<(bool, bool)>> {
        proptest::collection::vec((any::<bool>(), any::<bool>()), 1..60)
    }

    proptest! {
        #[test]
        fn f1_between_precision_and_recall(v in pairs()) {
            let (p, l): (Vec<bool>, Vec<bool>) = v.into_iter().unzip();
            let m = prf1(&p, &l).unwrap();
            if m.precision > 0.0 && m.recall > 0.0 {
                prop_assert!(m.f1 <= m.precision.max(m.recall) + 1e-12);
                prop_assert!(m.f1 >= m.precision.min(m.recall) - 1e-12);
                let h = 2.0 * m.precision * m.recall / (m.precision + m.recall);
                prop_assert!((m.f1 - h).abs() <= 1e-12);
            }
            let c = ConfusionCounts::from_pairs(&p, &l).unwrap();
            prop_assert_eq!(c.total(), p.len());
        }

        #[test]
        fn permutation_invariant(v in pairs(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut w = v.clone();
            w.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (p1, l1): (Vec<bool>, Vec<bool>) = v.into_iter().unzip();
            let (p2, l2): (Vec<bool>, Vec<bool>) = w.into_iter().unzip();
            prop_assert_eq!(prf1(&p1, &l1).unwrap(), prf1(&p2, &l2).unwrap());
        }
    }
}
