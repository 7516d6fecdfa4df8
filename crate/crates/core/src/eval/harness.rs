use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusSplit, LabeledSentence};
use crate::error::{Error, Result};
use crate::features::bundles;
use crate::pipeline::{Evaluation, TrainedModel};

/// The ratios of the down-sampling sweep, the last being the natural ratio
/// of the reference corpus.
pub const SWEEP_RATIOS: [f64; 4] = [1.0, 2.0, 3.0, 4.13];

/// Non-citing over citing count; `None` without citing sentences.
pub fn natural_ratio(sentences: &[LabeledSentence]) -> Option<f64> {
    let citing = sentences.iter().filter(|s| s.label).count();
    (citing > 0).then(|| (sentences.len() - citing) as f64 / citing as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Downsampled {
    pub split: CorpusSplit,
    pub ratio: f64,
    pub citing: usize,
    pub non_citing_before: usize,
    pub non_citing_after: usize,
    /// The ratio exceeded the natural one and the split was left unchanged.
    pub unreachable: bool,
}

/// Keeps every citing training sentence and a uniform seeded sample of
/// `round(ratio × citing)` non-citing ones, in their original order.
/// Removed sentences move to `context_only` so they still serve as
/// neighbors. Validation and test are untouched.
pub fn downsample(split: &CorpusSplit, ratio: f64, seed: u64) -> Result<Downsampled> {
    if !ratio.is_finite() || ratio < 1.0 {
        return Err(Error::InvalidArgument(format!("down-sampling ratio must be at least 1, got {ratio}")));
    }
    let citing = split.train.iter().filter(|s| s.label).count();
    if citing == 0 {
        return Err(Error::InsufficientData("training split has no citing sentences".into()));
    }
    let majority: Vec<usize> = (0..split.train.len()).filter(|&i| !split.train[i].label).collect();
    let target = (ratio * citing as f64).round() as usize;
    if target >= majority.len() {
        let unreachable = target > majority.len();
        if unreachable {
            log::warn!(
                "ratio {ratio} exceeds the natural ratio {:.3}; training split left unchanged",
                majority.len() as f64 / citing as f64
            );
        }
        return Ok(Downsampled {
            split: split.clone(),
            ratio,
            citing,
            non_citing_before: majority.len(),
            non_citing_after: majority.len(),
            unreachable,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep: HashSet<usize> = sample(&mut rng, majority.len(), target).iter().map(|k| majority[k]).collect();
    let mut out = split.clone();
    out.train.clear();
    for (i, s) in split.train.iter().enumerate() {
        if s.label || keep.contains(&i) {
            out.train.push(s.clone());
        } else {
            out.context_only.push(s.clone());
        }
    }
    Ok(Downsampled {
        split: out,
        ratio,
        citing,
        non_citing_before: majority.len(),
        non_citing_after: target,
        unreachable: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub ratio: f64,
    pub train_citing: usize,
    pub train_non_citing: usize,
    pub unreachable: bool,
    pub test_citing: usize,
    pub test_non_citing: usize,
    pub test: Evaluation,
}

/// Trains one model per ratio and evaluates it on the untouched test split.
pub fn ratio_sweep<F>(split: &CorpusSplit, ratios: &[f64], seed: u64, threshold: f64, train: F) -> Result<Vec<SweepRow>>
where
    F: Fn(&CorpusSplit) -> Result<TrainedModel>,
{
    let test_citing = split.test.iter().filter(|s| s.label).count();
    ratios
        .iter()
        .map(|&r| {
            let d = downsample(split, r, seed)?;
            let model = train(&d.split)?;
            Ok(SweepRow {
                ratio: r,
                train_citing: d.citing,
                train_non_citing: d.non_citing_after,
                unreachable: d.unreachable,
                test_citing,
                test_non_citing: split.test.len() - test_citing,
                test: model.evaluate(&d.split, &d.split.test, threshold)?,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "ratio,train_citing,train_non_citing,unreachable,test_citing,test_non_citing,precision,recall,f1\n",
    );
    for r in rows {
        let m = &r.test.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.ratio, r.train_citing, r.train_non_citing, r.unreachable, r.test_citing, r.test_non_citing,
            m.precision, m.recall, m.f1
        );
    }
    out
}

/// A corpus split with a display name.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedCorpus {
    pub name: String,
    pub split: CorpusSplit,
}

pub const COMBINED: &str = "combined";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationRow {
    pub train: String,
    pub test: String,
    pub evaluation: Evaluation,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationTable {
    pub rows: Vec<GeneralizationRow>,
}

impl GeneralizationTable {
    pub fn get(&self, train: &str, test: &str) -> Option<&Evaluation> {
        self.rows.iter().find(|r| r.train == train && r.test == test).map(|r| &r.evaluation)
    }

    /// One row per train→test pair.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pair,train,test,precision,recall,f1,tp,fp,fn,tn\n");
        for r in &self.rows {
            let (m, c) = (&r.evaluation.metrics, &r.evaluation.counts);
            let _ = writeln!(
                out,
                "{}->{},{},{},{},{},{},{},{},{},{}",
                r.train, r.test, r.train, r.test, m.precision, m.recall, m.f1, c.tp, c.fp, c.fn_, c.tn
            );
        }
        out
    }
}

/// Checks that a corpus is usable in the shared format: non-empty train and
/// test parts, non-empty texts, and neighbor links that resolve inside it.
pub fn check_corpus(c: &NamedCorpus) -> Result<()> {
    let fail = |why: &str| Err(Error::FormatMismatch(format!("corpus {}: {why}", c.name)));
    if c.split.train.is_empty() || c.split.test.is_empty() {
        return fail("train and test parts must be non-empty");
    }
    if c.split.all().any(|s| s.text.trim().is_empty()) {
        return fail("sentence with empty text");
    }
    let ids: HashSet<&str> = c.split.all().map(|s| s.id.as_str()).collect();
    let dangling = c
        .split
        .all()
        .flat_map(|s| [&s.prev_id, &s.next_id])
        .flatten()
        .find(|id| !ids.contains(id.as_str()));
    if let Some(id) = dangling {
        return fail(&format!("neighbor link {id} does not resolve"));
    }
    Ok(())
}

fn prefixed(name: &str, s: &LabeledSentence) -> LabeledSentence {
    let p = |id: &str| format!("{name}:{id}");
    LabeledSentence {
        id: p(&s.id),
        article_id: p(&s.article_id),
        prev_id: s.prev_id.as_deref().map(p),
        next_id: s.next_id.as_deref().map(p),
        ..s.clone()
    }
}

/// Training sample drawn equally from every corpus. Its size is the
/// smallest training split, so each corpus contributes that size divided
/// by the number of corpora. Ids are prefixed with the corpus name;
/// unsampled sentences remain as context.
pub fn combine(corpora: &[NamedCorpus], seed: u64) -> Result<CorpusSplit> {
    let smallest = corpora.iter().map(|c| c.split.train.len()).min().unwrap_or(0);
    let per = smallest / corpora.len().max(1);
    if per == 0 {
        return Err(Error::InsufficientData("a training split is too small to combine".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = CorpusSplit {
        seed,
        split_fractions: corpora[0].split.split_fractions,
        ..Default::default()
    };
    for c in corpora {
        let keep: HashSet<usize> = sample(&mut rng, c.split.train.len(), per).into_iter().collect();
        for (i, s) in c.split.train.iter().enumerate() {
            let s = prefixed(&c.name, s);
            if keep.contains(&i) {
                out.train.push(s);
            } else {
                out.context_only.push(s);
            }
        }
        out.validation.extend(c.split.validation.iter().map(|s| prefixed(&c.name, s)));
        out.context_only.extend(c.split.test.iter().map(|s| prefixed(&c.name, s)));
    }
    Ok(out)
}

/// Trains on every corpus and on the combined sample, and evaluates each
/// model on every corpus' test part.
pub fn cross_corpus<F>(corpora: &[NamedCorpus], seed: u64, threshold: f64, train: F) -> Result<GeneralizationTable>
where
    F: Fn(&CorpusSplit) -> Result<TrainedModel>,
{
    if corpora.len() < 2 {
        return Err(Error::InvalidArgument("cross-corpus evaluation needs at least two corpora".into()));
    }
    let names: HashSet<&str> = corpora.iter().map(|c| c.name.as_str()).collect();
    if names.len() != corpora.len() || names.contains(COMBINED) {
        return Err(Error::InvalidArgument("corpus names must be distinct and not \"combined\"".into()));
    }
    corpora.iter().try_for_each(check_corpus)?;
    let mut models: Vec<(String, TrainedModel)> = Vec::new();
    for c in corpora {
        models.push((c.name.clone(), train(&c.split)?));
    }
    models.push((COMBINED.to_owned(), train(&combine(corpora, seed)?)?));
    let mut table = GeneralizationTable::default();
    for (name, model) in &models {
        for c in corpora {
            table.rows.push(GeneralizationRow {
                train: name.clone(),
                test: c.name.clone(),
                evaluation: model.evaluate(&c.split, &c.split.test, threshold)?,
            });
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRow {
    pub rank: usize,
    pub id: String,
    pub text: String,
    pub section_type: String,
    pub probability: f64,
    pub label: bool,
}

/// Sentences of `part` predicted citing (`p >= threshold`), most probable
/// first, at most `top_k` of them. Ties keep corpus order.
pub fn ranked_report(
    model: &TrainedModel,
    split: &CorpusSplit,
    part: &[LabeledSentence],
    top_k: usize,
    threshold: f64,
) -> Result<Vec<RankedRow>> {
    let probs = model.predict(&bundles(split, part))?;
    let mut order: Vec<usize> = (0..part.len()).filter(|&i| probs[i] >= threshold).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
    order.truncate(top_k);
    Ok(order
        .into_iter()
        .enumerate()
        .map(|(rank, i)| RankedRow {
            rank: rank + 1,
            id: part[i].id.clone(),
            text: part[i].text.clone(),
            section_type: part[i].section_type.clone(),
            probability: probs[i],
            label: part[i].label,
        })
        .collect())
}

pub fn ranked_csv(rows: &[RankedRow]) -> String {
    let mut out = String::from("rank,id,section_type,probability,label,text\n");
    for r in rows {
        let text = format!("\"{}\"", r.text.replace('"', "\"\""));
        let _ = writeln!(out, "{},{},{},{},{},{}", r.rank, r.id, r.section_type, r.probability, r.label, text);
    }
    out
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::pipeline::{train_model, ModelFamily, TrainSpec};
    use crate::synthetic::{keyword_split, sentence};

    fn imbalanced(citing: usize, non: usize) -> CorpusSplit {
        let mut train = Vec::new();
        for i in 0..citing + non {
            train.push(sentence(&format!("a#{i}"), "a", "some words here", i < citing));
        }
        CorpusSplit {
            test: train[..train.len().min(10)].to_vec(),
            validation: train[..train.len().min(5)].to_vec(),
            train,
            ..Default::default()
        }
    }

    #[test]
    fn worked_examples() {
        let split = imbalanced(100, 413);
        let d = downsample(&split, 1.0, 0).unwrap();
        assert_eq!((d.citing, d.non_citing_after), (100, 100));
        assert_eq!(d.split.train.len(), 200);
        assert_eq!(d.split.context_only.len(), 313);
        assert_eq!(d.split.test, split.test);
        let same = downsample(&split, 4.13, 0).unwrap();
        assert_eq!(same.split, split);
        assert!(!same.unreachable);
        let over = downsample(&split, 5.0, 0).unwrap();
        assert_eq!(over.split, split);
        assert!(over.unreachable);
        assert!(matches!(downsample(&split, 0.5, 0), Err(Error::InvalidArgument(_))));
        assert!((natural_ratio(&split.train).unwrap() - 4.13).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn minority_is_preserved_and_ratio_is_hit(
            citing in 1usize..60, non in 0usize..300, ratio in 1.0f64..6.0, seed in 0u64..1000,
        ) {
            let split = imbalanced(citing, non);
            let d = downsample(&split, ratio, seed).unwrap();
            let kept_citing = d.split.train.iter().filter(|s| s.label).count();
            prop_assert_eq!(kept_citing, citing);
            let kept_non = d.split.train.len() - kept_citing;
            let target = (ratio * citing as f64).min(non as f64);
            prop_assert!((kept_non as f64 - target).abs() <= 1.0);
            prop_assert_eq!(d.split.train.len() + d.split.context_only.len(), split.train.len());
            prop_assert_eq!(&d.split.test, &split.test);
            prop_assert_eq!(&d.split.validation, &split.validation);
            prop_assert_eq!(downsample(&split, ratio, seed).unwrap(), d);
        }
    }

    fn enlr(split: &CorpusSplit) -> Result<TrainedModel> {
        let mut spec = TrainSpec::new(ModelFamily::Enlr);
        spec.featurizer.min_df = 1;
        spec.enlr.alphas = vec![0.5];
        spec.enlr.lambdas = vec![1e-3];
        Ok(train_model(&spec, split, None)?.model)
    }

    #[test]
    fn sweep_emits_one_row_per_ratio() {
        let split = keyword_split(200, 8);
        let rows = ratio_sweep(&split, &SWEEP_RATIOS, 1, 0.5, enlr).unwrap();
        assert_eq!(rows.len(), 4);
        for r in &rows {
            assert!(r.train_non_citing as f64 <= (r.ratio * r.train_citing as f64).round());
        }
        assert_eq!(sweep_csv(&rows).lines().count(), 5);
    }

    #[test]
    fn cross_corpus_grid_and_duplicate_control() {
        let a = NamedCorpus {
            name: "a".into(),
            split: keyword_split(120, 1),
        };
        let b = NamedCorpus {
            name: "b".into(),
            split: keyword_split(120, 1),
        };
        let t = cross_corpus(&[a.clone(), b], 3, 0.5, enlr).unwrap();
        assert_eq!(t.rows.len(), 6);
        let diag = t.get("a", "a").unwrap().metrics.f1;
        let off = t.get("a", "b").unwrap().metrics.f1;
        assert!((diag - off).abs() <= 0.02);
        assert!((t.get("combined", "a").unwrap().metrics.f1 - diag).abs() <= 0.02);
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 7);
        assert!(csv.contains("\ncombined->b,"));
        let mut broken = a.clone();
        broken.name = "x".into();
        broken.split.train[0].prev_id = Some("nowhere".into());
        assert!(matches!(cross_corpus(&[a.clone(), broken], 0, 0.5, enlr), Err(Error::FormatMismatch(_))));
        assert!(matches!(cross_corpus(&[a], 0, 0.5, enlr), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn combined_sample_is_balanced_across_corpora() {
        let a = NamedCorpus {
            name: "a".into(),
            split: keyword_split(100, 1),
        };
        let b = NamedCorpus {
            name: "b".into(),
            split: keyword_split(300, 2),
        };
        let c = combine(&[a.clone(), b.clone()], 5).unwrap();
        let from_a = c.train.iter().filter(|s| s.id.starts_with("a:")).count();
        let from_b = c.train.iter().filter(|s| s.id.starts_with("b:")).count();
        assert_eq!(from_a, a.split.train.len() / 2);
        assert_eq!(from_a, from_b);
        assert_eq!(c.train.len() + c.context_only.len(), a.split.all().count() + b.split.all().count() - c.validation.len());
    }

    #[test]
    fn ranked_report_is_sorted_and_recomputable() {
        let split = keyword_split(100, 2);
        let model = enlr(&split).unwrap();
        let rows = ranked_report(&model, &split, &split.test, 10, 0.5).unwrap();
        assert!(rows.len() <= 10 && !rows.is_empty());
        assert!(rows.windows(2).all(|w| w[0].probability >= w[1].probability));
        for r in &rows {
            let s = split.test.iter().find(|s| s.id == r.id).unwrap();
            let p = model.predict(&bundles(&split, std::slice::from_ref(s))).unwrap()[0];
            assert_eq!(p, r.probability);
        }
        assert!(ranked_report(&model, &split, &split.test, 10, 1.1).unwrap().is_empty());
        assert_eq!(ranked_csv(&rows).lines().count(), rows.len() + 1);
    }
}
