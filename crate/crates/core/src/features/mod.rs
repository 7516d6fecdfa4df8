//! Citation context assembly, handcrafted features, similarities, scaling
//! and the design matrices of the interpretable models.

mod context;
mod design;
mod handcrafted;
mod scaler;
mod similarity;

pub use context::{assemble_context, bundles, bundles_of, ContextBundle, ContextIndex};
pub use design::{
    FeaturizerConfig, InterpretableFeaturizer, Representation, SIMILARITY_NAMES,
};
pub use handcrafted::{handcrafted_features, HandcraftedFeatures, HANDCRAFTED_NAMES};
pub use scaler::{fit_scaler, ScaleMode, Scaler};
pub use similarity::{cosine_similarity, sparse_cosine};

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::corpus::{CorpusSplit, LabeledSentence};
    use crate::error::Error;
    use crate::matrix::CsrMatrix;

    fn sentence(id: &str, text: &str, label: bool) -> LabeledSentence {
        LabeledSentence {
            id: id.into(),
            article_id: "a".into(),
            text: text.into(),
            label,
            section_type: "results".into(),
            char_len: text.chars().count(),
            word_len: text.split_whitespace().count(),
            prev_id: None,
            next_id: None,
            prev_has_citation: false,
            next_has_citation: false,
        }
    }

    fn chain(texts: &[(&str, bool)]) -> Vec<LabeledSentence> {
        let n = texts.len();
        texts
            .iter()
            .enumerate()
            .map(|(i, (t, l))| {
                let mut s = sentence(&format!("a#{i}"), t, *l);
                s.prev_id = (i > 0).then(|| format!("a#{}", i - 1));
                s.next_id = (i + 1 < n).then(|| format!("a#{}", i + 1));
                s.prev_has_citation = i > 0 && texts[i - 1].1;
                s.next_has_citation = i + 1 < n && texts[i + 1].1;
                s
            })
            .collect()
    }

    #[test]
    fn neighbors_resolve_through_links() {
        let s = chain(&[("First one here.", true), ("Middle one.", false), ("Last one.", false)]);
        let idx = ContextIndex::new(&s);
        let mid = assemble_context(&idx, &s, 1).unwrap();
        assert_eq!(mid.prev_sentence.as_ref().unwrap().text, "First one here.");
        assert_eq!(mid.next_sentence.as_ref().unwrap().text, "Last one.");
        let first = assemble_context(&idx, &s, 0).unwrap();
        assert!(first.prev_sentence.is_none());
        assert!(matches!(
            assemble_context(&idx, &s, 3),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));
    }

    #[test]
    fn context_only_sentences_still_resolve() {
        let s = chain(&[("First one here.", true), ("Middle one.", false)]);
        let split = CorpusSplit {
            train: vec![s[1].clone()],
            context_only: vec![s[0].clone()],
            ..Default::default()
        };
        let b = bundles(&split, &split.train);
        assert_eq!(b[0].prev_sentence.as_ref().unwrap().id, "a#0");
    }

    #[test]
    fn handcrafted_values() {
        let b = ContextBundle::isolated(sentence("x", "Cats purr.", false));
        let f = handcrafted_features(&b).to_array();
        assert_eq!(f, [0.0, 0.0, 10.0, 2.0, 0.0, 0.0, 0.0, 0.0]);

        let s = chain(&[("Earlier work did it.", true), ("We do it now.", false)]);
        let b = bundles_of(&s);
        let f = handcrafted_features(&b[1]);
        assert!(f.prev_has_citation);
        assert_eq!((f.char_len_prev, f.word_len_prev), (20, 4));
        assert_eq!((f.char_len_cur, f.word_len_cur), (13, 4));
        assert!(!f.next_has_citation);
    }

    proptest! {
        #[test]
        fn cosine_is_symmetric_and_scale_invariant(
            a in proptest::collection::vec(-10.0f64..10.0, 5),
            b in proptest::collection::vec(-10.0f64..10.0, 5),
            c in 0.01f64..100.0,
        ) {
            let s = cosine_similarity(&a, &b);
            prop_assert!((-1.0..=1.0).contains(&s));
            prop_assert!((s - cosine_similarity(&b, &a)).abs() < 1e-12);
            let ca: Vec<f64> = a.iter().map(|x| x * c).collect();
            prop_assert!((s - cosine_similarity(&ca, &b)).abs() < 1e-9);
        }

        #[test]
        fn scaled_training_columns_are_normalized(
            rows in proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, 4), 3..30),
            zero_mask in proptest::collection::vec(any::<bool>(), 4),
        ) {
            let dense: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| r.iter().zip(&zero_mask).map(|(v, z)| if *z && *v < 0.0 { 0.0 } else { *v }).collect())
                .collect();
            let x = CsrMatrix::from_dense(&dense);
            let modes = [ScaleMode::MaxAbs, ScaleMode::MaxAbs, ScaleMode::ZScore, ScaleMode::ZScore];
            let scaler = fit_scaler(&x, &modes);
            let y = scaler.apply(&x);
            let n = y.nrows() as f64;
            for j in 0..4 {
                let col: Vec<f64> = (0..y.nrows()).map(|i| y.get(i, j)).collect();
                if scaler.degenerate.contains(&j) {
                    continue;
                }
                match modes[j] {
                    ScaleMode::MaxAbs => {
                        prop_assert!(col.iter().all(|v| v.abs() <= 1.0 + 1e-12));
                    }
                    ScaleMode::ZScore => {
                        let mean = col.iter().sum::<f64>() / n;
                        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                        prop_assert!(mean.abs() <= 1e-9);
                        prop_assert!((sd - 1.0).abs() <= 1e-9);
                    }
                }
            }
        }
    }
}
