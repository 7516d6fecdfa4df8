use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::enlr::EnlrModel;
use super::forest::RfModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub category: String,
    pub importance: f64,
    /// Sign of the elastic-net coefficient: -1, 0 or 1.
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryImportance {
    pub category: String,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    /// Sorted by importance, descending; ties keep column order.
    pub features: Vec<FeatureImportance>,
    /// In order of first appearance in the column layout.
    pub categories: Vec<CategoryImportance>,
}

pub fn importance_report(
    rf: &RfModel,
    enlr: &EnlrModel,
    feature_names: &[String],
    category_map: &[String],
) -> Result<ImportanceReport> {
    let m = rf.importances.len();
    for (what, len) in [
        ("elastic-net coefficients", enlr.beta.len()),
        ("feature names", feature_names.len()),
        ("category map", category_map.len()),
    ] {
        if len != m {
            return Err(Error::FeatureSpaceMismatch(format!(
                "forest has {m} features but {what} has {len}"
            )));
        }
    }
    let mut features: Vec<FeatureImportance> = (0..m)
        .map(|j| FeatureImportance {
            feature: feature_names[j].clone(),
            category: category_map[j].clone(),
            importance: rf.importances[j],
            sign: if enlr.beta[j] > 0.0 {
                1
            } else if enlr.beta[j] < 0.0 {
                -1
            } else {
                0
            },
        })
        .collect();
    let mut categories: Vec<CategoryImportance> = Vec::new();
    for f in &features {
        match categories.iter_mut().find(|c| c.category == f.category) {
            Some(c) => c.importance += f.importance,
            None => categories.push(CategoryImportance {
                category: f.category.clone(),
                importance: f.importance,
            }),
        }
    }
    features.sort_by(|a, b| b.importance.total_cmp(&a.importance));
    Ok(ImportanceReport { features, categories })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

impl ImportanceReport {
    /// `feature,category,importance,sign`, sign written as `+`, `-` or `0`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,category,importance,sign\n");
        for f in &self.features {
            let sign = match f.sign {
                1 => "+",
                -1 => "-",
                _ => "0",
            };
            let _ = writeln!(out, "{},{},{},{}", csv_field(&f.feature), csv_field(&f.category), f.importance, sign);
        }
        out
    }

    pub fn categories_csv(&self) -> String {
        let mut out = String::from("category,importance\n");
        for c in &self.categories {
            let _ = writeln!(out, "{},{}", csv_field(&c.category), c.importance);
        }
        out
    }

    pub fn top(&self, k: usize) -> &[FeatureImportance] {
        &self.features[..k.min(self.features.len())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_models::{train_rf, RfConfig};
    use crate::matrix::CsrMatrix;

    fn models() -> (RfModel, EnlrModel) {
        let x = CsrMatrix::from_dense(&[
            vec![1.0, 0.0, 2.0],
            vec![0.0, 1.0, 0.5],
            vec![1.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let rf = train_rf(&x, &[true, false, true, false], &RfConfig { trees: 5, ..Default::default() }).unwrap();
        let enlr = EnlrModel {
            beta: vec![0.7, -0.2, 0.0],
            b: 0.0,
            alpha: 0.5,
            lambda: 0.1,
            feature_names: vec![],
        };
        (rf, enlr)
    }

    #[test]
    fn category_sums_are_additive() {
        let (rf, enlr) = models();
        let names: Vec<String> = ["cur:a", "cur:b", "char_len_cur"].map(String::from).to_vec();
        let cats: Vec<String> = ["cur", "cur", "numeric"].map(String::from).to_vec();
        let r = importance_report(&rf, &enlr, &names, &cats).unwrap();
        let cur: f64 = r.features.iter().filter(|f| f.category == "cur").map(|f| f.importance).sum();
        assert!((r.categories[0].importance - cur).abs() <= 1e-12);
        let total: f64 = r.categories.iter().map(|c| c.importance).sum();
        assert!((total - 1.0).abs() <= 1e-9);
        let a = r.features.iter().find(|f| f.feature == "cur:a").unwrap();
        assert_eq!(a.sign, 1);
        assert!(r.to_csv().starts_with("feature,category,importance,sign\n"));
        assert_eq!(r.to_csv().lines().count(), 4);
    }

    #[test]
    fn mismatch_is_rejected() {
        let (rf, mut enlr) = models();
        enlr.beta.pop();
        let names = vec![String::new(); 3];
        assert!(matches!(
            importance_report(&rf, &enlr, &names, &names),
            Err(Error::FeatureSpaceMismatch(_))
        ));
    }
}
