//! Random forest of Gini decision trees.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfConfig {
    pub trees: usize,
    /// Candidate features per split; `None` means `⌊√m⌋`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for RfConfig {
    fn default() -> Self {
        Self {
            trees: 100,
            max_features: None,
            bootstrap: true,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: [usize; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
}

impl Tree {
    fn leaf<F: Fn(usize) -> f64>(&self, value: F) -> [usize; 2] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return *counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if value(*feature) <= *threshold { *left } else { *right },
            }
        }
    }

    /// Majority class of the reached leaf; ties go to class 0.
    pub fn vote<F: Fn(usize) -> f64>(&self, value: F) -> bool {
        let c = self.leaf(value);
        c[1] > c[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfModel {
    pub trees: Vec<Tree>,
    pub n_features: usize,
    /// Features sampled per split.
    pub p: usize,
    pub bootstrap: bool,
    pub seed: u64,
    /// Mean decrease in impurity, normalized to sum 1.
    pub importances: Vec<f64>,
    pub feature_names: Vec<String>,
}

impl RfModel {
    pub fn b(&self) -> usize {
        self.trees.len()
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Self {
        self.feature_names = names;
        self
    }

    fn check(&self, found: usize) -> Result<()> {
        if found != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found,
            });
        }
        Ok(())
    }

    fn vote_fraction<F: Fn(usize) -> f64 + Copy>(&self, value: F) -> f64 {
        let votes = self.trees.iter().filter(|t| t.vote(value)).count();
        votes as f64 / self.trees.len() as f64
    }

    pub fn predict_sparse(&self, idx: &[usize], val: &[f64]) -> f64 {
        let value = |j: usize| idx.binary_search(&j).map_or(0.0, |k| val[k]);
        self.vote_fraction(value)
    }

    pub fn predict_rows(&self, x: &CsrMatrix) -> Result<Vec<f64>> {
        self.check(x.ncols())?;
        Ok((0..x.nrows())
            .into_par_iter()
            .map(|i| {
                let (idx, val) = x.row(i);
                self.predict_sparse(idx, val)
            })
            .collect())
    }
}

/// Fraction of trees voting citing.
pub fn predict_rf(model: &RfModel, x: &[f64]) -> Result<f64> {
    model.check(x.len())?;
    Ok(model.vote_fraction(|j| x[j]))
}

/// Majority decision; a split vote is non-citing.
pub fn rf_decision(probability: f64) -> bool {
    probability > 0.5
}

fn gini(c: [usize; 2]) -> f64 {
    let n = (c[0] + c[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p = c[1] as f64 / n;
    2.0 * p * (1.0 - p)
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Grower<'a> {
    x: &'a CsrMatrix,
    y: &'a [bool],
    p: usize,
    nodes: Vec<Node>,
    importance: Vec<f64>,
    /// Feature permutation, reshuffled lazily at every node.
    perm: Vec<usize>,
}

impl Grower<'_> {
    fn counts(&self, rows: &[usize]) -> [usize; 2] {
        let pos = rows.iter().filter(|&&i| self.y[i]).count();
        [rows.len() - pos, pos]
    }

    fn best_on(&self, rows: &[usize], feature: usize, parent: [usize; 2]) -> Option<BestSplit> {
        let mut v: Vec<(f64, bool)> = rows.iter().map(|&i| (self.x.get(i, feature), self.y[i])).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = v.len() as f64;
        let parent_impurity = n * gini(parent);
        let mut left = [0usize; 2];
        let mut best: Option<BestSplit> = None;
        for k in 0..v.len() - 1 {
            left[usize::from(v[k].1)] += 1;
            if v[k].0 == v[k + 1].0 {
                continue;
            }
            let right = [parent[0] - left[0], parent[1] - left[1]];
            let nl = (k + 1) as f64;
            let gain = parent_impurity - nl * gini(left) - (n - nl) * gini(right);
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(BestSplit {
                    feature,
                    threshold: v[k].0 + (v[k + 1].0 - v[k].0) / 2.0,
                    gain,
                });
            }
        }
        best
    }

    /// Searches a random feature order. After `p` features, stops at the
    /// first point where some valid split has been seen.
    fn best_split(&mut self, rows: &[usize], parent: [usize; 2], rng: &mut ChaCha8Rng) -> Option<BestSplit> {
        let m = self.perm.len();
        let mut best: Option<BestSplit> = None;
        for visited in 0..m {
            if visited >= self.p && best.is_some() {
                break;
            }
            let k = rng.gen_range(visited..m);
            self.perm.swap(visited, k);
            if let Some(s) = self.best_on(rows, self.perm[visited], parent) {
                if best.as_ref().is_none_or(|b| s.gain > b.gain) {
                    best = Some(s);
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>, rng: &mut ChaCha8Rng) {
        self.nodes.push(Node::Leaf { counts: [0, 0] });
        let mut stack = vec![(0usize, rows)];
        while let Some((id, rows)) = stack.pop() {
            let counts = self.counts(&rows);
            let split = if counts[0] == 0 || counts[1] == 0 {
                None
            } else {
                self.best_split(&rows, counts, rng)
            };
            let Some(s) = split else {
                self.nodes[id] = Node::Leaf { counts };
                continue;
            };
            self.importance[s.feature] += s.gain.max(0.0);
            let (l, r): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&i| self.x.get(i, s.feature) <= s.threshold);
            let left = self.nodes.len();
            self.nodes.push(Node::Leaf { counts: [0, 0] });
            let right = self.nodes.len();
            self.nodes.push(Node::Leaf { counts: [0, 0] });
            self.nodes[id] = Node::Split {
                feature: s.feature,
                threshold: s.threshold,
                left,
                right,
            };
            stack.push((right, r));
            stack.push((left, l));
        }
    }
}

fn tree_seed(seed: u64, t: usize) -> u64 {
    let mut z = seed ^ (t as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn train_rf(x: &CsrMatrix, y: &[bool], config: &RfConfig) -> Result<RfModel> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: y.len(),
        });
    }
    if !(y.iter().any(|&v| v) && y.iter().any(|&v| !v)) {
        return Err(Error::SingleClass);
    }
    if config.trees == 0 || x.ncols() == 0 {
        return Err(Error::InvalidArgument("a forest needs at least one tree and one feature".into()));
    }
    let m = x.ncols();
    let p = config
        .max_features
        .unwrap_or_else(|| (m as f64).sqrt().floor() as usize)
        .clamp(1, m);
    let n = x.nrows();
    let grown: Vec<(Tree, Vec<f64>)> = (0..config.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(config.seed, t));
            let rows: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut g = Grower {
                x,
                y,
                p,
                nodes: Vec::new(),
                importance: vec![0.0; m],
                perm: (0..m).collect(),
            };
            g.grow(rows, &mut rng);
            (Tree { nodes: g.nodes }, g.importance)
        })
        .collect();

    let mut importances = vec![0.0; m];
    for (_, imp) in &grown {
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            for (acc, v) in importances.iter_mut().zip(imp) {
                *acc += v / total;
            }
        }
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        importances.iter_mut().for_each(|v| *v /= total);
    } else {
        importances = vec![1.0 / m as f64; m];
    }
    Ok(RfModel {
        trees: grown.into_iter().map(|(t, _)| t).collect(),
        n_features: m,
        p,
        bootstrap: config.bootstrap,
        seed: config.seed,
        importances,
        feature_names: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::Rng;

    use super::*;

    fn xor() -> (CsrMatrix, Vec<bool>) {
        let x = CsrMatrix::from_dense(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
        (x, vec![false, true, true, false])
    }

    fn accuracy(m: &RfModel, x: &CsrMatrix, y: &[bool]) -> f64 {
        let p = m.predict_rows(x).unwrap();
        p.iter().zip(y).filter(|(p, y)| rf_decision(**p) == **y).count() as f64 / y.len() as f64
    }

    #[test]
    fn xor_is_learned() {
        let (x, y) = xor();
        let m = train_rf(&x, &y, &RfConfig { trees: 100, ..Default::default() }).unwrap();
        assert_eq!(m.b(), 100);
        assert_eq!(accuracy(&m, &x, &y), 1.0);
    }

    #[test]
    fn single_full_tree_memorizes() {
        let x = CsrMatrix::from_dense(&[
            vec![0.1, 3.0, 0.0],
            vec![0.4, 1.0, 2.0],
            vec![0.3, 1.0, 2.0],
            vec![0.9, 0.0, 1.0],
            vec![0.2, 2.0, 0.0],
            vec![0.9, 5.0, 1.0],
        ]);
        let y = [true, false, true, false, false, true];
        let cfg = RfConfig {
            trees: 1,
            max_features: Some(3),
            bootstrap: false,
            seed: 3,
        };
        let m = train_rf(&x, &y, &cfg).unwrap();
        assert_eq!(accuracy(&m, &x, &y), 1.0);
        for node in &m.trees[0].nodes {
            match node {
                Node::Leaf { counts } => assert!(counts[0] + counts[1] > 0 && (counts[0] == 0 || counts[1] == 0)),
                Node::Split { feature, .. } => assert!(*feature < 3),
            }
        }
    }

    #[test]
    fn hand_walked_three_trees() {
        let stump = |feature, threshold, left: [usize; 2], right: [usize; 2]| Tree {
            nodes: vec![
                Node::Split {
                    feature,
                    threshold,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { counts: left },
                Node::Leaf { counts: right },
            ],
        };
        let m = RfModel {
            trees: vec![
                stump(0, 0.5, [3, 0], [0, 2]),
                stump(1, 1.0, [0, 4], [1, 0]),
                stump(0, 2.0, [2, 2], [0, 1]),
            ],
            n_features: 2,
            p: 1,
            bootstrap: false,
            seed: 0,
            importances: vec![0.5, 0.5],
            feature_names: vec![],
        };
        // x=(1, 0.5): tree0 right→1, tree1 left→1, tree2 left tie→0.
        assert!((predict_rf(&m, &[1.0, 0.5]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        // x=(0, 3): tree0 left→0, tree1 right→0, tree2 left tie→0.
        assert_eq!(predict_rf(&m, &[0.0, 3.0]).unwrap(), 0.0);
        // x=(3, 0): all three vote citing.
        assert_eq!(predict_rf(&m, &[3.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(predict_rf(&m, &[1.0]), Err(Error::DimensionMismatch { .. })));

        let two = RfModel {
            trees: m.trees[..2].to_vec(),
            ..m
        };
        let p = predict_rf(&two, &[0.0, 0.0]).unwrap();
        assert_eq!(p, 0.5);
        assert!(!rf_decision(p));
    }

    #[test]
    fn deterministic_per_seed() {
        let (x, y) = xor();
        let cfg = RfConfig { trees: 20, ..Default::default() };
        assert_eq!(train_rf(&x, &y, &cfg).unwrap(), train_rf(&x, &y, &cfg).unwrap());
    }

    #[test]
    fn signal_beats_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..200 {
            let s: f64 = rng.gen_range(-1.0..1.0);
            rows.push(vec![s, rng.gen_range(-1.0..1.0)]);
            y.push(s + rng.gen_range(-0.2..0.2) > 0.0);
        }
        let x = CsrMatrix::from_dense(&rows);
        let m = train_rf(&x, &y, &RfConfig { trees: 50, ..Default::default() }).unwrap();
        assert!(m.importances[0] > m.importances[1]);
        assert!((m.importances.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_feature_has_all_importance() {
        let x = CsrMatrix::from_dense(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]);
        let m = train_rf(&x, &[false, false, true, true], &RfConfig::default()).unwrap();
        assert_eq!(m.importances, vec![1.0]);
    }

    #[test]
    fn errors() {
        let (x, _) = xor();
        assert!(matches!(train_rf(&x, &[true; 4], &RfConfig::default()), Err(Error::SingleClass)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn importances_form_a_distribution(
            rows in proptest::collection::vec(proptest::collection::vec(0.0f64..4.0, 4), 4..40),
            labels in proptest::collection::vec(any::<bool>(), 40),
            seed in any::<u64>(),
        ) {
            let mut y: Vec<bool> = labels[..rows.len()].to_vec();
            y[0] = true;
            y[1] = false;
            let x = CsrMatrix::from_dense(&rows);
            let m = train_rf(&x, &y, &RfConfig { trees: 10, seed, ..Default::default() }).unwrap();
            prop_assert!(m.importances.iter().all(|&v| v >= 0.0));
            prop_assert!((m.importances.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            for p in m.predict_rows(&x).unwrap() {
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }
    }
}
