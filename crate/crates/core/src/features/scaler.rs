use serde::{Deserialize, Serialize};

use crate::matrix::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMode {
    /// Divide by the column's maximum absolute value; keeps zeros zero.
    MaxAbs,
    /// Subtract the mean and divide by the population standard deviation.
    ZScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub modes: Vec<ScaleMode>,
    /// Per column: max-abs value, or mean for z-scored columns.
    pub center_or_max: Vec<f64>,
    /// Per column: standard deviation for z-scored columns, else 1.
    pub scale: Vec<f64>,
    /// Columns passed through unscaled (all-zero or constant at fit time).
    pub degenerate: Vec<usize>,
    /// Z-scored columns, ascending.
    pub dense_columns: Vec<usize>,
}

pub fn fit_scaler(train: &CsrMatrix, modes: &[ScaleMode]) -> Scaler {
    assert_eq!(train.ncols(), modes.len(), "one scale mode per column");
    let n = train.nrows() as f64;
    let m = train.ncols();
    let mut max_abs = vec![0.0f64; m];
    let mut sum = vec![0.0f64; m];
    for i in 0..train.nrows() {
        let (idx, val) = train.row(i);
        for (&j, &v) in idx.iter().zip(val) {
            max_abs[j] = max_abs[j].max(v.abs());
            sum[j] += v;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| if n > 0.0 { s / n } else { 0.0 }).collect();
    // Squared deviations, counting the implicit zeros of each column.
    let mut sq = vec![0.0f64; m];
    let mut nnz = vec![0usize; m];
    for i in 0..train.nrows() {
        let (idx, val) = train.row(i);
        for (&j, &v) in idx.iter().zip(val) {
            sq[j] += (v - mean[j]).powi(2);
            nnz[j] += 1;
        }
    }
    let mut center_or_max = vec![0.0; m];
    let mut scale = vec![1.0; m];
    let mut degenerate = Vec::new();
    for j in 0..m {
        match modes[j] {
            ScaleMode::MaxAbs => {
                if max_abs[j] > 0.0 {
                    center_or_max[j] = max_abs[j];
                } else {
                    center_or_max[j] = 1.0;
                    degenerate.push(j);
                }
            }
            ScaleMode::ZScore => {
                let zeros = train.nrows() - nnz[j];
                let var = if n > 0.0 {
                    (sq[j] + zeros as f64 * mean[j].powi(2)) / n
                } else {
                    0.0
                };
                let sd = var.sqrt();
                if sd > 1e-12 {
                    center_or_max[j] = mean[j];
                    scale[j] = sd;
                } else {
                    degenerate.push(j);
                }
            }
        }
    }
    let dense_columns = (0..m).filter(|&j| modes[j] == ScaleMode::ZScore).collect();
    Scaler {
        modes: modes.to_vec(),
        center_or_max,
        scale,
        degenerate,
        dense_columns,
    }
}

impl Scaler {
    pub fn ncols(&self) -> usize {
        self.modes.len()
    }

    fn is_degenerate(&self, j: usize) -> bool {
        self.degenerate.binary_search(&j).is_ok()
    }

    /// Scales one sparse row. Z-scored columns become explicit entries.
    pub fn apply_row(&self, idx: &[usize], val: &[f64]) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(idx.len() + self.dense_columns.len());
        let mut k = 0;
        let emit = |j: usize, v: f64, out: &mut Vec<(usize, f64)>| {
            let scaled = self.scale_value(j, v);
            if scaled != 0.0 {
                out.push((j, scaled));
            }
        };
        for &d in &self.dense_columns {
            while k < idx.len() && idx[k] < d {
                emit(idx[k], val[k], &mut out);
                k += 1;
            }
            if k < idx.len() && idx[k] == d {
                emit(d, val[k], &mut out);
                k += 1;
            } else {
                emit(d, 0.0, &mut out);
            }
        }
        while k < idx.len() {
            emit(idx[k], val[k], &mut out);
            k += 1;
        }
        out
    }

    fn scale_value(&self, j: usize, v: f64) -> f64 {
        if self.is_degenerate(j) {
            return v;
        }
        match self.modes[j] {
            ScaleMode::MaxAbs => v / self.center_or_max[j],
            ScaleMode::ZScore => (v - self.center_or_max[j]) / self.scale[j],
        }
    }

    pub fn apply(&self, x: &CsrMatrix) -> CsrMatrix {
        let mut out = CsrMatrix::new(x.ncols());
        for i in 0..x.nrows() {
            let (idx, val) = x.row(i);
            out.push_pairs(self.apply_row(idx, val));
        }
        out
    }

    pub fn apply_dense(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| self.scale_value(j, v))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_score_with_population_sd() {
        let x = CsrMatrix::from_dense(&[vec![1.0], vec![2.0], vec![3.0]]);
        let s = fit_scaler(&x, &[ScaleMode::ZScore]);
        let y = s.apply(&x);
        let expected = [-1.2247, 0.0, 1.2247];
        for (i, e) in expected.iter().enumerate() {
            assert!((y.get(i, 0) - e).abs() < 1e-4);
        }
    }

    #[test]
    fn max_abs() {
        let x = CsrMatrix::from_dense(&[vec![2.0], vec![-4.0], vec![0.0]]);
        let s = fit_scaler(&x, &[ScaleMode::MaxAbs]);
        assert_eq!(s.apply_dense(&[2.0]), vec![0.5]);
        let y = s.apply(&x);
        assert_eq!(y.get(1, 0), -1.0);
        assert_eq!(y.nnz(), 2);
    }

    #[test]
    fn degenerate_columns_pass_through() {
        let x = CsrMatrix::from_dense(&[vec![0.0, 7.0], vec![0.0, 7.0]]);
        let s = fit_scaler(&x, &[ScaleMode::MaxAbs, ScaleMode::ZScore]);
        assert_eq!(s.degenerate, vec![0, 1]);
        assert_eq!(s.apply_dense(&[3.0, 7.0]), vec![3.0, 7.0]);
        let y = s.apply(&x);
        assert_eq!(y.get(0, 1), 7.0);
    }

    #[test]
    fn mixed_sparse_row() {
        let x = CsrMatrix::from_dense(&[vec![1.0, 0.0, 2.0], vec![0.0, 4.0, 0.0], vec![2.0, 0.0, 4.0]]);
        let s = fit_scaler(&x, &[ScaleMode::MaxAbs, ScaleMode::MaxAbs, ScaleMode::ZScore]);
        let y = s.apply(&x);
        for i in 0..3 {
            let dense: Vec<f64> = (0..3).map(|j| x.get(i, j)).collect();
            let want = s.apply_dense(&dense);
            for j in 0..3 {
                assert!((y.get(i, j) - want[j]).abs() < 1e-12);
            }
        }
    }
}
