//! Row-compressed sparse design matrices.

use serde::{Deserialize, Serialize};

use crate::textrep::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Column-compressed view, built once for column-wise solvers.
#[derive(Debug, Clone)]
pub struct CscMatrix {
    pub nrows: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(ncols: usize) -> Self {
        Self {
            ncols,
            row_ptr: vec![0],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut m = Self::new(ncols);
        for r in rows {
            assert_eq!(r.len(), ncols, "ragged dense rows");
            m.push_pairs(r.iter().copied().enumerate().filter(|(_, v)| *v != 0.0));
        }
        m
    }

    pub fn from_rows(ncols: usize, rows: impl IntoIterator<Item = SparseVector>) -> Self {
        let mut m = Self::new(ncols);
        for r in rows {
            m.push_pairs(r.iter());
        }
        m
    }

    /// Appends a row; `pairs` must have strictly increasing column indices.
    pub fn push_pairs(&mut self, pairs: impl IntoIterator<Item = (usize, f64)>) {
        for (j, v) in pairs {
            debug_assert!(j < self.ncols);
            debug_assert!(self.col_idx.len() == *self.row_ptr.last().unwrap() || *self.col_idx.last().unwrap() < j);
            self.col_idx.push(j);
            self.values.push(v);
        }
        self.row_ptr.push(self.col_idx.len());
    }

    pub fn nrows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[s..e], &self.values[s..e])
    }

    pub fn row_vector(&self, i: usize) -> SparseVector {
        let (idx, val) = self.row(i);
        SparseVector {
            dim: self.ncols,
            indices: idx.to_vec(),
            values: val.to_vec(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, val) = self.row(i);
        idx.binary_search(&j).map_or(0.0, |p| val[p])
    }

    pub fn row_dot(&self, i: usize, dense: &[f64]) -> f64 {
        let (idx, val) = self.row(i);
        idx.iter().zip(val).map(|(&j, v)| v * dense[j]).sum()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut m = Self::new(self.ncols);
        for &i in rows {
            let (idx, val) = self.row(i);
            m.push_pairs(idx.iter().copied().zip(val.iter().copied()));
        }
        m
    }

    pub fn to_csc(&self) -> CscMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let col_ptr = counts.clone();
        let mut next = counts;
        let mut row_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows() {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                row_idx[next[j]] = i;
                values[next[j]] = v;
                next[j] += 1;
            }
        }
        CscMatrix {
            nrows: self.nrows(),
            col_ptr,
            row_idx,
            values,
        }
    }
}

impl CscMatrix {
    pub fn ncols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
        (&self.row_idx[s..e], &self.values[s..e])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_round_trip_and_columns() {
        let dense = vec![vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 0.0], vec![4.0, 0.0, 5.0]];
        let m = CsrMatrix::from_dense(&dense);
        assert_eq!(m.nnz(), 5);
        for (i, row) in dense.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(m.get(i, j), v);
            }
        }
        let c = m.to_csc();
        assert_eq!(c.col(0), (&[0usize, 2][..], &[1.0, 4.0][..]));
        assert_eq!(c.col(1), (&[1usize][..], &[3.0][..]));
        assert_eq!(m.row_dot(2, &[1.0, 1.0, 2.0]), 14.0);
        let s = m.select_rows(&[2, 0]);
        assert_eq!(s.get(0, 2), 5.0);
    }
}
