use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sparse::TermIndex;
use crate::error::{Error, Result};

/// Token vectors of one fixed dimension, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub tokens: TermIndex,
    pub vectors: Vec<f64>,
    pub trainable: bool,
}

impl EmbeddingTable {
    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.tokens
            .get(token)
            .map(|i| &self.vectors[i * self.dim..(i + 1) * self.dim])
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Loads whitespace-separated `token v1 ... vd` lines. A leading
/// `count dim` header line is skipped. Duplicate tokens keep their first row.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let reader = BufReader::new(File::open(path)?);
    let mut dim: Option<usize> = None;
    let mut tokens = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut vectors = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values: Vec<&str> = fields.collect();
        if n == 0 && values.len() == 1 && token.parse::<usize>().is_ok() && values[0].parse::<usize>().is_ok() {
            continue;
        }
        let row: Vec<f64> = values
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                path: path.to_owned(),
                line: n + 1,
                reason: e.to_string(),
            })?;
        let d = *dim.get_or_insert(row.len());
        if row.len() != d || d == 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: row.len(),
            });
        }
        if seen.insert(token.to_owned()) {
            tokens.push(token.to_owned());
            vectors.extend(row);
        }
    }
    Ok(EmbeddingTable {
        dim: dim.unwrap_or(0),
        tokens: TermIndex::new(tokens),
        vectors,
        trainable: true,
    })
}
