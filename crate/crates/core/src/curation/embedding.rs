use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use super::CurationError;

/// Row-normalized embedding matrix with one id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    ids: Vec<String>,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingSet {
    /// Build from raw rows; rows are normalized to unit length.
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, CurationError> {
        if rows.is_empty() {
            return Err(CurationError::Empty);
        }
        if ids.len() != rows.len() {
            return Err(CurationError::Shape(format!(
                "{} ids for {} rows",
                ids.len(),
                rows.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(CurationError::DuplicateId(dup.clone()));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(CurationError::Shape("zero-dimensional vectors".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != dim) {
            return Err(CurationError::DimensionMismatch {
                row: i,
                expected: dim,
                got: rows[i].len(),
            });
        }
        let rows = normalize_rows(&rows)?;
        Ok(Self {
            ids,
            dim,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Rows with generated ids `0..N`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, CurationError> {
        let ids = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::new(ids, rows)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn dot(&self, i: usize, j: usize) -> f64 {
        dot(self.row(i), self.row(j))
    }

    /// Restrict to a subset of rows, keeping their order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            dim: self.dim,
            data,
        }
    }

    /// Read `{"id": ..., "embedding": [...]}` records, one per line.
    pub fn load_jsonl(path: &Path) -> Result<Self, CurationError> {
        #[derive(Deserialize)]
        struct Record {
            id: String,
            embedding: Vec<f64>,
        }
        let file = File::open(path).map_err(|source| CurationError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| CurationError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(&line).map_err(|e| CurationError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            ids.push(rec.id);
            rows.push(rec.embedding);
        }
        Self::new(ids, rows)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Scale each row to unit Euclidean norm.
pub fn normalize_rows(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, CurationError> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let norm = dot(r, r).sqrt();
            if norm == 0.0 || !norm.is_finite() {
                return Err(CurationError::ZeroRow(i));
            }
            Ok(r.iter().map(|x| x / norm).collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn three_four_five() {
        let out = normalize_rows(&[vec![3.0, 4.0]]).unwrap();
        assert!((out[0][0] - 0.6).abs() < 1e-15);
        assert!((out[0][1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn unit_rows_unchanged() {
        let rows = vec![vec![0.0, 1.0, 0.0], vec![0.6, 0.0, -0.8]];
        assert_eq!(normalize_rows(&rows).unwrap(), rows);
    }

    #[test]
    fn random_rows_have_unit_norm() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..3).map(|_| rng.random_range(-10.0..10.0)).collect())
            .collect();
        for r in normalize_rows(&rows).unwrap() {
            let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_row_named() {
        let err = normalize_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap_err();
        assert!(matches!(err, CurationError::ZeroRow(1)));
    }

    #[test]
    fn rejects_duplicate_ids_and_ragged_rows() {
        let dup = EmbeddingSet::new(vec!["a".into(), "a".into()], vec![vec![1.0], vec![2.0]]);
        assert!(matches!(dup, Err(CurationError::DuplicateId(_))));
        let ragged = EmbeddingSet::from_rows(vec![vec![1.0, 0.0], vec![1.0]]);
        assert!(matches!(ragged, Err(CurationError::DimensionMismatch { row: 1, .. })));
    }
}
