use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{CurationError, EmbeddingSet};

pub(crate) fn check_indices(emb: &EmbeddingSet, subset: &[usize]) -> Result<(), CurationError> {
    if let Some(&i) = subset.iter().find(|&&i| i >= emb.len()) {
        return Err(CurationError::IndexOutOfRange { index: i, n: emb.len() });
    }
    let mut seen = vec![false; emb.len()];
    for &i in subset {
        if std::mem::replace(&mut seen[i], true) {
            return Err(CurationError::RepeatedIndex(i));
        }
    }
    Ok(())
}

/// Total pairwise similarity over ordered pairs: each unordered pair counts
/// twice.
pub fn pairwise_objective(emb: &EmbeddingSet, subset: &[usize]) -> Result<f64, CurationError> {
    check_indices(emb, subset)?;
    let mut total = 0.0;
    for (a, &i) in subset.iter().enumerate() {
        for &j in &subset[a + 1..] {
            total += emb.dot(i, j);
        }
    }
    Ok(2.0 * total)
}

/// Mean similarity over the `|S|(|S|-1)` ordered pairs.
pub fn mean_pairwise_similarity(
    emb: &EmbeddingSet,
    subset: &[usize],
) -> Result<f64, CurationError> {
    let k = subset.len();
    if k < 2 {
        return Err(CurationError::TooFewForSimilarity(k));
    }
    Ok(pairwise_objective(emb, subset)? / (k * (k - 1)) as f64)
}

/// Cosine similarity matrix of the selected rows, in subset order.
pub fn similarity_matrix(
    emb: &EmbeddingSet,
    subset: &[usize],
) -> Result<Vec<Vec<f64>>, CurationError> {
    check_indices(emb, subset)?;
    let k = subset.len();
    let mut m = vec![vec![0.0; k]; k];
    for a in 0..k {
        m[a][a] = 1.0;
        for b in a + 1..k {
            let s = emb.dot(subset[a], subset[b]);
            m[a][b] = s;
            m[b][a] = s;
        }
    }
    Ok(m)
}

/// Write the similarity matrix as CSV with the sample ids as header row and
/// first column.
pub fn write_similarity_csv(
    emb: &EmbeddingSet,
    subset: &[usize],
    path: &Path,
) -> Result<(), CurationError> {
    let m = similarity_matrix(emb, subset)?;
    let io = |source| CurationError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let ids: Vec<&str> = subset.iter().map(|&i| emb.ids()[i].as_str()).collect();
    writeln!(w, "id,{}", ids.join(",")).map_err(io)?;
    for (id, row) in ids.iter().zip(&m) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
        writeln!(w, "{id},{}", cells.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curation::testutil::random_unit_set;

    fn basis(n: usize) -> EmbeddingSet {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        EmbeddingSet::from_rows(rows).unwrap()
    }

    #[test]
    fn identical_pair_is_two() {
        let e = EmbeddingSet::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!((pairwise_objective(&e, &[0, 1]).unwrap() - 2.0).abs() < 1e-12);
        assert!((mean_pairwise_similarity(&e, &[0, 1]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_is_zero() {
        let e = basis(4);
        assert_eq!(pairwise_objective(&e, &[0, 1, 2, 3]).unwrap(), 0.0);
        assert_eq!(mean_pairwise_similarity(&e, &[0, 2]).unwrap(), 0.0);
    }

    #[test]
    fn matches_double_loop() {
        let e = random_unit_set(6, 5, 11);
        let s = [1, 3, 4];
        let mut naive = 0.0;
        for &i in &s {
            for &j in &s {
                if i != j {
                    let r: f64 = e.row(i).iter().zip(e.row(j)).map(|(a, b)| a * b).sum();
                    naive += r;
                }
            }
        }
        assert!((pairwise_objective(&e, &s).unwrap() - naive).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_and_too_small() {
        let e = basis(3);
        assert!(matches!(
            pairwise_objective(&e, &[0, 5]),
            Err(CurationError::IndexOutOfRange { index: 5, n: 3 })
        ));
        assert!(matches!(
            mean_pairwise_similarity(&e, &[1]),
            Err(CurationError::TooFewForSimilarity(1))
        ));
    }

    #[test]
    fn similarity_matrix_cases() {
        let e = EmbeddingSet::from_rows(vec![vec![1.0, 0.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(similarity_matrix(&e, &[0, 1]).unwrap(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let b = basis(3);
        assert_eq!(
            similarity_matrix(&b, &[0, 1, 2]).unwrap(),
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]
        );
        let r = random_unit_set(8, 4, 3);
        let s = [0, 2, 5, 7];
        let m = similarity_matrix(&r, &s).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let want: f64 = if a == b {
                    1.0
                } else {
                    r.row(s[a]).iter().zip(r.row(s[b])).map(|(x, y)| x * y).sum()
                };
                assert!((m[a][b] - want).abs() < 1e-12);
                assert_eq!(m[a][b], m[b][a]);
            }
        }
    }

    #[test]
    fn csv_has_id_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sim.csv");
        let e = EmbeddingSet::new(
            vec!["x".into(), "y".into()],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        write_similarity_csv(&e, &[0, 1], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "id,x,y\nx,1.000000,0.000000\ny,0.000000,1.000000\n"
        );
    }
}
