use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::dataset::TokenId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabCoverage {
    #[serde(rename = "K")]
    pub k: usize,
    pub covered_fraction: f64,
    pub per_category: BTreeMap<String, f64>,
}

/// The `k` most frequent reference tokens; equal counts go to the lower id.
pub fn top_k_vocab(reference: &[TokenId], k: usize) -> HashSet<TokenId> {
    let mut counts: HashMap<TokenId, u64> = HashMap::new();
    for &t in reference {
        *counts.entry(t).or_default() += 1;
    }
    let mut ranked: Vec<(TokenId, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.into_iter().take(k).map(|(t, _)| t).collect()
}

fn fraction_in(vocab: &HashSet<TokenId>, tokens: &[TokenId]) -> f64 {
    tokens.iter().filter(|t| vocab.contains(t)).count() as f64 / tokens.len() as f64
}

/// Share of test tokens inside the top-`k` reference vocabulary, overall and
/// per category of the test corpus.
pub fn vocab_coverage(
    reference: &[TokenId],
    test: &[(String, Vec<TokenId>)],
    k: usize,
) -> Result<VocabCoverage, MetricsError> {
    if k == 0 {
        return Err(MetricsError::InvalidParameter("K must be >= 1".into()));
    }
    let all: Vec<TokenId> = test.iter().flat_map(|(_, t)| t.iter().copied()).collect();
    if reference.is_empty() || all.is_empty() {
        return Err(MetricsError::EmptyInput("reference and test corpora must be non-empty"));
    }
    let vocab = top_k_vocab(reference, k);
    let mut by_cat: BTreeMap<String, Vec<TokenId>> = BTreeMap::new();
    for (cat, toks) in test {
        by_cat.entry(cat.clone()).or_default().extend(toks);
    }
    let per_category = by_cat
        .into_iter()
        .filter(|(_, t)| !t.is_empty())
        .map(|(c, t)| (c, fraction_in(&vocab, &t)))
        .collect();
    Ok(VocabCoverage {
        k,
        covered_fraction: fraction_in(&vocab, &all),
        per_category,
    })
}

/// `K,fraction,<category...>` with one row per coverage result.
pub fn write_coverage_csv(path: &Path, rows: &[VocabCoverage]) -> Result<(), MetricsError> {
    let cats: Vec<&String> = rows
        .iter()
        .flat_map(|r| r.per_category.keys())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut out = String::from("K,fraction");
    for c in &cats {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{:.6}", r.k, r.covered_fraction));
        for c in &cats {
            match r.per_category.get(*c) {
                Some(v) => out.push_str(&format!(",{v:.6}")),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| MetricsError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counted_fixture() {
        // a=0, b=1, c=2
        let mut reference = vec![0; 5];
        reference.extend([1; 3]);
        reference.push(2);
        let test = vec![("all".to_string(), vec![0, 1, 2, 2])];
        let cov = vocab_coverage(&reference, &test, 2).unwrap();
        assert_eq!(cov.covered_fraction, 0.5);
        assert_eq!(cov.per_category["all"], 0.5);
    }

    #[test]
    fn ties_go_to_lower_id() {
        let v = top_k_vocab(&[9, 3, 9, 3, 5], 1);
        assert_eq!(v, HashSet::from([3]));
    }

    #[test]
    fn full_vocab_covers_subset() {
        let test = vec![("x".to_string(), vec![1, 2, 1])];
        let cov = vocab_coverage(&[1, 2, 3], &test, 10).unwrap();
        assert_eq!(cov.covered_fraction, 1.0);
    }

    #[test]
    fn per_category_split() {
        let test = vec![
            ("low".to_string(), vec![1, 1]),
            ("high".to_string(), vec![1, 7]),
        ];
        let cov = vocab_coverage(&[1, 1, 2], &test, 1).unwrap();
        assert_eq!(cov.per_category["low"], 1.0);
        assert_eq!(cov.per_category["high"], 0.5);
        assert_eq!(cov.covered_fraction, 0.75);
    }

    #[test]
    fn empty_corpora() {
        assert!(vocab_coverage(&[], &[("a".into(), vec![1])], 1).is_err());
        assert!(vocab_coverage(&[1], &[], 1).is_err());
        assert!(vocab_coverage(&[1], &[("a".into(), vec![1])], 0).is_err());
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let test = vec![("a".to_string(), vec![1, 2]), ("b".to_string(), vec![2])];
        let rows: Vec<_> = [1, 2]
            .iter()
            .map(|&k| vocab_coverage(&[1, 1, 2], &test, k).unwrap())
            .collect();
        write_coverage_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(
            text,
            "K,fraction,a,b\n1,0.333333,0.500000,0.000000\n2,1.000000,1.000000,1.000000\n"
        );
    }
}
