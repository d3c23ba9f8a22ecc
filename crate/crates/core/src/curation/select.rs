//! Greedy max-dispersion selection with local swap refinement, plus the
//! random and exhaustive baselines.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::objective::{check_indices, pairwise_objective};
use super::{CurationError, EmbeddingSet};

/// A swap is taken only if it lowers the half-objective by more than this.
pub const SWAP_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 100;

// full Gram matrices are cached up to this many rows (32 MiB of f64)
const GRAM_CACHE_LIMIT: usize = 2048;
const BRUTEFORCE_LIMIT: u128 = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Greedy,
    GreedySwap,
    Qp,
    Random,
    Bruteforce,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Greedy => "greedy",
            Method::GreedySwap => "greedy_swap",
            Method::Qp => "qp",
            Method::Random => "random",
            Method::Bruteforce => "bruteforce",
        }
    }
}

/// A size-k subset of an [`EmbeddingSet`] and its objective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Sorted ascending.
    pub indices: Vec<usize>,
    pub objective: f64,
    pub method: Method,
    /// False when an iterative method stopped on its iteration cap.
    pub converged: bool,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Selection {
    fn finish(
        emb: &EmbeddingSet,
        mut indices: Vec<usize>,
        method: Method,
        converged: bool,
        iterations: usize,
    ) -> Result<Self, CurationError> {
        indices.sort_unstable();
        let objective = pairwise_objective(emb, &indices)?;
        Ok(Self {
            indices,
            objective,
            method,
            converged,
            iterations,
            warnings: Vec::new(),
        })
    }

    pub fn ids<'a>(&self, emb: &'a EmbeddingSet) -> Vec<&'a str> {
        self.indices.iter().map(|&i| emb.ids()[i].as_str()).collect()
    }
}

/// Dot products, served from a cached Gram matrix for small sets.
pub(crate) struct Similarity<'a> {
    emb: &'a EmbeddingSet,
    gram: Option<Vec<f64>>,
}

impl<'a> Similarity<'a> {
    pub(crate) fn new(emb: &'a EmbeddingSet) -> Self {
        let n = emb.len();
        let gram = (n <= GRAM_CACHE_LIMIT).then(|| gram_matrix(emb));
        Self { emb, gram }
    }

    #[inline]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        match &self.gram {
            Some(g) => g[i * self.emb.len() + j],
            None => self.emb.dot(i, j),
        }
    }

    /// `m[x] = sum over j in subset of x.x_j`
    fn affinity(&self, subset: &[usize]) -> Vec<f64> {
        (0..self.emb.len())
            .map(|x| subset.iter().map(|&j| self.get(x, j)).sum())
            .collect()
    }
}

pub(crate) fn gram_matrix(emb: &EmbeddingSet) -> Vec<f64> {
    let n = emb.len();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = emb.dot(i, j);
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    g
}

fn check_k(emb: &EmbeddingSet, k: usize) -> Result<(), CurationError> {
    if k == 0 || k > emb.len() {
        return Err(CurationError::KOutOfRange { k, n: emb.len() });
    }
    Ok(())
}

fn greedy_from(sims: &Similarity<'_>, n: usize, k: usize, start: usize) -> Vec<usize> {
    let mut in_set = vec![false; n];
    let mut affinity = vec![0.0; n];
    let mut chosen = Vec::with_capacity(k);
    let mut next = Some(start);
    while let Some(i) = next {
        in_set[i] = true;
        chosen.push(i);
        for (x, a) in affinity.iter_mut().enumerate() {
            *a += sims.get(x, i);
        }
        if chosen.len() == k {
            break;
        }
        // strict `<` keeps the lowest index on ties
        next = (0..n)
            .filter(|&j| !in_set[j])
            .fold(None, |best: Option<usize>, j| match best {
                Some(b) if affinity[b] <= affinity[j] => Some(b),
                _ => Some(j),
            });
    }
    chosen
}

/// Greedy construction: start from one random index, then repeatedly add the
/// candidate with the smallest total similarity to the current set.
pub fn greedy_select(emb: &EmbeddingSet, k: usize, seed: u64) -> Result<Selection, CurationError> {
    greedy_select_restarts(emb, k, seed, 1)
}

/// Best of `restarts` greedy runs from distinct random start indices.
pub fn greedy_select_restarts(
    emb: &EmbeddingSet,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<Selection, CurationError> {
    check_k(emb, k)?;
    let n = emb.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<usize> = if restarts <= 1 {
        vec![rng.random_range(0..n)]
    } else {
        index::sample(&mut rng, n, restarts.min(n)).into_vec()
    };
    let sims = Similarity::new(emb);
    let mut best: Option<Selection> = None;
    for start in starts {
        let sel = Selection::finish(emb, greedy_from(&sims, n, k, start), Method::Greedy, true, 0)?;
        if best.as_ref().is_none_or(|b| sel.objective < b.objective) {
            best = Some(sel);
        }
    }
    Ok(best.expect("at least one start"))
}

/// Best-improvement swap search. Each iteration scans every
/// `(out in S, in not in S)` pair and applies the one with the most negative
/// change, stopping once no change is below `-SWAP_TOLERANCE`.
pub fn swap_refine(
    emb: &EmbeddingSet,
    sel: &Selection,
    max_iter: usize,
) -> Result<Selection, CurationError> {
    check_indices(emb, &sel.indices)?;
    let n = emb.len();
    let sims = Similarity::new(emb);
    let mut subset = sel.indices.clone();
    subset.sort_unstable();
    let mut in_set = vec![false; n];
    for &i in &subset {
        in_set[i] = true;
    }

    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        let affinity = sims.affinity(&subset);
        let mut best: Option<(usize, usize, f64)> = None;
        for (pos, &out) in subset.iter().enumerate() {
            let out_rest = affinity[out] - sims.get(out, out);
            for cand in (0..n).filter(|&c| !in_set[c]) {
                let delta = (affinity[cand] - sims.get(cand, out)) - out_rest;
                if delta < -SWAP_TOLERANCE && best.is_none_or(|(_, _, d)| delta < d) {
                    best = Some((pos, cand, delta));
                }
            }
        }
        let Some((pos, cand, _)) = best else {
            converged = true;
            break;
        };
        iterations += 1;
        in_set[subset[pos]] = false;
        in_set[cand] = true;
        subset[pos] = cand;
    }
    if !converged && iterations == max_iter {
        // the cap may coincide with a local optimum; check once more
        converged = !has_improving_swap(&sims, &subset, &in_set);
    }
    let method = match sel.method {
        Method::Greedy | Method::GreedySwap => Method::GreedySwap,
        other => other,
    };
    let mut out = Selection::finish(emb, subset, method, converged, iterations)?;
    if !converged {
        out.warnings
            .push(format!("swap refinement stopped at max_iter={max_iter}"));
    }
    Ok(out)
}

fn has_improving_swap(sims: &Similarity<'_>, subset: &[usize], in_set: &[bool]) -> bool {
    let affinity = sims.affinity(subset);
    subset.iter().any(|&out| {
        let out_rest = affinity[out] - sims.get(out, out);
        (0..in_set.len())
            .filter(|&c| !in_set[c])
            .any(|c| (affinity[c] - sims.get(c, out)) - out_rest < -SWAP_TOLERANCE)
    })
}

/// Greedy construction followed by swap refinement.
pub fn select_diverse(
    emb: &EmbeddingSet,
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<Selection, CurationError> {
    let greedy = greedy_select(emb, k, seed)?;
    swap_refine(emb, &greedy, max_iter)
}

/// Uniform k-subset without replacement.
pub fn random_select(emb: &EmbeddingSet, k: usize, seed: u64) -> Result<Selection, CurationError> {
    check_k(emb, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = index::sample(&mut rng, emb.len(), k).into_vec();
    Selection::finish(emb, picked, Method::Random, true, 0)
}

/// Exhaustive search over all k-subsets. Refuses instances with more than
/// twenty million subsets.
pub fn bruteforce_select(emb: &EmbeddingSet, k: usize) -> Result<Selection, CurationError> {
    check_k(emb, k)?;
    let n = emb.len();
    let count = binomial(n as u128, k as u128);
    if count > BRUTEFORCE_LIMIT {
        return Err(CurationError::TooLarge(format!(
            "C({n},{k}) = {count} subsets"
        )));
    }
    let sims = Similarity::new(emb);
    let mut combo: Vec<usize> = (0..k).collect();
    let mut best = (f64::INFINITY, combo.clone());
    loop {
        let mut half = 0.0;
        for a in 0..k {
            for b in a + 1..k {
                half += sims.get(combo[a], combo[b]);
            }
        }
        if half < best.0 {
            best = (half, combo.clone());
        }
        // next combination in lexicographic order
        let Some(i) = (0..k).rev().find(|&i| combo[i] < n - k + i) else {
            break;
        };
        combo[i] += 1;
        for j in i + 1..k {
            combo[j] = combo[j - 1] + 1;
        }
    }
    Selection::finish(emb, best.1, Method::Bruteforce, true, count as usize)
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curation::testutil::random_unit_set;

    fn basis_with_duplicate() -> EmbeddingSet {
        EmbeddingSet::from_rows(vec![
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn greedy_skips_duplicate_direction() {
        let e = basis_with_duplicate();
        for seed in 0..10 {
            let sel = greedy_select(&e, 3, seed).unwrap();
            assert!(sel.indices.contains(&2) && sel.indices.contains(&3));
            assert_eq!(sel.indices.iter().filter(|&&i| i < 2).count(), 1);
            assert_eq!(sel.objective, 0.0);
        }
    }

    #[test]
    fn k_equals_n_takes_everything() {
        let e = random_unit_set(7, 3, 1);
        assert_eq!(greedy_select(&e, 7, 3).unwrap().indices, (0..7).collect::<Vec<_>>());
        assert_eq!(random_select(&e, 7, 3).unwrap().indices, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn k_out_of_range() {
        let e = random_unit_set(4, 3, 1);
        assert!(matches!(greedy_select(&e, 0, 1), Err(CurationError::KOutOfRange { .. })));
        assert!(matches!(random_select(&e, 5, 1), Err(CurationError::KOutOfRange { .. })));
    }

    #[test]
    fn swap_escapes_near_duplicate() {
        let c = 0.99f64;
        let s = (1.0 - c * c).sqrt();
        let e = EmbeddingSet::from_rows(vec![
            vec![1.0, 0.0, 0.0],
            vec![c, s, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let start = Selection::finish(&e, vec![0, 1], Method::Greedy, true, 0).unwrap();
        assert!((start.objective - 1.98).abs() < 1e-9);
        let refined = swap_refine(&e, &start, 100).unwrap();
        assert!(refined.indices.contains(&2));
        assert!(refined.objective.abs() < 1e-12);
        assert!(refined.converged);
        assert_eq!(refined.method, Method::GreedySwap);
    }

    #[test]
    fn local_optimum_is_fixed_point() {
        let e = basis_with_duplicate();
        let start = Selection::finish(&e, vec![0, 2, 3], Method::Greedy, true, 0).unwrap();
        let refined = swap_refine(&e, &start, 100).unwrap();
        assert_eq!(refined.indices, start.indices);
        assert_eq!(refined.iterations, 0);
    }

    #[test]
    fn deterministic_under_seed() {
        let e = random_unit_set(40, 6, 9);
        let a = select_diverse(&e, 8, 42, DEFAULT_MAX_ITER).unwrap();
        let b = select_diverse(&e, 8, 42, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn max_iter_zero_reports_not_converged() {
        let c = 0.99f64;
        let e = EmbeddingSet::from_rows(vec![
            vec![1.0, 0.0, 0.0],
            vec![c, (1.0 - c * c).sqrt(), 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let start = Selection::finish(&e, vec![0, 1], Method::Greedy, true, 0).unwrap();
        let out = swap_refine(&e, &start, 0).unwrap();
        assert!(!out.converged);
        assert_eq!(out.indices, vec![0, 1]);
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn restarts_never_worse_than_single() {
        let e = random_unit_set(30, 5, 4);
        let one = greedy_select(&e, 6, 5).unwrap();
        let many = greedy_select_restarts(&e, 6, 5, 30).unwrap();
        assert!(many.objective <= one.objective + 1e-12);
    }

    #[test]
    fn bruteforce_guards_size() {
        let e = random_unit_set(60, 3, 4);
        assert!(matches!(bruteforce_select(&e, 30), Err(CurationError::TooLarge(_))));
        assert_eq!(binomial(12, 5), 792);
    }
}
