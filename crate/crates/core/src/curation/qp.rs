//! Convex relaxation of max-dispersion selection.
//!
//! Minimize `w' G w` over `w in [0,1]^N` with `sum(w) = k`, where `G = X X'`,
//! by projected gradient descent, then keep the k largest weights.

use super::select::{gram_matrix, Method, Selection};
use super::{CurationError, EmbeddingSet};

pub const DEFAULT_QP_ITERS: usize = 2000;
const CONVERGENCE_TOL: f64 = 1e-10;
const BISECTION_STEPS: usize = 200;

/// Relaxed weights, Gram matrix and budget for the QP.
#[derive(Debug, Clone)]
pub struct QpState {
    pub weights: Vec<f64>,
    gram: Vec<f64>,
    n: usize,
    budget: usize,
}

impl QpState {
    /// Uniform start `w_i = k/N`.
    pub fn new(emb: &EmbeddingSet, k: usize) -> Result<Self, CurationError> {
        let n = emb.len();
        if k == 0 || k > n {
            return Err(CurationError::KOutOfRange { k, n });
        }
        let mut state = Self {
            weights: vec![k as f64 / n as f64; n],
            gram: gram_matrix(emb),
            n,
            budget: k,
        };
        state.weights = project_capped_simplex(&state.weights, k as f64);
        Ok(state)
    }

    pub fn gram(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.n + j]
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn objective(&self) -> f64 {
        let gw = self.gram_times(&self.weights);
        self.weights.iter().zip(&gw).map(|(a, b)| a * b).sum()
    }

    pub fn residual(&self) -> f64 {
        (self.weights.iter().sum::<f64>() - self.budget as f64).abs()
    }

    fn gram_times(&self, v: &[f64]) -> Vec<f64> {
        self.gram
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest eigenvalue of G by power iteration; the gradient `2 G w` is
    /// Lipschitz with constant `2 lambda_max`.
    pub fn lipschitz(&self) -> f64 {
        let mut v = vec![1.0 / (self.n as f64).sqrt(); self.n];
        let mut lambda = 0.0;
        for _ in 0..100 {
            let gv = self.gram_times(&v);
            let norm = gv.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            lambda = norm;
            v = gv.into_iter().map(|x| x / norm).collect();
        }
        2.0 * lambda
    }

    /// One projected gradient step; returns the max-norm change in `w`.
    pub fn step(&mut self, step: f64) -> f64 {
        let grad = self.gram_times(&self.weights);
        let moved: Vec<f64> = self
            .weights
            .iter()
            .zip(&grad)
            .map(|(w, g)| w - step * 2.0 * g)
            .collect();
        let next = project_capped_simplex(&moved, self.budget as f64);
        let change = next
            .iter()
            .zip(&self.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        self.weights = next;
        change
    }

    /// Indices of the k largest weights, lowest index first on ties.
    pub fn round_top_k(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&a, &b| {
            self.weights[b]
                .partial_cmp(&self.weights[a])
                .expect("finite weights")
                .then(a.cmp(&b))
        });
        order.truncate(self.budget);
        order
    }
}

/// Euclidean projection onto `{w : 0 <= w_i <= 1, sum(w) = total}`.
///
/// The projection is `clip(v - tau, 0, 1)` for the shift `tau` that makes the
/// clipped sum hit `total`; `tau` is found by bisection.
pub fn project_capped_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let clipped_sum =
        |tau: f64| -> f64 { v.iter().map(|x| (x - tau).clamp(0.0, 1.0)).sum() };
    let lo_v = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_v = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // sum(lo) = N >= total, sum(hi) = 0 <= total
    let (mut lo, mut hi) = (lo_v - 1.0, hi_v);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if clipped_sum(mid) > total {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    let tau = 0.5 * (lo + hi);
    let mut w: Vec<f64> = v.iter().map(|x| (x - tau).clamp(0.0, 1.0)).collect();
    // spread the last rounding error over the free coordinates
    let free: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0 && w[i] < 1.0).collect();
    if !free.is_empty() {
        let err = (total - w.iter().sum::<f64>()) / free.len() as f64;
        for i in free {
            w[i] = (w[i] + err).clamp(0.0, 1.0);
        }
    }
    w
}

/// Solve the relaxation and round to a k-subset. `step = None` uses
/// `1 / L` with `L` the gradient's Lipschitz constant.
pub fn qp_select(
    emb: &EmbeddingSet,
    k: usize,
    iters: usize,
    step: Option<f64>,
) -> Result<Selection, CurationError> {
    let mut state = QpState::new(emb, k)?;
    let step = match step {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => return Err(CurationError::InvalidParameter(format!("step {s}"))),
        None => {
            let l = state.lipschitz();
            if l > 0.0 {
                1.0 / l
            } else {
                1.0
            }
        }
    };
    let mut converged = false;
    let mut done = 0;
    for _ in 0..iters {
        done += 1;
        if state.step(step) < CONVERGENCE_TOL {
            converged = true;
            break;
        }
    }
    let residual = state.residual();
    let mut sel = Selection {
        indices: state.round_top_k(),
        objective: 0.0,
        method: Method::Qp,
        converged,
        iterations: done,
        warnings: Vec::new(),
    };
    sel.indices.sort_unstable();
    sel.objective = super::pairwise_objective(emb, &sel.indices)?;
    if !converged {
        sel.warnings.push(format!(
            "projected gradient did not converge in {iters} iterations"
        ));
    }
    if residual > 1e-6 {
        sel.warnings
            .push(format!("constraint residual {residual:.3e} exceeds 1e-6"));
    }
    Ok(sel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curation::testutil::random_unit_set;
    use rand::{Rng, SeedableRng};

    #[test]
    fn projection_satisfies_constraints() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(2..40);
            let k = rng.random_range(1..=n);
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let w = project_capped_simplex(&v, k as f64);
            assert!(w.iter().all(|&x| (0.0..=1.0).contains(&x)));
            assert!((w.iter().sum::<f64>() - k as f64).abs() <= 1e-9);
        }
    }

    #[test]
    fn projection_is_nearest_point() {
        // compare against a random search over feasible points
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let v = vec![0.9, 0.2, 1.7, -0.4, 0.5];
        let w = project_capped_simplex(&v, 2.0);
        let dist = |x: &[f64]| -> f64 { x.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum() };
        for _ in 0..5000 {
            let raw: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..1.0)).collect();
            let p = project_capped_simplex(&raw, 2.0);
            assert!(dist(&w) <= dist(&p) + 1e-12);
        }
    }

    #[test]
    fn uniform_start_is_feasible() {
        let e = random_unit_set(10, 4, 2);
        let s = QpState::new(&e, 3).unwrap();
        assert!(s.residual() <= 1e-12);
        assert!(s.weights.iter().all(|&w| (w - 0.3).abs() < 1e-12));
    }

    #[test]
    fn orthogonal_basis_reaches_zero() {
        let rows = (0..5)
            .map(|i| (0..5).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let e = EmbeddingSet::from_rows(rows).unwrap();
        let sel = qp_select(&e, 3, DEFAULT_QP_ITERS, None).unwrap();
        assert_eq!(sel.objective, 0.0);
        assert_eq!(sel.indices.len(), 3);
        assert_eq!(sel.method, Method::Qp);
    }

    #[test]
    fn objective_decreases() {
        let e = random_unit_set(30, 8, 5);
        let mut s = QpState::new(&e, 6).unwrap();
        let step = 1.0 / s.lipschitz();
        let mut last = s.objective();
        for _ in 0..50 {
            s.step(step);
            let now = s.objective();
            assert!(now <= last + 1e-12);
            last = now;
        }
    }

    #[test]
    fn bad_step_rejected() {
        let e = random_unit_set(5, 3, 1);
        assert!(qp_select(&e, 2, 10, Some(-1.0)).is_err());
    }
}
