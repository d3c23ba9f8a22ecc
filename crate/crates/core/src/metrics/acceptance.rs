//! Acceptance-rate and acceptance-length estimation from streamed chunks.
//!
//! A decode step is a token-bearing chunk other than the first one of its
//! request (the first is the prefill emission). The chunk size is the number
//! of tokens the verification step produced, bonus token included.

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::bench::RequestTrace;

/// Closed-form expected tokens per step:
/// `1 + sum_{i=1..gamma} prod_{j<=i} ar_j`.
pub fn theoretical_al(ar: &[f64]) -> Result<f64, MetricsError> {
    if let Some((i, &r)) = ar
        .iter()
        .enumerate()
        .find(|(_, r)| !(0.0..=1.0).contains(*r))
    {
        return Err(MetricsError::RateOutOfRange { position: i, value: r });
    }
    let mut prefix = 1.0;
    let mut al = 1.0;
    for &r in ar {
        prefix *= r;
        al += prefix;
    }
    Ok(al)
}

/// Step sizes pooled across the ok traces.
///
/// With `exclude_terminal`, the last token-bearing chunk of each trace is
/// dropped as well, since a max-token or end-of-sequence cut truncates it.
pub fn decode_steps(traces: &[RequestTrace], exclude_terminal: bool) -> Vec<u32> {
    let mut steps = Vec::new();
    for t in traces.iter().filter(|t| t.is_ok()) {
        let sizes: Vec<u32> = t.token_events().map(|e| e.new_tokens).collect();
        if sizes.len() < 2 {
            continue;
        }
        let end = if exclude_terminal { sizes.len() - 1 } else { sizes.len() };
        steps.extend_from_slice(&sizes[1..end]);
    }
    steps
}

/// Mean tokens per decode step.
pub fn empirical_al(traces: &[RequestTrace], exclude_terminal: bool) -> Result<f64, MetricsError> {
    empirical_al_from_steps(&decode_steps(traces, exclude_terminal))
}

pub fn empirical_al_from_steps(steps: &[u32]) -> Result<f64, MetricsError> {
    if steps.is_empty() {
        return Err(MetricsError::NoSteps);
    }
    Ok(steps.iter().map(|&s| f64::from(s)).sum::<f64>() / steps.len() as f64)
}

/// Per-request mean AL, averaged over requests (each request weighs the
/// same regardless of its length).
pub fn empirical_al_request_weighted(
    traces: &[RequestTrace],
    exclude_terminal: bool,
) -> Result<f64, MetricsError> {
    let per_request: Vec<f64> = traces
        .iter()
        .filter_map(|t| {
            empirical_al_from_steps(&decode_steps(std::slice::from_ref(t), exclude_terminal)).ok()
        })
        .collect();
    if per_request.is_empty() {
        return Err(MetricsError::NoSteps);
    }
    Ok(per_request.iter().sum::<f64>() / per_request.len() as f64)
}

/// Conditional acceptance rates; `ar[i]` is `None` when no step reached
/// draft position `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArVector {
    pub gamma: usize,
    pub ar: Vec<Option<f64>>,
    pub support_counts: Vec<u64>,
}

impl ArVector {
    /// Closed-form AL from these rates; an absent rate sits behind a zero-support
    /// prefix and contributes nothing.
    pub fn theoretical_al(&self) -> f64 {
        let rates: Vec<f64> = self.ar.iter().map(|r| r.unwrap_or(0.0)).collect();
        theoretical_al(&rates).expect("rates in [0,1]")
    }
}

/// `ar[i] = #(steps >= i+2) / #(steps >= i+1)` for draft position `i+1`.
pub fn conditional_ars_from_steps(steps: &[u32], gamma: usize) -> Result<ArVector, MetricsError> {
    if gamma == 0 {
        return Err(MetricsError::InvalidParameter("gamma must be >= 1".into()));
    }
    // at_least[m] = #(steps with size >= m), m = 1..=gamma+1
    let mut at_least = vec![0u64; gamma + 2];
    for &s in steps {
        for count in &mut at_least[1..=(s as usize).min(gamma + 1)] {
            *count += 1;
        }
    }
    let mut ar = Vec::with_capacity(gamma);
    let mut support_counts = Vec::with_capacity(gamma);
    for i in 1..=gamma {
        let denom = at_least[i];
        support_counts.push(denom);
        ar.push((denom > 0).then(|| at_least[i + 1] as f64 / denom as f64));
    }
    Ok(ArVector {
        gamma,
        ar,
        support_counts,
    })
}

pub fn conditional_ars(
    traces: &[RequestTrace],
    gamma: usize,
    exclude_terminal: bool,
) -> Result<ArVector, MetricsError> {
    conditional_ars_from_steps(&decode_steps(traces, exclude_terminal), gamma)
}
