use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::bench::RequestTrace;

const NS_PER_MS: f64 = 1e6;

/// Summary of a latency sample in milliseconds. Percentiles use the
/// nearest-rank method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub mean: f64,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub count: usize,
}

/// Nearest-rank percentile of an ascending sample: element
/// `ceil(p/100 * n)` (1-based).
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

impl Percentiles {
    pub fn from_values(mut values: Vec<f64>) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite latency"));
        Some(Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            p50: nearest_rank(&values, 50.0),
            p90: nearest_rank(&values, 90.0),
            p99: nearest_rank(&values, 99.0),
            count: values.len(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub ttft: Percentiles,
    /// `None` when no trace had a second token-bearing chunk.
    pub step_latency: Option<Percentiles>,
    pub request_latency: Percentiles,
}

/// Gaps in ms between consecutive token-bearing chunks of each ok trace.
pub fn step_gaps_ms(traces: &[RequestTrace]) -> Vec<f64> {
    let mut gaps = Vec::new();
    for t in traces.iter().filter(|t| t.is_ok()) {
        let times: Vec<u64> = t.token_events().map(|e| e.t_ns).collect();
        gaps.extend(times.windows(2).map(|w| (w[1] - w[0]) as f64 / NS_PER_MS));
    }
    gaps
}

/// TTFT (dispatch to first token), per-step gaps, and full request latency
/// (dispatch to final event) over the ok traces.
pub fn latency_stats(traces: &[RequestTrace]) -> Result<LatencyStats, MetricsError> {
    let ok: Vec<&RequestTrace> = traces.iter().filter(|t| t.is_ok()).collect();
    let ttft: Vec<f64> = ok
        .iter()
        .filter_map(|t| {
            t.token_events()
                .next()
                .map(|e| (e.t_ns - t.dispatch_ns) as f64 / NS_PER_MS)
        })
        .collect();
    let request: Vec<f64> = ok
        .iter()
        .filter_map(|t| t.events.last().map(|e| (e.t_ns - t.dispatch_ns) as f64 / NS_PER_MS))
        .collect();
    let ttft = Percentiles::from_values(ttft).ok_or(MetricsError::NoTraces)?;
    let request_latency = Percentiles::from_values(request).ok_or(MetricsError::NoTraces)?;
    let step_latency = Percentiles::from_values(step_gaps_ms(traces));
    Ok(LatencyStats {
        ttft,
        step_latency,
        request_latency,
    })
}
