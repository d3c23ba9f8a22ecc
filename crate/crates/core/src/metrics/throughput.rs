use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::bench::RequestTrace;

/// Fraction of the run's wall time trimmed at each end for output TPS.
pub const STEADY_STATE_TRIM: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Throughput {
    /// Mean over requests of decode tokens / decode time.
    pub user_tps: f64,
    /// Total decode tokens / total decode time across requests.
    pub user_tps_token_weighted: f64,
    /// Aggregate tokens per second over the steady-state window.
    pub output_tps: f64,
    /// Whether the trimmed window was used.
    pub trimmed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Per-user and aggregate token rates.
///
/// User TPS counts tokens after a request's first chunk over the time from
/// that chunk to its last token-bearing chunk. Output TPS counts every token
/// received inside `[start + 5%, end - 5%]` of the wall window, falling back
/// to the full window (with a warning) when the run is too short to trim or
/// the trimmed window holds no tokens.
pub fn tps(
    traces: &[RequestTrace],
    wall_start_ns: u64,
    wall_end_ns: u64,
) -> Result<Throughput, MetricsError> {
    let ok: Vec<&RequestTrace> = traces.iter().filter(|t| t.is_ok()).collect();
    if ok.is_empty() {
        return Err(MetricsError::NoTraces);
    }
    if wall_end_ns <= wall_start_ns {
        return Err(MetricsError::ZeroWallTime);
    }

    let mut per_user = Vec::new();
    let (mut decode_tokens, mut decode_ns) = (0u64, 0u64);
    for t in &ok {
        let events: Vec<_> = t.token_events().collect();
        if events.len() < 2 {
            continue;
        }
        let tokens: u64 = events[1..].iter().map(|e| u64::from(e.new_tokens)).sum();
        let span = events[events.len() - 1].t_ns - events[0].t_ns;
        if span == 0 {
            continue;
        }
        per_user.push(tokens as f64 / (span as f64 / 1e9));
        decode_tokens += tokens;
        decode_ns += span;
    }
    let user_tps = if per_user.is_empty() {
        0.0
    } else {
        per_user.iter().sum::<f64>() / per_user.len() as f64
    };
    let user_tps_token_weighted = if decode_ns == 0 {
        0.0
    } else {
        decode_tokens as f64 / (decode_ns as f64 / 1e9)
    };

    let wall = wall_end_ns - wall_start_ns;
    let trim = (wall as f64 * STEADY_STATE_TRIM) as u64;
    let (lo, hi) = (wall_start_ns + trim, wall_end_ns - trim);
    let windowed: u64 = ok
        .iter()
        .flat_map(|t| t.token_events())
        .filter(|e| e.t_ns >= lo && e.t_ns <= hi)
        .map(|e| u64::from(e.new_tokens))
        .sum();
    let (output_tps, trimmed, warning) = if trim > 0 && windowed > 0 {
        (windowed as f64 / ((hi - lo) as f64 / 1e9), true, None)
    } else {
        let total: u64 = ok.iter().map(|t| t.total_output_tokens).sum();
        (
            total as f64 / (wall as f64 / 1e9),
            false,
            Some("steady-state window empty; using the full run window".to_owned()),
        )
    };
    Ok(Throughput {
        user_tps,
        user_tps_token_weighted,
        output_tps,
        trimmed,
        warning,
    })
}
