//! Trace analysis: acceptance rates and lengths, latency percentiles,
//! throughput, Pareto frontiers, speedup estimates and vocabulary coverage.

mod acceptance;
mod coverage;
mod latency;
mod pareto;
mod speedup;
mod throughput;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use acceptance::{
    conditional_ars, conditional_ars_from_steps, decode_steps, empirical_al,
    empirical_al_from_steps, empirical_al_request_weighted, theoretical_al, ArVector,
};
pub use coverage::{top_k_vocab, vocab_coverage, write_coverage_csv, VocabCoverage};
pub use latency::{latency_stats, nearest_rank, step_gaps_ms, LatencyStats, Percentiles};
pub use pareto::{pareto_frontier, write_pareto_csv, ParetoPoint};
pub use speedup::{mean_speedup, speedup_proxy, MeanSpeedup, SpeedupEstimate};
pub use throughput::{tps, Throughput, STEADY_STATE_TRIM};

use crate::bench::{RequestTrace, RunRecord};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("acceptance rate at position {position} is {value}, outside [0, 1]")]
    RateOutOfRange { position: usize, value: f64 },
    #[error("no decode steps left after exclusions")]
    NoSteps,
    #[error("no successful traces")]
    NoTraces,
    #[error("run wall time is zero")]
    ZeroWallTime,
    #[error("{0}")]
    EmptyInput(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl MetricsError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_owned(),
            source,
        }
    }
}

/// Everything measured for one concurrency level of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub gamma: usize,
    pub concurrency: usize,
    pub n_requests: usize,
    pub n_failed: usize,
    pub n_steps: usize,
    /// Pooled over all decode steps (token-weighted).
    pub empirical_al: f64,
    /// Mean of per-request AL.
    pub empirical_al_request_weighted: f64,
    /// Closed-form AL evaluated at the recovered rates.
    pub theoretical_al: f64,
    pub ar_vector: ArVector,
    pub ttft_stats: Percentiles,
    pub step_latency_stats: Option<Percentiles>,
    pub request_latency_stats: Percentiles,
    pub user_tps: f64,
    pub user_tps_token_weighted: f64,
    pub output_tps: f64,
    pub exclude_terminal: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl MetricsReport {
    pub fn pareto_point(&self) -> ParetoPoint {
        ParetoPoint::new(self.concurrency, self.user_tps, self.output_tps)
    }
}

/// Assemble a report from completed traces.
pub fn build_report(
    traces: &[RequestTrace],
    gamma: usize,
    concurrency: usize,
    wall_start_ns: u64,
    wall_end_ns: u64,
    exclude_terminal: bool,
) -> Result<MetricsReport, MetricsError> {
    let steps = decode_steps(traces, exclude_terminal);
    let empirical = empirical_al_from_steps(&steps)?;
    let ar_vector = if gamma == 0 {
        ArVector {
            gamma: 0,
            ar: Vec::new(),
            support_counts: Vec::new(),
        }
    } else {
        conditional_ars_from_steps(&steps, gamma)?
    };
    let lat = latency_stats(traces)?;
    let thr = tps(traces, wall_start_ns, wall_end_ns)?;
    let mut warnings: Vec<String> = thr.warning.into_iter().collect();
    if steps.iter().any(|&s| s as usize > gamma + 1) {
        warnings.push(format!("chunks larger than gamma+1 = {} observed", gamma + 1));
    }
    Ok(MetricsReport {
        gamma,
        concurrency,
        n_requests: traces.len(),
        n_failed: traces.iter().filter(|t| !t.is_ok()).count(),
        n_steps: steps.len(),
        empirical_al: empirical,
        empirical_al_request_weighted: empirical_al_request_weighted(traces, exclude_terminal)?,
        theoretical_al: ar_vector.theoretical_al(),
        ar_vector,
        ttft_stats: lat.ttft,
        step_latency_stats: lat.step_latency,
        request_latency_stats: lat.request_latency,
        user_tps: thr.user_tps,
        user_tps_token_weighted: thr.user_tps_token_weighted,
        output_tps: thr.output_tps,
        exclude_terminal,
        warnings,
    })
}

/// Report for one recorded concurrency level, terminal chunks excluded.
pub fn report_for_run(run: &RunRecord) -> Result<MetricsReport, MetricsError> {
    build_report(
        &run.traces,
        run.config.draft_length,
        run.concurrency,
        run.wall_start_ns,
        run.wall_end_ns,
        true,
    )
}
