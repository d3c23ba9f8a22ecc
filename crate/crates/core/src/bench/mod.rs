//! Closed-loop streaming load generator and trace recording.

mod client;
mod config;
mod record;
mod sse;
mod trace;
mod workload;

pub use client::{
    dispatch_request, run_benchmark, BenchClient, PROMPT_TAG_HEADER, REQUEST_ID_HEADER,
};
pub use config::{ApiKind, BenchConfig};
pub use record::{read_runs, write_run, RunRecord};
pub use sse::{parse_stream_chunk, ChunkParser, ParsedChunk, SseSplitter};
pub use trace::{monotonic_ns, read_traces, write_traces, ChunkEvent, RequestTrace, TraceStatus};
pub use workload::{load_workload, WorkloadItem};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{0}")]
    Io(String),
    #[error("config: {0}")]
    Config(String),
    #[error("workload: {0}")]
    Workload(String),
    #[error("stream: {0}")]
    Stream(String),
}
