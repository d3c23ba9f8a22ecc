use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::BenchError;

static EPOCH: OnceLock<Instant> = OnceLock::new();

/// Nanoseconds on the process-wide monotonic clock. Every timestamp in a
/// trace comes from here.
pub fn monotonic_ns() -> u64 {
    EPOCH.get_or_init(Instant::now).elapsed().as_nanos() as u64
}

/// One received streaming object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkEvent {
    pub t_ns: u64,
    pub new_tokens: u32,
    pub is_final: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceStatus {
    Ok,
    Timeout,
    Error,
}

/// Timeline of a single streamed request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestTrace {
    pub request_id: String,
    pub sample_id: String,
    pub dispatch_ns: u64,
    pub events: Vec<ChunkEvent>,
    pub total_output_tokens: u64,
    pub status: TraceStatus,
    /// Completion token count reported by the endpoint's usage object.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported_completion_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finish_reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RequestTrace {
    pub fn new(request_id: impl Into<String>, sample_id: impl Into<String>, dispatch_ns: u64) -> Self {
        Self {
            request_id: request_id.into(),
            sample_id: sample_id.into(),
            dispatch_ns,
            events: Vec::new(),
            total_output_tokens: 0,
            status: TraceStatus::Ok,
            reported_completion_tokens: None,
            finish_reason: None,
            error: None,
        }
    }

    /// Build an ok trace from `(offset_ns, new_tokens)` pairs relative to the
    /// dispatch time, appending a zero-token final event at the last offset.
    pub fn from_chunks(request_id: &str, dispatch_ns: u64, chunks: &[(u64, u32)]) -> Self {
        let mut t = Self::new(request_id, request_id, dispatch_ns);
        for &(dt, n) in chunks {
            t.push(dispatch_ns + dt, n, false);
        }
        let end = chunks.last().map_or(dispatch_ns, |c| dispatch_ns + c.0);
        t.push(end, 0, true);
        t
    }

    pub fn push(&mut self, t_ns: u64, new_tokens: u32, is_final: bool) {
        self.events.push(ChunkEvent {
            t_ns,
            new_tokens,
            is_final,
        });
        self.total_output_tokens += u64::from(new_tokens);
    }

    pub fn is_ok(&self) -> bool {
        self.status == TraceStatus::Ok
    }

    /// Events that carried at least one token.
    pub fn token_events(&self) -> impl Iterator<Item = &ChunkEvent> {
        self.events.iter().filter(|e| e.new_tokens > 0)
    }

    /// Check the structural invariants of a completed trace.
    pub fn validate(&self) -> Result<(), String> {
        if self
            .events
            .windows(2)
            .any(|w| w[1].t_ns < w[0].t_ns)
        {
            return Err("event timestamps decrease".into());
        }
        if let Some(first) = self.events.first() {
            if first.t_ns < self.dispatch_ns {
                return Err("first event precedes dispatch".into());
            }
        }
        if self.is_ok() {
            if self.events.is_empty() {
                return Err("ok trace without events".into());
            }
            let finals = self.events.iter().filter(|e| e.is_final).count();
            if finals != 1 {
                return Err(format!("{finals} final events"));
            }
            let sum: u64 = self.events.iter().map(|e| u64::from(e.new_tokens)).sum();
            if sum != self.total_output_tokens {
                return Err(format!(
                    "total_output_tokens {} != sum of chunks {sum}",
                    self.total_output_tokens
                ));
            }
        }
        Ok(())
    }
}

pub fn write_traces(path: &Path, traces: &[RequestTrace]) -> Result<(), BenchError> {
    let io = |e: std::io::Error| BenchError::Io(format!("{}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for t in traces {
        serde_json::to_writer(&mut w, t).map_err(|e| BenchError::Io(e.to_string()))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_traces(path: &Path) -> Result<Vec<RequestTrace>, BenchError> {
    let io = |e: std::io::Error| BenchError::Io(format!("{}: {e}", path.display()));
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| {
            BenchError::Io(format!("{} line {}: {e}", path.display(), i + 1))
        })?);
    }
    Ok(out)
}
