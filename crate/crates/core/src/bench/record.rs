use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_traces, write_traces, BenchConfig, BenchError, RequestTrace};

/// Traces of one concurrency level plus the configuration that produced
/// them. Timestamps are on the recording process's monotonic clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: BenchConfig,
    pub concurrency: usize,
    #[serde(skip)]
    pub traces: Vec<RequestTrace>,
    pub wall_start_ns: u64,
    pub wall_end_ns: u64,
    /// Fewer requests than the concurrency level were available.
    pub under_filled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

impl RunRecord {
    pub(crate) fn aborted(config: &BenchConfig, concurrency: usize, reason: String) -> Self {
        Self {
            config: config.clone(),
            concurrency,
            traces: Vec::new(),
            wall_start_ns: 0,
            wall_end_ns: 0,
            under_filled: false,
            aborted: Some(reason),
        }
    }

    pub fn ok_traces(&self) -> impl Iterator<Item = &RequestTrace> {
        self.traces.iter().filter(|t| t.is_ok())
    }

    fn stem(&self) -> String {
        format!("c{:04}", self.concurrency)
    }
}

/// Writes `run_cNNNN.json` (metadata) and `traces_cNNNN.jsonl`; returns both
/// paths.
pub fn write_run(dir: &Path, run: &RunRecord) -> Result<Vec<PathBuf>, BenchError> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::Io(format!("{}: {e}", dir.display())))?;
    let meta = dir.join(format!("run_{}.json", run.stem()));
    let traces = dir.join(format!("traces_{}.jsonl", run.stem()));
    let json = serde_json::to_string_pretty(run).map_err(|e| BenchError::Io(e.to_string()))?;
    std::fs::write(&meta, json + "\n").map_err(|e| BenchError::Io(format!("{}: {e}", meta.display())))?;
    write_traces(&traces, &run.traces)?;
    Ok(vec![meta, traces])
}

/// Every run in `dir`, ordered by concurrency.
pub fn read_runs(dir: &Path) -> Result<Vec<RunRecord>, BenchError> {
    let entries =
        std::fs::read_dir(dir).map_err(|e| BenchError::Io(format!("{}: {e}", dir.display())))?;
    let mut runs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| BenchError::Io(e.to_string()))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(stem) = name.strip_prefix("run_").and_then(|n| n.strip_suffix(".json")) else {
            continue;
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
        let mut run: RunRecord = serde_json::from_str(&text)
            .map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
        let traces = dir.join(format!("traces_{stem}.jsonl"));
        if traces.exists() {
            run.traces = read_traces(&traces)?;
        }
        runs.push(run);
    }
    runs.sort_by_key(|r| r.concurrency);
    Ok(runs)
}
