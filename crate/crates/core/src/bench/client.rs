use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use futures::StreamExt;
use serde_json::{json, Value};

use super::sse::{ChunkParser, SseSplitter};
use super::{monotonic_ns, ApiKind, BenchConfig, BenchError, RequestTrace, RunRecord, TraceStatus, WorkloadItem};
use crate::dataset::{tokenizer_by_id, TokenizerProvider};

/// Header carrying the request id; the mock server seeds from it.
pub const REQUEST_ID_HEADER: &str = "x-request-id";
/// Header carrying the workload item's category tag.
pub const PROMPT_TAG_HEADER: &str = "x-prompt-tag";

/// Shared HTTP client plus everything needed to build and read requests.
pub struct BenchClient {
    http: reqwest::Client,
    url: String,
    config: BenchConfig,
    tokenizer: Arc<dyn TokenizerProvider>,
}

impl BenchClient {
    pub fn new(config: &BenchConfig) -> Result<Self, BenchError> {
        config.validate()?;
        let tokenizer =
            tokenizer_by_id(&config.tokenizer_id).map_err(|e| BenchError::Config(e.to_string()))?;
        let http = reqwest::Client::builder()
            .connect_timeout(Duration::from_secs(10))
            .tcp_nodelay(true)
            .pool_max_idle_per_host(usize::MAX)
            .build()
            .map_err(|e| BenchError::Config(format!("http client: {e}")))?;
        Ok(Self {
            http,
            url: config.url(),
            config: config.clone(),
            tokenizer,
        })
    }

    pub fn config(&self) -> &BenchConfig {
        &self.config
    }

    /// Request body. Built from the item alone, so equal prompts give
    /// byte-identical bodies.
    pub fn request_body(&self, item: &WorkloadItem) -> Vec<u8> {
        let cfg = &self.config;
        let text = match (&item.prompt, cfg.send_token_ids) {
            (Some(t), _) => t.clone(),
            (None, true) => String::new(),
            (None, false) => self.tokenizer.decode(&item.prompt_token_ids),
        };
        let mut body = json!({ "model": cfg.model });
        match cfg.api {
            ApiKind::Completions => body["prompt"] = Value::String(text),
            ApiKind::Chat => body["messages"] = json!([{ "role": "user", "content": text }]),
        }
        if cfg.send_token_ids {
            body["prompt_token_ids"] = json!(item.prompt_token_ids);
        }
        body["max_tokens"] = json!(cfg.max_output_tokens);
        body["temperature"] = json!(cfg.temperature);
        body["stream"] = json!(true);
        body["stream_options"] = json!({ "include_usage": true });
        serde_json::to_vec(&body).expect("json body")
    }

    /// Stream one request to completion, timeout or failure. Events received
    /// before a failure stay in the trace.
    pub async fn dispatch(&self, item: &WorkloadItem, request_id: &str) -> RequestTrace {
        self.dispatch_inner(item, request_id).await.0
    }

    /// Also reports whether the failure was a refused or failed connection.
    async fn dispatch_inner(&self, item: &WorkloadItem, request_id: &str) -> (RequestTrace, bool) {
        let body = self.request_body(item);
        let mut req = self
            .http
            .post(&self.url)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .header(REQUEST_ID_HEADER, request_id)
            .body(body);
        if let Some(tag) = &item.tag {
            req = req.header(PROMPT_TAG_HEADER, tag);
        }
        let deadline =
            tokio::time::Instant::now() + Duration::from_secs_f64(self.config.request_timeout);
        let mut trace = RequestTrace::new(request_id, &item.sample_id, monotonic_ns());
        let fail = |trace: &mut RequestTrace, status, msg: String| {
            trace.status = status;
            trace.error = Some(msg);
        };

        let resp = match tokio::time::timeout_at(deadline, req.send()).await {
            Err(_) => {
                fail(&mut trace, TraceStatus::Timeout, "no response before timeout".into());
                return (trace, false);
            }
            Ok(Err(e)) => {
                let connect = e.is_connect();
                fail(&mut trace, TraceStatus::Error, e.to_string());
                return (trace, connect);
            }
            Ok(Ok(r)) => r,
        };
        if !resp.status().is_success() {
            let status = resp.status();
            let text = resp.text().await.unwrap_or_default();
            fail(&mut trace, TraceStatus::Error, format!("HTTP {status}: {}", text.chars().take(200).collect::<String>()));
            return (trace, false);
        }

        let mut stream = resp.bytes_stream();
        let mut splitter = SseSplitter::default();
        let mut parser = ChunkParser::new(Some(&*self.tokenizer));
        loop {
            let bytes = match tokio::time::timeout_at(deadline, stream.next()).await {
                Err(_) => {
                    fail(&mut trace, TraceStatus::Timeout, "stream timed out".into());
                    break;
                }
                Ok(None) => {
                    fail(&mut trace, TraceStatus::Error, "stream closed before [DONE]".into());
                    break;
                }
                Ok(Some(Err(e))) => {
                    fail(&mut trace, TraceStatus::Error, format!("stream: {e}"));
                    break;
                }
                Ok(Some(Ok(b))) => b,
            };
            let t = monotonic_ns();
            let mut done = false;
            for raw in splitter.push(&bytes) {
                match parser.parse(&raw) {
                    Ok(chunk) => {
                        trace.push(t, chunk.new_tokens, chunk.is_final);
                        if chunk.reported_completion_tokens.is_some() {
                            trace.reported_completion_tokens = chunk.reported_completion_tokens;
                        }
                        if chunk.finish_reason.is_some() {
                            trace.finish_reason = chunk.finish_reason;
                        }
                        if chunk.is_final {
                            done = true;
                            break;
                        }
                    }
                    Err(e) => {
                        fail(&mut trace, TraceStatus::Error, e.to_string());
                        return (trace, false);
                    }
                }
            }
            if done {
                break;
            }
        }
        (trace, false)
    }
}

/// Dispatch a single prompt with a fresh client.
pub async fn dispatch_request(
    config: &BenchConfig,
    item: &WorkloadItem,
    request_id: &str,
) -> Result<RequestTrace, BenchError> {
    if item.prompt_token_ids.is_empty() && item.prompt.as_deref().is_none_or(str::is_empty) {
        return Err(BenchError::Workload(format!("sample `{}` has an empty prompt", item.sample_id)));
    }
    Ok(BenchClient::new(config)?.dispatch(item, request_id).await)
}

struct LevelOutcome {
    traces: Vec<RequestTrace>,
    wall_start_ns: u64,
    wall_end_ns: u64,
    aborted: Option<String>,
}

/// Run `count` requests with exactly `concurrency` in flight: each worker
/// dispatches its next request as soon as the previous one completes.
async fn closed_loop(
    client: &Arc<BenchClient>,
    workload: &Arc<Vec<WorkloadItem>>,
    count: usize,
    concurrency: usize,
    id_prefix: &str,
) -> LevelOutcome {
    let next = Arc::new(AtomicUsize::new(0));
    let abort = Arc::new(AtomicBool::new(false));
    let abort_msg: Arc<Mutex<Option<String>>> = Arc::default();
    let wall_start_ns = monotonic_ns();
    let workers: Vec<_> = (0..concurrency.min(count))
        .map(|_| {
            let (client, workload) = (Arc::clone(client), Arc::clone(workload));
            let (next, abort, abort_msg) = (Arc::clone(&next), Arc::clone(&abort), Arc::clone(&abort_msg));
            let prefix = id_prefix.to_owned();
            tokio::spawn(async move {
                let mut mine = Vec::new();
                loop {
                    if abort.load(Ordering::Relaxed) {
                        break;
                    }
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= count {
                        break;
                    }
                    let item = &workload[i % workload.len()];
                    let (trace, connect_failed) =
                        client.dispatch_inner(item, &format!("{prefix}-{i:06}")).await;
                    if connect_failed && !abort.swap(true, Ordering::Relaxed) {
                        *abort_msg.lock().expect("abort lock") = trace.error.clone();
                    }
                    mine.push((i, trace));
                }
                mine
            })
        })
        .collect();
    let mut indexed = Vec::with_capacity(count);
    for w in workers {
        indexed.extend(w.await.expect("benchmark worker panicked"));
    }
    let wall_end_ns = monotonic_ns();
    indexed.sort_by_key(|(i, _)| *i);
    let aborted = abort_msg.lock().expect("abort lock").take();
    LevelOutcome {
        traces: indexed.into_iter().map(|(_, t)| t).collect(),
        wall_start_ns,
        wall_end_ns,
        aborted,
    }
}

/// Sweep the configured concurrency levels, one pass over the workload per
/// level. Warmup requests run first at the largest level and are dropped. A
/// connection failure aborts the sweep; the returned records end with the
/// aborted level.
pub async fn run_benchmark(
    config: &BenchConfig,
    workload: &[WorkloadItem],
) -> Result<Vec<RunRecord>, BenchError> {
    if workload.is_empty() {
        return Err(BenchError::Workload("workload is empty".into()));
    }
    if let Some(item) = workload.iter().find(|w| w.prompt_token_ids.is_empty()) {
        return Err(BenchError::Workload(format!("sample `{}` has an empty prompt", item.sample_id)));
    }
    let client = Arc::new(BenchClient::new(config)?);
    let workload = Arc::new(workload.to_vec());
    let mut records = Vec::new();

    let warmup = config.warmup();
    if warmup > 0 {
        let out = closed_loop(&client, &workload, warmup, config.max_concurrency(), "warmup").await;
        if let Some(msg) = out.aborted {
            tracing::error!(error = %msg, "endpoint unreachable during warmup");
            records.push(RunRecord::aborted(config, config.concurrency_levels[0], msg));
            return Ok(records);
        }
    }

    for &c in &config.concurrency_levels {
        tracing::info!(concurrency = c, requests = workload.len(), "running level");
        let out = closed_loop(&client, &workload, workload.len(), c, &format!("c{c}")).await;
        let stop = out.aborted.is_some();
        records.push(RunRecord {
            config: config.clone(),
            concurrency: c,
            under_filled: workload.len() < c,
            traces: out.traces,
            wall_start_ns: out.wall_start_ns,
            wall_end_ns: out.wall_end_ns,
            aborted: out.aborted,
        });
        if stop {
            break;
        }
    }
    Ok(records)
}
