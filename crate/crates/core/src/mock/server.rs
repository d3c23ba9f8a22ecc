use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::{Body, Bytes};
use axum::extract::{Path, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::time::Instant;

use super::{
    sample_step_with, step_latency, ContentMode, MockConfig, MockError, SeedMode, FIXED_TOKEN_ID,
    FIXED_TOKEN_TEXT,
};

const REQUEST_ID_HEADER: &str = "x-request-id";
const PROMPT_TAG_HEADER: &str = "x-prompt-tag";

/// Ground truth for one finished request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub request_id: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    pub ar_true: Vec<f64>,
    /// Tokens per emitted chunk, final truncated chunk included.
    pub chunk_sizes: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub in_flight: usize,
    pub peak_in_flight: usize,
    pub served: u64,
}

/// Shared server state. The gauges are atomics; the ground-truth log is
/// written once per finished request.
pub struct MockState {
    cfg: MockConfig,
    hash: String,
    in_flight: AtomicUsize,
    peak: AtomicUsize,
    served: AtomicU64,
    global_rng: Mutex<ChaCha8Rng>,
    requests: Mutex<HashMap<String, RequestRecord>>,
}

impl MockState {
    pub fn new(cfg: MockConfig) -> Self {
        Self {
            hash: cfg.config_hash(),
            global_rng: Mutex::new(ChaCha8Rng::seed_from_u64(cfg.seed)),
            cfg,
            in_flight: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
            served: AtomicU64::new(0),
            requests: Mutex::default(),
        }
    }

    pub fn config(&self) -> &MockConfig {
        &self.cfg
    }

    pub fn snapshot(&self) -> StateSnapshot {
        StateSnapshot {
            in_flight: self.in_flight.load(Ordering::SeqCst),
            peak_in_flight: self.peak.load(Ordering::SeqCst),
            served: self.served.load(Ordering::SeqCst),
        }
    }

    /// Reset the peak gauge to the current in-flight count.
    pub fn reset_peak(&self) {
        self.peak
            .store(self.in_flight.load(Ordering::SeqCst), Ordering::SeqCst);
    }

    pub fn request(&self, id: &str) -> Option<RequestRecord> {
        self.requests.lock().expect("request log").get(id).cloned()
    }

    fn enter(&self) -> usize {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        now
    }
}

/// Holds one unit of the in-flight gauge until released or dropped.
struct InFlight {
    state: Arc<MockState>,
    held: bool,
}

impl InFlight {
    fn release(&mut self) {
        if std::mem::take(&mut self.held) {
            self.state.in_flight.fetch_sub(1, Ordering::SeqCst);
        }
    }
}

impl Drop for InFlight {
    fn drop(&mut self) {
        self.release();
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Api {
    Completions,
    Chat,
}

enum Phase {
    Steps,
    Usage,
    Done,
    End,
}

struct Generation {
    gauge: InFlight,
    api: Api,
    rng: ChaCha8Rng,
    record: RequestRecord,
    target: usize,
    emitted: usize,
    prompt_tokens: usize,
    /// Set on the first poll so request parsing and header flushing do not
    /// eat into the first step.
    deadline: Option<Instant>,
    phase: Phase,
    echo_ids: Vec<u32>,
    echo_words: Vec<String>,
    model: String,
}

impl Generation {
    fn content(&self, start: usize, n: usize) -> (Vec<u32>, String) {
        let mut ids = Vec::with_capacity(n);
        let mut text = String::new();
        for pos in start..start + n {
            let (id, word) = match self.state_content_mode() {
                ContentMode::Echo if !self.echo_ids.is_empty() => {
                    let id = self.echo_ids[pos % self.echo_ids.len()];
                    let word = if self.echo_words.is_empty() {
                        format!("t{id}")
                    } else {
                        self.echo_words[pos % self.echo_words.len()].clone()
                    };
                    (id, word)
                }
                _ => (FIXED_TOKEN_ID, FIXED_TOKEN_TEXT.to_owned()),
            };
            ids.push(id);
            text.push(' ');
            text.push_str(&word);
        }
        (ids, text)
    }

    fn state_content_mode(&self) -> ContentMode {
        self.gauge.state.cfg.content_mode
    }

    fn chunk(&self, ids: Vec<u32>, text: String, finish: Option<&str>) -> Value {
        let mut choice = match self.api {
            Api::Completions => json!({ "index": 0, "text": text }),
            Api::Chat => json!({ "index": 0, "delta": { "content": text } }),
        };
        if self.gauge.state.cfg.report_token_ids {
            choice["token_ids"] = json!(ids);
        }
        choice["finish_reason"] = json!(finish);
        let object = match self.api {
            Api::Completions => "text_completion",
            Api::Chat => "chat.completion.chunk",
        };
        json!({
            "id": self.record.request_id,
            "object": object,
            "model": self.model,
            "choices": [choice],
        })
    }

    async fn next_event(mut self) -> Option<(Result<Bytes, std::convert::Infallible>, Self)> {
        let payload = match self.phase {
            Phase::Steps => {
                let state = Arc::clone(&self.gauge.state);
                let in_flight = state.in_flight.load(Ordering::SeqCst).max(1);
                let deadline =
                    self.deadline.unwrap_or_else(Instant::now) + step_latency(&state.cfg, in_flight);
                self.deadline = Some(deadline);
                tokio::time::sleep_until(deadline).await;
                let step = sample_step_with(&self.record.ar_true, &mut self.rng);
                let n = step.emitted.min(self.target - self.emitted);
                let (ids, text) = self.content(self.emitted, n);
                self.emitted += n;
                self.record.chunk_sizes.push(n as u32);
                let last = self.emitted == self.target;
                if last {
                    self.phase = Phase::Usage;
                }
                self.chunk(ids, text, last.then_some("length"))
            }
            Phase::Usage => {
                self.phase = Phase::Done;
                json!({
                    "id": self.record.request_id,
                    "object": "text_completion",
                    "model": self.model,
                    "choices": [],
                    "usage": {
                        "prompt_tokens": self.prompt_tokens,
                        "completion_tokens": self.emitted,
                        "total_tokens": self.prompt_tokens + self.emitted,
                    },
                })
            }
            Phase::Done => {
                self.phase = Phase::End;
                let state = Arc::clone(&self.gauge.state);
                state
                    .requests
                    .lock()
                    .expect("request log")
                    .insert(self.record.request_id.clone(), self.record.clone());
                state.served.fetch_add(1, Ordering::SeqCst);
                // leave the gauge before the client can see [DONE] and
                // dispatch its next request
                self.gauge.release();
                return Some((Ok(Bytes::from_static(b"data: [DONE]\n\n")), self));
            }
            Phase::End => return None,
        };
        let mut frame = b"data: ".to_vec();
        serde_json::to_writer(&mut frame, &payload).expect("json chunk");
        frame.extend_from_slice(b"\n\n");
        Some((Ok(Bytes::from(frame)), self))
    }
}

fn error_response(status: StatusCode, message: String) -> Response {
    (status, Json(json!({ "error": { "message": message } }))).into_response()
}

async fn generate(state: Arc<MockState>, api: Api, headers: HeaderMap, body: Bytes) -> Response {
    let body: Value = match serde_json::from_slice(&body) {
        Ok(v) => v,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, format!("invalid JSON body: {e}")),
    };
    if body.get("stream").and_then(Value::as_bool) != Some(true) {
        return error_response(StatusCode::BAD_REQUEST, "only stream=true is supported".into());
    }
    let header = |name: &str| {
        headers
            .get(name)
            .and_then(|v| v.to_str().ok())
            .map(str::to_owned)
    };
    let gauge = InFlight {
        held: true,
        state: Arc::clone(&state),
    };
    state.enter();
    let cfg = &state.cfg;
    let served_so_far = state.served.load(Ordering::SeqCst);
    let request_id = header(REQUEST_ID_HEADER).unwrap_or_else(|| format!("mock-{served_so_far}"));
    let tag = header(PROMPT_TAG_HEADER);
    let seed = match cfg.seed_mode {
        SeedMode::PerRequestId => cfg.request_seed(&request_id),
        SeedMode::Global => state.global_rng.lock().expect("global rng").random(),
    };

    let echo_ids: Vec<u32> = body
        .get("prompt_token_ids")
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(|v| v.as_u64().map(|x| x as u32)).collect())
        .unwrap_or_default();
    let prompt_text = match api {
        Api::Completions => body.get("prompt").and_then(Value::as_str).map(str::to_owned),
        Api::Chat => body.get("messages").and_then(Value::as_array).map(|msgs| {
            msgs.iter()
                .filter_map(|m| m.get("content").and_then(Value::as_str))
                .collect::<Vec<_>>()
                .join("\n")
        }),
    }
    .unwrap_or_default();
    let echo_words: Vec<String> = prompt_text.split_whitespace().map(str::to_owned).collect();
    let prompt_tokens = if echo_ids.is_empty() { echo_words.len() } else { echo_ids.len() };
    let target = body
        .get("max_tokens")
        .and_then(Value::as_u64)
        .map_or(cfg.output_tokens_target, |m| (m as usize).min(cfg.output_tokens_target))
        .max(1);

    let gen = Generation {
        api,
        rng: ChaCha8Rng::seed_from_u64(seed),
        record: RequestRecord {
            request_id,
            seed,
            ar_true: cfg.rates_for(tag.as_deref()).to_vec(),
            tag,
            chunk_sizes: Vec::new(),
        },
        target,
        emitted: 0,
        prompt_tokens,
        deadline: None,
        phase: Phase::Steps,
        echo_ids: if echo_ids.is_empty() {
            (0..echo_words.len() as u32).collect()
        } else {
            echo_ids
        },
        echo_words,
        model: body
            .get("model")
            .and_then(Value::as_str)
            .unwrap_or("mock")
            .to_owned(),
        gauge,
    };
    let stream = futures::stream::unfold(gen, Generation::next_event);
    Response::builder()
        .header("content-type", "text/event-stream")
        .header("cache-control", "no-cache")
        .body(Body::from_stream(stream))
        .expect("static response parts")
}

async fn completions(State(s): State<Arc<MockState>>, headers: HeaderMap, body: Bytes) -> Response {
    generate(s, Api::Completions, headers, body).await
}

async fn chat(State(s): State<Arc<MockState>>, headers: HeaderMap, body: Bytes) -> Response {
    generate(s, Api::Chat, headers, body).await
}

async fn diag_state(State(s): State<Arc<MockState>>) -> Json<Value> {
    let snap = s.snapshot();
    Json(json!({
        "in_flight": snap.in_flight,
        "peak_in_flight": snap.peak_in_flight,
        "served": snap.served,
        "config_hash": s.hash,
    }))
}

async fn diag_reset(State(s): State<Arc<MockState>>) -> StatusCode {
    s.reset_peak();
    StatusCode::NO_CONTENT
}

async fn diag_config(State(s): State<Arc<MockState>>) -> Json<MockConfig> {
    Json(s.cfg.clone())
}

async fn diag_request(State(s): State<Arc<MockState>>, Path(id): Path<String>) -> Response {
    match s.request(&id) {
        Some(r) => Json(r).into_response(),
        None => error_response(StatusCode::NOT_FOUND, format!("no finished request `{id}`")),
    }
}

pub fn router(state: Arc<MockState>) -> Router {
    Router::new()
        .route("/v1/completions", post(completions))
        .route("/v1/chat/completions", post(chat))
        .route("/__mock/state", get(diag_state))
        .route("/__mock/reset_peak", post(diag_reset))
        .route("/__mock/config", get(diag_config))
        .route("/__mock/requests/{id}", get(diag_request))
        .with_state(state)
}

/// A running server.
pub struct MockHandle {
    pub addr: SocketAddr,
    pub state: Arc<MockState>,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<()>,
}

impl MockHandle {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stop accepting connections and wait for open streams to finish.
    pub async fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = (&mut self.task).await;
    }

    /// Run until the server task exits.
    pub async fn wait(mut self) {
        let _ = (&mut self.task).await;
    }
}

/// Bind `addr` (port 0 picks a free port) and serve in a background task.
pub async fn serve(cfg: MockConfig, addr: &str) -> Result<MockHandle, MockError> {
    cfg.validate()?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| MockError::Bind {
            addr: addr.to_owned(),
            source,
        })?;
    let local = listener.local_addr().map_err(|source| MockError::Bind {
        addr: addr.to_owned(),
        source,
    })?;
    let state = Arc::new(MockState::new(cfg));
    let app = router(Arc::clone(&state));
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        let server = axum::serve(listener, app).with_graceful_shutdown(async {
            let _ = rx.await;
        });
        if let Err(e) = server.await {
            tracing::error!(error = %e, "mock server stopped");
        }
    });
    tracing::info!(%local, "mock server listening");
    Ok(MockHandle {
        addr: local,
        state,
        shutdown: Some(tx),
        task,
    })
}
