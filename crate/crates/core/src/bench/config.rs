use std::path::Path;

use serde::{Deserialize, Serialize};

use super::BenchError;

/// Which OpenAI-compatible route to stream from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiKind {
    #[default]
    Completions,
    Chat,
}

impl ApiKind {
    pub fn route(self) -> &'static str {
        match self {
            ApiKind::Completions => "/v1/completions",
            ApiKind::Chat => "/v1/chat/completions",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// Base URL (`http://host:port`) or a full `/v1/...` route.
    pub endpoint: String,
    pub concurrency_levels: Vec<usize>,
    /// Draft length of the server under test; 0 means speculation is off.
    /// Recorded with the results, never sent.
    pub draft_length: usize,
    #[serde(default)]
    pub temperature: f64,
    pub max_output_tokens: usize,
    #[serde(default = "default_true")]
    pub send_token_ids: bool,
    /// Seconds.
    #[serde(default = "default_timeout")]
    pub request_timeout: f64,
    /// Requests discarded before measuring; defaults to twice the largest
    /// concurrency level.
    #[serde(default)]
    pub warmup_requests: Option<usize>,
    #[serde(default)]
    pub api: ApiKind,
    #[serde(default = "default_model")]
    pub model: String,
    /// Tokenizer used to count tokens when chunks carry only text.
    #[serde(default = "default_tokenizer")]
    pub tokenizer_id: String,
}

fn default_true() -> bool {
    true
}

fn default_timeout() -> f64 {
    600.0
}

fn default_model() -> String {
    "default".into()
}

fn default_tokenizer() -> String {
    "whitespace".into()
}

impl BenchConfig {
    pub fn new(endpoint: impl Into<String>, concurrency_levels: Vec<usize>, draft_length: usize, max_output_tokens: usize) -> Self {
        Self {
            endpoint: endpoint.into(),
            concurrency_levels,
            draft_length,
            temperature: 0.0,
            max_output_tokens,
            send_token_ids: true,
            request_timeout: default_timeout(),
            warmup_requests: None,
            api: ApiKind::default(),
            model: default_model(),
            tokenizer_id: default_tokenizer(),
        }
    }

    /// Parse TOML (`.toml`) or JSON (anything else).
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
        let cfg: Self = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| BenchError::Config(e.message().to_owned()))?
        } else {
            serde_json::from_str(&text).map_err(|e| BenchError::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.concurrency_levels.is_empty() {
            return bad("concurrency_levels must not be empty".into());
        }
        if self.concurrency_levels.contains(&0) {
            return bad("concurrency_levels entries must be >= 1".into());
        }
        if !self.concurrency_levels.windows(2).all(|w| w[0] < w[1]) {
            return bad("concurrency_levels must be strictly ascending".into());
        }
        if self.max_output_tokens == 0 {
            return bad("max_output_tokens must be >= 1".into());
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return bad("temperature must be >= 0".into());
        }
        if self.request_timeout.is_nan() || self.request_timeout <= 0.0 {
            return bad("request_timeout must be > 0".into());
        }
        Ok(())
    }

    pub fn max_concurrency(&self) -> usize {
        self.concurrency_levels.iter().copied().max().unwrap_or(1)
    }

    pub fn warmup(&self) -> usize {
        self.warmup_requests.unwrap_or(2 * self.max_concurrency())
    }

    pub fn url(&self) -> String {
        let base = self.endpoint.trim_end_matches('/');
        if base.contains("/v1/") {
            base.to_owned()
        } else {
            format!("{base}{}", self.api.route())
        }
    }
}
