//! Client for OpenAI-compatible embeddings endpoints with a content-addressed
//! disk cache.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use futures::stream::{self, StreamExt, TryStreamExt};
use serde::Deserialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::{CurationError, EmbeddingSet};

#[derive(Debug, Clone)]
pub struct EmbeddingsProvider {
    /// Full URL of the embeddings route, e.g. `https://host/v1/embeddings`.
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub batch_size: usize,
    pub parallelism: usize,
    pub max_retries: u32,
    pub timeout: Duration,
}

impl EmbeddingsProvider {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            batch_size: 64,
            parallelism: 4,
            max_retries: 3,
            timeout: Duration::from_secs(60),
        }
    }

    pub fn provider_id(&self) -> String {
        format!("{}#{}", self.endpoint, self.model)
    }
}

/// One file per (provider, text) hash holding the raw little-endian f64
/// vector. Writes go through a temp file and a rename.
#[derive(Debug, Clone)]
pub struct EmbeddingCache {
    dir: PathBuf,
}

impl EmbeddingCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, CurationError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|source| CurationError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(provider_id: &str, text: &str) -> String {
        let mut h = Sha256::new();
        h.update(provider_id.as_bytes());
        h.update([0u8]);
        h.update(text.as_bytes());
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.f64"))
    }

    pub fn get(&self, key: &str) -> Option<Vec<f64>> {
        let bytes = std::fs::read(self.path(key)).ok()?;
        if bytes.is_empty() || bytes.len() % 8 != 0 {
            return None;
        }
        Some(
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect(),
        )
    }

    pub fn put(&self, key: &str, vector: &[f64]) -> Result<(), CurationError> {
        let io = |source| CurationError::Io {
            path: self.dir.clone(),
            source,
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io)?;
        let bytes: Vec<u8> = vector.iter().flat_map(|x| x.to_le_bytes()).collect();
        tmp.write_all(&bytes).map_err(io)?;
        tmp.persist(self.path(key)).map_err(|e| io(e.error))?;
        Ok(())
    }
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
    #[serde(default)]
    index: Option<usize>,
}

async fn post_batch(
    client: &reqwest::Client,
    provider: &EmbeddingsProvider,
    texts: &[String],
) -> Result<Vec<Vec<f64>>, CurationError> {
    let body = json!({ "model": provider.model, "input": texts });
    let mut attempt = 0;
    loop {
        let mut req = client.post(&provider.endpoint).json(&body);
        if let Some(key) = &provider.api_key {
            req = req.bearer_auth(key);
        }
        let retryable = match req.send().await {
            Ok(resp) if resp.status().is_success() => {
                let parsed: EmbeddingResponse = resp
                    .json()
                    .await
                    .map_err(|e| CurationError::Endpoint(format!("bad response body: {e}")))?;
                if parsed.data.len() != texts.len() {
                    return Err(CurationError::Endpoint(format!(
                        "asked for {} embeddings, got {}",
                        texts.len(),
                        parsed.data.len()
                    )));
                }
                let mut data = parsed.data;
                if data.iter().all(|d| d.index.is_some()) {
                    data.sort_by_key(|d| d.index);
                }
                return Ok(data.into_iter().map(|d| d.embedding).collect());
            }
            Ok(resp) => {
                let status = resp.status();
                let msg = format!("HTTP {status}");
                if status.is_server_error() || status.as_u16() == 429 {
                    msg
                } else {
                    return Err(CurationError::Endpoint(msg));
                }
            }
            Err(e) => e.to_string(),
        };
        attempt += 1;
        if attempt > provider.max_retries {
            return Err(CurationError::Endpoint(format!(
                "giving up after {attempt} attempts: {retryable}"
            )));
        }
        tracing::warn!(attempt, error = %retryable, "embeddings request failed, retrying");
        tokio::time::sleep(Duration::from_millis(100 << attempt.min(6))).await;
    }
}

/// Embed `texts`, serving repeats from the cache. The returned set has ids
/// `"0".."N-1"` in input order and row-normalized vectors.
pub async fn fetch_embeddings(
    texts: &[String],
    provider: &EmbeddingsProvider,
    cache: &EmbeddingCache,
) -> Result<EmbeddingSet, CurationError> {
    let ids = (0..texts.len()).map(|i| i.to_string()).collect();
    fetch_embeddings_with_ids(ids, texts, provider, cache).await
}

pub async fn fetch_embeddings_with_ids(
    ids: Vec<String>,
    texts: &[String],
    provider: &EmbeddingsProvider,
    cache: &EmbeddingCache,
) -> Result<EmbeddingSet, CurationError> {
    let pid = provider.provider_id();
    let keys: Vec<String> = texts.iter().map(|t| EmbeddingCache::key(&pid, t)).collect();

    let mut vectors: HashMap<&str, Vec<f64>> = HashMap::new();
    let mut missing: Vec<(String, String)> = Vec::new();
    for (key, text) in keys.iter().zip(texts) {
        if vectors.contains_key(key.as_str()) || missing.iter().any(|(k, _)| k == key) {
            continue;
        }
        match cache.get(key) {
            Some(v) => {
                vectors.insert(key, v);
            }
            None => missing.push((key.clone(), text.clone())),
        }
    }

    if !missing.is_empty() {
        let client = reqwest::Client::builder()
            .timeout(provider.timeout)
            .build()
            .map_err(|e| CurationError::Endpoint(e.to_string()))?;
        let batches: Vec<&[(String, String)]> =
            missing.chunks(provider.batch_size.max(1)).collect();
        let fetched: Vec<Vec<(String, Vec<f64>)>> = stream::iter(batches)
            .map(|batch| {
                let client = &client;
                async move {
                    let texts: Vec<String> = batch.iter().map(|(_, t)| t.clone()).collect();
                    let vecs = post_batch(client, provider, &texts).await?;
                    Ok::<_, CurationError>(
                        batch.iter().map(|(k, _)| k.clone()).zip(vecs).collect(),
                    )
                }
            })
            .buffer_unordered(provider.parallelism.max(1))
            .try_collect()
            .await?;
        for (key, v) in fetched.into_iter().flatten() {
            cache.put(&key, &v)?;
            let k = keys.iter().find(|k| **k == key).expect("requested key");
            vectors.insert(k.as_str(), v);
        }
    }

    let rows: Vec<Vec<f64>> = keys.iter().map(|k| vectors[k.as_str()].clone()).collect();
    EmbeddingSet::new(ids, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EmbeddingCache::new(dir.path()).unwrap();
        let key = EmbeddingCache::key("p", "hello");
        assert!(cache.get(&key).is_none());
        cache.put(&key, &[1.5, -2.0, 0.25]).unwrap();
        assert_eq!(cache.get(&key).unwrap(), vec![1.5, -2.0, 0.25]);
    }

    #[test]
    fn key_depends_on_provider_and_text() {
        let a = EmbeddingCache::key("p1", "t");
        assert_eq!(a, EmbeddingCache::key("p1", "t"));
        assert_ne!(a, EmbeddingCache::key("p2", "t"));
        assert_ne!(a, EmbeddingCache::key("p1", "u"));
        assert_eq!(a.len(), 64);
    }
}
