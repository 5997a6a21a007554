//! Text embedders: a deterministic hashing embedder, an on-disk cache and an
//! OpenAI-compatible embeddings endpoint.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::RetrievalError;
use crate::llm::{RetryPolicy, API_BASE_ENV, API_KEY_ENV};

/// Maps texts to fixed-length vectors under one model id.
pub trait Embedder: Send + Sync {
    fn model_id(&self) -> &str;

    /// One vector per text, in order.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RetrievalError>;

    fn embed_one(&self, text: &str) -> Result<Vec<f64>, RetrievalError> {
        let mut v = self.embed(&[text.to_string()])?;
        v.pop().ok_or_else(|| RetrievalError::Embedder("embedder returned no vector".into()))
    }
}

/// Signed feature hashing of character trigrams.
///
/// Text is lowercased, whitespace runs collapse to one space and the result
/// is padded with a space on each side. Each trigram adds ±1 to a bucket
/// chosen by its SHA-256 digest. Equal texts give equal vectors and texts
/// sharing trigrams have positive similarity, which is all the tests and
/// offline runs need.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dim: usize,
    model_id: String,
}

impl HashingEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        HashingEmbedder { dim, model_id: format!("hashing-trigram-{dim}") }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn vector(&self, text: &str) -> Vec<f64> {
        let normalized = text.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ");
        let chars: Vec<char> = format!(" {normalized} ").chars().collect();
        let mut v = vec![0.0; self.dim];
        for w in chars.windows(3) {
            let trigram: String = w.iter().collect();
            let d = Sha256::digest(trigram.as_bytes());
            let h = u64::from_le_bytes(d[..8].try_into().expect("digest"));
            let bucket = (h % self.dim as u64) as usize;
            v[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
        }
        v
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder::new(256)
    }
}

impl Embedder for HashingEmbedder {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RetrievalError> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}

/// Cache key of `text` under `model_id`.
pub fn cache_key(model_id: &str, text: &str) -> String {
    let mut h = Sha256::new();
    h.update(model_id.as_bytes());
    h.update([0]);
    h.update(text.as_bytes());
    hex::encode(h.finalize())
}

/// One line of the cache file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub model_id: String,
    pub dim: usize,
    pub values: Vec<f64>,
}

/// Wraps an embedder with a JSON-lines cache keyed by (model id, text
/// digest). Misses are embedded in one batch and appended to the file.
pub struct CachedEmbedder<E> {
    inner: E,
    path: PathBuf,
    entries: Mutex<HashMap<String, Vec<f64>>>,
    inner_calls: AtomicU64,
}

impl<E: Embedder> CachedEmbedder<E> {
    /// Opens (or starts) the cache at `path`. Records of other models are
    /// ignored.
    pub fn open(inner: E, path: impl Into<PathBuf>) -> Result<Self, RetrievalError> {
        let path = path.into();
        let mut entries = HashMap::new();
        if path.exists() {
            let cache_err = |message: String| RetrievalError::Cache { path: path.display().to_string(), message };
            let file = std::fs::File::open(&path).map_err(|e| cache_err(e.to_string()))?;
            for (n, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| cache_err(e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CacheRecord =
                    serde_json::from_str(&line).map_err(|e| cache_err(format!("line {}: {e}", n + 1)))?;
                if rec.values.len() != rec.dim {
                    return Err(cache_err(format!("line {}: dim {} but {} values", n + 1, rec.dim, rec.values.len())));
                }
                if rec.model_id == inner.model_id() {
                    entries.insert(rec.key, rec.values);
                }
            }
        }
        Ok(CachedEmbedder { inner, path, entries: Mutex::new(entries), inner_calls: AtomicU64::new(0) })
    }

    /// Calls made to the wrapped embedder since opening.
    pub fn inner_calls(&self) -> u64 {
        self.inner_calls.load(Ordering::Relaxed)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<E: Embedder> Embedder for CachedEmbedder<E> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RetrievalError> {
        let model = self.inner.model_id();
        let keys: Vec<String> = texts.iter().map(|t| cache_key(model, t)).collect();
        let mut entries = self.entries.lock().expect("cache poisoned");
        let mut missing: Vec<usize> = Vec::new();
        for (i, k) in keys.iter().enumerate() {
            if !entries.contains_key(k) && !missing.iter().any(|&j| keys[j] == *k) {
                missing.push(i);
            }
        }
        if !missing.is_empty() {
            self.inner_calls.fetch_add(1, Ordering::Relaxed);
            let batch: Vec<String> = missing.iter().map(|&i| texts[i].clone()).collect();
            let vectors = self.inner.embed(&batch)?;
            if vectors.len() != batch.len() {
                return Err(RetrievalError::Embedder(format!("asked for {} vectors, got {}", batch.len(), vectors.len())));
            }
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&self.path)
                .map_err(|e| RetrievalError::Cache { path: self.path.display().to_string(), message: e.to_string() })?;
            for (&i, values) in missing.iter().zip(vectors) {
                let rec = CacheRecord { key: keys[i].clone(), model_id: model.to_string(), dim: values.len(), values };
                let line = serde_json::to_string(&rec).expect("plain data");
                writeln!(file, "{line}")
                    .map_err(|e| RetrievalError::Cache { path: self.path.display().to_string(), message: e.to_string() })?;
                entries.insert(rec.key, rec.values);
            }
        }
        Ok(keys.iter().map(|k| entries[k].clone()).collect())
    }
}

/// An OpenAI-compatible `/embeddings` endpoint.
pub struct ApiEmbedder {
    base: String,
    api_key: Option<String>,
    model_id: String,
    retry: RetryPolicy,
    agent: ureq::Agent,
}

impl ApiEmbedder {
    pub fn new(base: impl Into<String>, api_key: Option<String>, model_id: impl Into<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent =
            ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        ApiEmbedder {
            base: base.into().trim_end_matches('/').to_string(),
            api_key,
            model_id: model_id.into(),
            retry: RetryPolicy::default(),
            agent,
        }
    }

    /// Reads the endpoint and key from the same variables as the chat
    /// gateway.
    pub fn from_env(model_id: impl Into<String>, timeout: Duration) -> Self {
        let base = std::env::var(API_BASE_ENV).unwrap_or_else(|_| crate::llm::DEFAULT_API_BASE.to_string());
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.trim().is_empty());
        ApiEmbedder::new(base, key, model_id, timeout)
    }

    fn request(&self, key: &str, texts: &[String]) -> Result<Vec<Vec<f64>>, (bool, String)> {
        let url = format!("{}/embeddings", self.base);
        let mut resp = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(json!({"model": self.model_id, "input": texts}))
            .map_err(|e| (true, e.to_string()))?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            let retryable = status == 429 || status >= 500;
            return Err((retryable, format!("HTTP {status}")));
        }
        let v: Value = resp.body_mut().read_json().map_err(|e| (false, e.to_string()))?;
        let data = v.get("data").and_then(Value::as_array).ok_or((false, "missing data".to_string()))?;
        let mut out = vec![Vec::new(); texts.len()];
        for (pos, item) in data.iter().enumerate() {
            let index = item.get("index").and_then(Value::as_u64).map_or(pos, |i| i as usize);
            let values = item
                .get("embedding")
                .and_then(Value::as_array)
                .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
                .ok_or((false, format!("data[{pos}].embedding is not a number array")))?;
            *out.get_mut(index).ok_or((false, format!("data[{pos}].index out of range")))? = values;
        }
        Ok(out)
    }
}

impl Embedder for ApiEmbedder {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RetrievalError> {
        let Some(key) = &self.api_key else {
            return Err(RetrievalError::Embedder(format!("{API_KEY_ENV} is not set")));
        };
        let mut last = String::new();
        for attempt in 0..self.retry.max_attempts {
            if attempt > 0 {
                std::thread::sleep(self.retry.delay(attempt - 1));
            }
            match self.request(key, texts) {
                Ok(v) => return Ok(v),
                Err((retryable, message)) => {
                    last = message;
                    if !retryable {
                        break;
                    }
                }
            }
        }
        Err(RetrievalError::Embedder(last))
    }
}
