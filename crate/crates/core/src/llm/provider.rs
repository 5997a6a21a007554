//! Chat-completion providers: live HTTP, replay from transcripts, recording,
//! and closure-backed providers for tests.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{StageConfig, StageConfigError};
use crate::task::sha256_hex;

pub const API_KEY_ENV: &str = "ARCFORGE_API_KEY";
pub const API_BASE_ENV: &str = "ARCFORGE_API_BASE";
pub const DEFAULT_API_BASE: &str = "https://api.openai.com/v1";

/// An image sent alongside the user message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attachment {
    pub media_type: String,
    pub data: Vec<u8>,
}

impl Attachment {
    pub fn png(data: Vec<u8>) -> Self {
        Attachment { media_type: "image/png".into(), data }
    }

    pub fn digest(&self) -> String {
        sha256_hex(&self.data)
    }

    pub fn data_url(&self) -> String {
        format!("data:{};base64,{}", self.media_type, base64::engine::general_purpose::STANDARD.encode(&self.data))
    }
}

/// SHA-256 over the length-prefixed stage name, system text, user text and
/// attachment digests.
pub fn request_digest(stage: &str, system: &str, user: &str, attachments: &[Attachment]) -> String {
    let mut buf = Vec::new();
    let mut field = |bytes: &[u8]| {
        buf.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
        buf.extend_from_slice(bytes);
    };
    field(stage.as_bytes());
    field(system.as_bytes());
    field(user.as_bytes());
    for a in attachments {
        field(a.digest().as_bytes());
    }
    sha256_hex(&buf)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest<'a> {
    pub config: &'a StageConfig,
    pub system: &'a str,
    pub user: &'a str,
    pub attachments: &'a [Attachment],
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatReply {
    pub text: String,
    pub usage: Usage,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("rate limited")]
    RateLimited,
    #[error("server error (HTTP {status})")]
    Server { status: u16 },
    #[error("request rejected (HTTP {status}): {body}")]
    Http { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("no replay transcript for request {digest}")]
    ReplayMiss { digest: String },
    #[error("transcript {path}: {message}")]
    Transcript { path: String, message: String },
    #[error("giving up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: Box<GatewayError> },
    #[error(transparent)]
    Config(#[from] StageConfigError),
}

impl GatewayError {
    /// Transport faults, rate limits and server errors are worth retrying;
    /// everything else would fail the same way again.
    pub fn is_retryable(&self) -> bool {
        matches!(self, GatewayError::Transport(_) | GatewayError::RateLimited | GatewayError::Server { .. })
    }
}

pub trait ChatProvider: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, request: &ChatRequest<'_>) -> Result<ChatReply, GatewayError>;
}

/// One recorded request/response pair, stored as `{digest}.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub digest: String,
    pub stage: String,
    pub model_id: String,
    pub system: String,
    pub user: String,
    #[serde(default)]
    pub attachments: Vec<String>,
    pub response: String,
    #[serde(default)]
    pub usage: Usage,
}

impl Transcript {
    pub fn path_in(dir: &Path, digest: &str) -> PathBuf {
        dir.join(format!("{digest}.json"))
    }
}

/// Answers from transcripts keyed by request digest. Read-only, so it is
/// shared across workers without locking.
#[derive(Debug, Clone)]
pub struct ReplayProvider {
    dir: PathBuf,
}

impl ReplayProvider {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayProvider { dir: dir.into() }
    }
}

impl ChatProvider for ReplayProvider {
    fn name(&self) -> &str {
        "replay"
    }

    fn complete(&self, request: &ChatRequest<'_>) -> Result<ChatReply, GatewayError> {
        let path = Transcript::path_in(&self.dir, &request.digest);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(GatewayError::ReplayMiss { digest: request.digest.clone() });
            }
            Err(e) => {
                return Err(GatewayError::Transcript { path: path.display().to_string(), message: e.to_string() })
            }
        };
        let t: Transcript = serde_json::from_slice(&bytes)
            .map_err(|e| GatewayError::Transcript { path: path.display().to_string(), message: e.to_string() })?;
        if t.digest != request.digest {
            return Err(GatewayError::Transcript {
                path: path.display().to_string(),
                message: format!("digest field {} does not match file name", t.digest),
            });
        }
        Ok(ChatReply { text: t.response, usage: t.usage })
    }
}

/// Forwards to another provider and writes every successful exchange as a
/// transcript the replay provider can serve.
pub struct RecordingProvider {
    inner: Arc<dyn ChatProvider>,
    dir: PathBuf,
}

impl RecordingProvider {
    pub fn new(inner: Arc<dyn ChatProvider>, dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(RecordingProvider { inner, dir })
    }
}

impl ChatProvider for RecordingProvider {
    fn name(&self) -> &str {
        "recording"
    }

    fn complete(&self, request: &ChatRequest<'_>) -> Result<ChatReply, GatewayError> {
        let reply = self.inner.complete(request)?;
        let t = Transcript {
            digest: request.digest.clone(),
            stage: request.config.stage.as_str().into(),
            model_id: request.config.model_id.clone(),
            system: request.system.into(),
            user: request.user.into(),
            attachments: request.attachments.iter().map(Attachment::digest).collect(),
            response: reply.text.clone(),
            usage: reply.usage,
        };
        let path = Transcript::path_in(&self.dir, &request.digest);
        let mut bytes = serde_json::to_vec_pretty(&t).expect("plain data");
        bytes.push(b'\n');
        fs::write(&path, bytes)
            .map_err(|e| GatewayError::Transcript { path: path.display().to_string(), message: e.to_string() })?;
        Ok(reply)
    }
}

/// A provider backed by a closure; used for scripted tests and for
/// authoring replay fixtures.
pub struct FnProvider<F> {
    f: F,
}

impl<F> FnProvider<F>
where
    F: Fn(&ChatRequest<'_>) -> Result<String, GatewayError> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        FnProvider { f }
    }
}

impl<F> ChatProvider for FnProvider<F>
where
    F: Fn(&ChatRequest<'_>) -> Result<String, GatewayError> + Send + Sync,
{
    fn name(&self) -> &str {
        "scripted"
    }

    fn complete(&self, request: &ChatRequest<'_>) -> Result<ChatReply, GatewayError> {
        (self.f)(request).map(|text| ChatReply { text, usage: Usage::default() })
    }
}

/// An OpenAI-compatible `/chat/completions` endpoint.
pub struct OpenAiProvider {
    base: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl OpenAiProvider {
    pub fn new(base: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        OpenAiProvider { base: base.into().trim_end_matches('/').to_string(), api_key, agent }
    }

    /// Reads the endpoint and key from `ARCFORGE_API_BASE` and
    /// `ARCFORGE_API_KEY`. A missing key is reported on first use.
    pub fn from_env(timeout: Duration) -> Self {
        let base = std::env::var(API_BASE_ENV).unwrap_or_else(|_| DEFAULT_API_BASE.to_string());
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.trim().is_empty());
        OpenAiProvider::new(base, key, timeout)
    }

    pub fn request_body(request: &ChatRequest<'_>) -> Value {
        let cfg = request.config;
        let user_content = if request.attachments.is_empty() {
            Value::String(request.user.to_string())
        } else {
            let mut parts = vec![json!({"type": "text", "text": request.user})];
            parts.extend(
                request.attachments.iter().map(|a| json!({"type": "image_url", "image_url": {"url": a.data_url()}})),
            );
            Value::Array(parts)
        };
        let mut body = json!({
            "model": cfg.model_id,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": user_content},
            ],
            "max_completion_tokens": cfg.max_tokens,
            "top_p": cfg.top_p,
        });
        if let Some(t) = cfg.temperature {
            body["temperature"] = json!(t);
        }
        body
    }
}

impl ChatProvider for OpenAiProvider {
    fn name(&self) -> &str {
        "openai"
    }

    fn complete(&self, request: &ChatRequest<'_>) -> Result<ChatReply, GatewayError> {
        let Some(key) = &self.api_key else {
            return Err(GatewayError::Auth(format!("{API_KEY_ENV} is not set")));
        };
        let url = format!("{}/chat/completions", self.base);
        let mut resp = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(Self::request_body(request))
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Err(GatewayError::Auth(format!("HTTP {status}"))),
            429 => return Err(GatewayError::RateLimited),
            500..=599 => return Err(GatewayError::Server { status }),
            _ => {
                let body = resp.body_mut().read_to_string().unwrap_or_default();
                return Err(GatewayError::Http { status, body });
            }
        }
        let v: Value = resp.body_mut().read_json().map_err(|e| GatewayError::Malformed(e.to_string()))?;
        let text = v
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| GatewayError::Malformed("missing choices[0].message.content".into()))?;
        let usage = Usage {
            prompt_tokens: v.pointer("/usage/prompt_tokens").and_then(Value::as_u64).unwrap_or(0),
            completion_tokens: v.pointer("/usage/completion_tokens").and_then(Value::as_u64).unwrap_or(0),
        };
        Ok(ChatReply { text: text.to_string(), usage })
    }
}
