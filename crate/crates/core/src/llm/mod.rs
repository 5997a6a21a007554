//! Provider-agnostic chat completions with per-stage parameters, retries,
//! an in-flight limiter and exchange logging.
//!
//! Tests and fixture runs use [`ReplayProvider`], which answers from
//! `{digest}.json` transcripts keyed by [`request_digest`], so replies do
//! not depend on call order.

mod config;
mod extract;
mod provider;

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

pub use config::{Stage, StageConfig, StageConfigError};
pub use extract::{extract_json, find_json_object, validate, ExtractError, ReplySchema};
pub use provider::{
    request_digest, Attachment, ChatProvider, ChatReply, ChatRequest, FnProvider, GatewayError,
    OpenAiProvider, RecordingProvider, ReplayProvider, Transcript, Usage, API_BASE_ENV, API_KEY_ENV,
    DEFAULT_API_BASE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 4, base_delay: Duration::from_millis(500) }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        RetryPolicy { max_attempts: 1, base_delay: Duration::ZERO }
    }

    pub(crate) fn delay(&self, attempt: u32) -> Duration {
        self.base_delay.saturating_mul(1u32 << attempt.min(16))
    }
}

/// Counting semaphore capping concurrent provider calls.
struct Limiter {
    max: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(max: usize) -> Self {
        Limiter { max: max.max(1), in_flight: Mutex::new(0), freed: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().expect("limiter lock poisoned");
        while *n >= self.max {
            n = self.freed.wait(n).expect("limiter lock poisoned");
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().expect("limiter lock poisoned") -= 1;
        self.0.freed.notify_one();
    }
}

/// A completed call, kept for run manifests and debugging.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatExchange {
    pub stage: Stage,
    pub system: String,
    pub user: String,
    pub attachments: Vec<String>,
    pub response: String,
    pub usage: Usage,
    pub request_digest: String,
}

/// Shareable client. Schema errors in replies are not retried here; the
/// pipeline decides whether to re-prompt.
pub struct Gateway {
    provider: Arc<dyn ChatProvider>,
    retry: RetryPolicy,
    limiter: Limiter,
    exchanges: Mutex<Vec<ChatExchange>>,
}

impl Gateway {
    pub fn new(provider: Arc<dyn ChatProvider>) -> Self {
        Gateway::with_limits(provider, RetryPolicy::default(), 8)
    }

    pub fn with_limits(provider: Arc<dyn ChatProvider>, retry: RetryPolicy, max_in_flight: usize) -> Self {
        Gateway { provider, retry, limiter: Limiter::new(max_in_flight), exchanges: Mutex::new(Vec::new()) }
    }

    pub fn replay(dir: impl Into<std::path::PathBuf>) -> Self {
        Gateway::with_limits(Arc::new(ReplayProvider::new(dir)), RetryPolicy::none(), 8)
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    pub fn chat(
        &self,
        config: &StageConfig,
        system: &str,
        user: &str,
        attachments: &[Attachment],
    ) -> Result<String, GatewayError> {
        config.check()?;
        let digest = request_digest(config.stage.as_str(), system, user, attachments);
        let request = ChatRequest { config, system, user, attachments, digest };
        let mut attempt = 0;
        let reply = loop {
            let result = {
                let _permit = self.limiter.acquire();
                self.provider.complete(&request)
            };
            match result {
                Ok(reply) => break reply,
                Err(e) if e.is_retryable() && attempt + 1 < self.retry.max_attempts => {
                    log::warn!("{} call failed ({e}); retrying", config.stage);
                    std::thread::sleep(self.retry.delay(attempt));
                    attempt += 1;
                }
                Err(e) if e.is_retryable() && self.retry.max_attempts > 1 => {
                    return Err(GatewayError::Exhausted { attempts: attempt + 1, last: Box::new(e) });
                }
                Err(e) => return Err(e),
            }
        };
        self.exchanges.lock().expect("exchange log poisoned").push(ChatExchange {
            stage: config.stage,
            system: system.to_string(),
            user: user.to_string(),
            attachments: attachments.iter().map(Attachment::digest).collect(),
            response: reply.text.clone(),
            usage: reply.usage,
            request_digest: request.digest,
        });
        Ok(reply.text)
    }

    pub fn exchanges(&self) -> Vec<ChatExchange> {
        self.exchanges.lock().expect("exchange log poisoned").clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn cfg() -> StageConfig {
        StageConfig::default_for(Stage::Step2)
    }

    #[test]
    fn digest_is_deterministic_and_field_sensitive() {
        let a = request_digest("step2", "sys", "user", &[]);
        assert_eq!(a, request_digest("step2", "sys", "user", &[]));
        assert_ne!(a, request_digest("step2", "sysu", "ser", &[]));
        assert_ne!(a, request_digest("step2", "sys", "user", &[Attachment::png(vec![1])]));
    }

    #[test]
    fn transport_errors_are_retried_then_exhausted() {
        let calls = Arc::new(AtomicUsize::new(0));
        let c = calls.clone();
        let provider = FnProvider::new(move |_| {
            if c.fetch_add(1, Ordering::SeqCst) < 2 {
                Err(GatewayError::Transport("reset".into()))
            } else {
                Ok("fine".into())
            }
        });
        let retry = RetryPolicy { max_attempts: 3, base_delay: Duration::ZERO };
        let gw = Gateway::with_limits(Arc::new(provider), retry, 1);
        assert_eq!(gw.chat(&cfg(), "s", "u", &[]).unwrap(), "fine");
        assert_eq!(calls.load(Ordering::SeqCst), 3);

        let gw = Gateway::with_limits(
            Arc::new(FnProvider::new(|_| Err(GatewayError::RateLimited))),
            RetryPolicy { max_attempts: 2, base_delay: Duration::ZERO },
            1,
        );
        assert!(matches!(gw.chat(&cfg(), "s", "u", &[]), Err(GatewayError::Exhausted { attempts: 2, .. })));
    }

    #[test]
    fn non_retryable_errors_fail_immediately() {
        let calls = Arc::new(AtomicUsize::new(0));
        let c = calls.clone();
        let provider = FnProvider::new(move |_| {
            c.fetch_add(1, Ordering::SeqCst);
            Err(GatewayError::Http { status: 400, body: "bad".into() })
        });
        let gw = Gateway::with_limits(Arc::new(provider), RetryPolicy { max_attempts: 5, base_delay: Duration::ZERO }, 1);
        assert!(gw.chat(&cfg(), "s", "u", &[]).is_err());
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn live_provider_without_key_fails_before_network() {
        // Port 9 on localhost would refuse; an auth error proves no request was made.
        let p = OpenAiProvider::new("http://127.0.0.1:9", None, Duration::from_secs(1));
        let gw = Gateway::with_limits(Arc::new(p), RetryPolicy::none(), 1);
        assert!(matches!(gw.chat(&cfg(), "s", "u", &[]), Err(GatewayError::Auth(_))));
    }

    #[test]
    fn limiter_caps_in_flight_calls() {
        let active = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let (a, p) = (active.clone(), peak.clone());
        let provider = FnProvider::new(move |_| {
            let now = a.fetch_add(1, Ordering::SeqCst) + 1;
            p.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(5));
            a.fetch_sub(1, Ordering::SeqCst);
            Ok("x".into())
        });
        let gw = Arc::new(Gateway::with_limits(Arc::new(provider), RetryPolicy::none(), 2));
        let handles: Vec<_> = (0..8)
            .map(|i| {
                let gw = gw.clone();
                std::thread::spawn(move || gw.chat(&cfg(), "s", &i.to_string(), &[]).unwrap())
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2);
        assert_eq!(gw.exchanges().len(), 8);
    }

    #[test]
    fn replay_hit_and_miss() {
        let dir = tempfile::tempdir().unwrap();
        let recorder = RecordingProvider::new(Arc::new(FnProvider::new(|_| Ok("recorded".into()))), dir.path()).unwrap();
        Gateway::new(Arc::new(recorder)).chat(&cfg(), "s", "u", &[]).unwrap();
        let replay = Gateway::replay(dir.path());
        assert_eq!(replay.chat(&cfg(), "s", "u", &[]).unwrap(), "recorded");
        let miss = replay.chat(&cfg(), "s", "other", &[]).unwrap_err();
        let digest = request_digest("step2", "s", "other", &[]);
        assert_eq!(miss, GatewayError::ReplayMiss { digest: digest.clone() });
        assert!(miss.to_string().contains(&digest));
    }
}
