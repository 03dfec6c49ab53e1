use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::config::LLMConfig;
use super::mock::MockOracle;
use super::transcript::{prompt_hash, BackendKind, ReplayIndex, Transcript, TranscriptRecorder, Usage};
use super::transport::{Sleeper, ThreadSleeper, Transport, UreqTransport};
use super::LlmError;
use crate::prompt::PromptBundle;

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Semaphore {
    available: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Self {
            available: Mutex::new(n),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.available.lock().unwrap_or_else(|p| p.into_inner());
        while *n == 0 {
            n = self.freed.wait(n).unwrap_or_else(|p| p.into_inner());
        }
        *n -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().unwrap_or_else(|p| p.into_inner()) += 1;
        self.0.freed.notify_one();
    }
}

enum Backend {
    Live { api_key: String },
    Mock(MockOracle),
    Replay(ReplayIndex),
}

/// Reply text plus the exchange record.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub transcript: Transcript,
}

/// Chat-completions client. Shareable across threads.
pub struct LlmClient {
    config: LLMConfig,
    backend: Backend,
    transport: Arc<dyn Transport>,
    sleeper: Arc<dyn Sleeper>,
    recorder: Option<Arc<TranscriptRecorder>>,
    permits: Semaphore,
}

impl LlmClient {
    /// Live client; the API key is read from `config.api_key_env`.
    pub fn live(config: LLMConfig) -> Result<Self, LlmError> {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| LlmError::Config(format!("environment variable {} is not set", config.api_key_env)))?;
        Self::with_backend(config, Backend::Live { api_key })
    }

    /// Live client with an explicit key (never read from the environment).
    pub fn live_with_key(config: LLMConfig, api_key: impl Into<String>) -> Result<Self, LlmError> {
        Self::with_backend(config, Backend::Live { api_key: api_key.into() })
    }

    pub fn mock(config: LLMConfig, oracle: MockOracle) -> Result<Self, LlmError> {
        Self::with_backend(config, Backend::Mock(oracle))
    }

    pub fn replay(config: LLMConfig, index: ReplayIndex) -> Result<Self, LlmError> {
        Self::with_backend(config, Backend::Replay(index))
    }

    fn with_backend(config: LLMConfig, backend: Backend) -> Result<Self, LlmError> {
        config.validate()?;
        Ok(Self {
            permits: Semaphore::new(config.max_inflight),
            config,
            backend,
            transport: Arc::new(UreqTransport),
            sleeper: Arc::new(ThreadSleeper),
            recorder: None,
        })
    }

    pub fn with_transport(mut self, transport: Arc<dyn Transport>) -> Self {
        self.transport = transport;
        self
    }

    pub fn with_sleeper(mut self, sleeper: Arc<dyn Sleeper>) -> Self {
        self.sleeper = sleeper;
        self
    }

    pub fn with_recorder(mut self, recorder: Arc<TranscriptRecorder>) -> Self {
        self.recorder = Some(recorder);
        self
    }

    pub fn config(&self) -> &LLMConfig {
        &self.config
    }

    pub fn backend_kind(&self) -> BackendKind {
        match self.backend {
            Backend::Live { .. } => BackendKind::Live,
            Backend::Mock(_) => BackendKind::Mock,
            Backend::Replay(_) => BackendKind::Replay,
        }
    }

    pub fn complete(&self, prompt: &PromptBundle) -> Result<Completion, LlmError> {
        self.complete_text(&prompt.rendered, Some(prompt.strategy.label()))
    }

    /// Sends raw prompt text. A transcript is recorded whether or not the
    /// call succeeds.
    pub fn complete_text(&self, prompt: &str, strategy: Option<&str>) -> Result<Completion, LlmError> {
        let _permit = self.permits.acquire();
        let started_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
        let clock = Instant::now();
        let hash = prompt_hash(prompt);
        let mut attempts = 0;
        let mut usage = None;
        let outcome = match &self.backend {
            Backend::Mock(oracle) => {
                attempts = 1;
                oracle.respond(prompt)
            }
            Backend::Replay(index) => {
                attempts = 1;
                index.get(&hash).map(str::to_owned).ok_or_else(|| LlmError::ReplayMiss(hash.clone()))
            }
            Backend::Live { api_key } => self.send_live(prompt, api_key, &hash, &mut attempts, &mut usage),
        };
        let transcript = Transcript {
            prompt_sha256: hash,
            prompt: prompt.to_owned(),
            response: outcome.as_ref().ok().cloned(),
            error: outcome.as_ref().err().map(ToString::to_string),
            model: self.config.model.clone(),
            backend: self.backend_kind(),
            strategy: strategy.map(str::to_owned),
            started_at,
            elapsed_ms: clock.elapsed().as_secs_f64() * 1e3,
            attempts,
            usage,
        };
        if let Some(recorder) = &self.recorder {
            recorder.record(&transcript)?;
        }
        outcome.map(|text| Completion { text, transcript })
    }

    /// Delay before retry number `retry` (1-based).
    fn backoff(&self, hash: &str, retry: u32) -> Duration {
        let base = self.config.backoff_base_s * 2f64.powi(retry as i32 - 1);
        let seed = u64::from_str_radix(&hash[..16], 16).unwrap_or(0) ^ u64::from(retry);
        let jitter = ChaCha8Rng::seed_from_u64(seed).random_range(0.0..=1.0) * self.config.jitter;
        Duration::from_secs_f64(base * (1.0 + jitter))
    }

    fn send_live(
        &self,
        prompt: &str,
        api_key: &str,
        hash: &str,
        attempts: &mut u32,
        usage: &mut Option<Usage>,
    ) -> Result<String, LlmError> {
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        })
        .to_string();
        let headers = vec![
            ("Content-Type".to_owned(), "application/json".to_owned()),
            ("Authorization".to_owned(), format!("Bearer {api_key}")),
        ];
        let timeout = Duration::from_secs_f64(self.config.timeout_s);
        loop {
            *attempts += 1;
            let last = match self.transport.post(&self.config.base_url, &headers, &body, timeout) {
                Ok(resp) if (200..300).contains(&resp.status) => {
                    let (text, u) = extract_content(&resp.body)?;
                    *usage = u;
                    return Ok(text);
                }
                Ok(resp) if resp.status == 429 || resp.status >= 500 => {
                    format!("HTTP {}: {}", resp.status, truncate(&resp.body))
                }
                Ok(resp) => {
                    return Err(LlmError::Request {
                        status: resp.status,
                        body: truncate(&resp.body),
                    })
                }
                Err(e) => e,
            };
            let retry = *attempts;
            if retry > self.config.max_retries {
                return Err(LlmError::Transport {
                    attempts: *attempts,
                    last,
                });
            }
            self.sleeper.sleep(self.backoff(hash, retry));
        }
    }
}

fn truncate(s: &str) -> String {
    const MAX: usize = 2000;
    match s.char_indices().nth(MAX) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_owned(),
    }
}

/// `choices[0].message.content` and the usage block of a chat-completions reply.
fn extract_content(body: &str) -> Result<(String, Option<Usage>), LlmError> {
    let v: Value = serde_json::from_str(body).map_err(|e| LlmError::BadResponse(e.to_string()))?;
    let text = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| LlmError::BadResponse("no choices[0].message.content".into()))?
        .to_owned();
    let usage = v.get("usage").map(|u| Usage {
        prompt_tokens: u.get("prompt_tokens").and_then(Value::as_u64),
        completion_tokens: u.get("completion_tokens").and_then(Value::as_u64),
        total_tokens: u.get("total_tokens").and_then(Value::as_u64),
    });
    Ok((text, usage))
}
