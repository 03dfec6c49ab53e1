use serde::{Deserialize, Serialize};

use super::LlmError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LLMConfig {
    /// Full chat-completions endpoint URL.
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Per-request timeout, seconds.
    pub timeout_s: f64,
    pub max_retries: u32,
    pub max_inflight: usize,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    /// First retry delay, seconds; doubles on every retry.
    pub backoff_base_s: f64,
    /// Maximum extra delay as a fraction of the current backoff.
    pub jitter: f64,
}

impl Default for LLMConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.deepseek.com/v1/chat/completions".into(),
            model: "deepseek-r1".into(),
            temperature: 0.0,
            max_tokens: 4096,
            timeout_s: 300.0,
            max_retries: 3,
            max_inflight: 4,
            api_key_env: "FORMU_API_KEY".into(),
            backoff_base_s: 1.0,
            jitter: 0.25,
        }
    }
}

impl LLMConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        let bad = |m: String| Err(LlmError::Config(m));
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return bad(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if self.max_inflight == 0 {
            return bad("max_inflight must be >= 1".into());
        }
        if !(self.timeout_s.is_finite() && self.timeout_s > 0.0) {
            return bad(format!("timeout must be > 0 s, got {}", self.timeout_s));
        }
        if !(self.backoff_base_s.is_finite() && self.backoff_base_s >= 0.0) {
            return bad("backoff base must be >= 0".into());
        }
        if !(self.jitter.is_finite() && self.jitter >= 0.0) {
            return bad("jitter must be >= 0".into());
        }
        if self.model.trim().is_empty() {
            return bad("model must not be empty".into());
        }
        Ok(())
    }
}
