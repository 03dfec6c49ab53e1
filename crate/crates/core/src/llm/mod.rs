//! Chat-completions client with live, mock and replay backends.
//!
//! The mock backend answers prediction prompts by running the simulator on
//! the prompt's input block, so the whole pipeline can be exercised offline.
//! The replay backend serves responses recorded in transcript files, keyed
//! by the SHA-256 of the prompt text.

mod client;
mod config;
mod mock;
mod transcript;
mod transport;

use thiserror::Error;

pub use client::{Completion, LlmClient};
pub use config::LLMConfig;
pub use mock::{MockOracle, MOCK_BINS, MOCK_GEO_SIGMA};
pub use transcript::{prompt_hash, read_transcripts, BackendKind, ReplayIndex, Transcript, TranscriptRecorder, Usage};
pub use transport::{HttpResponse, Sleeper, ThreadSleeper, Transport, UreqTransport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("transport failed after {attempts} attempt(s): {last}")]
    Transport { attempts: u32, last: String },
    #[error("request rejected with HTTP {status}: {body}")]
    Request { status: u16, body: String },
    #[error("unexpected response body: {0}")]
    BadResponse(String),
    #[error("mock backend could not read the prompt: {0}")]
    MockParse(String),
    #[error("mock backend failed: {0}")]
    Mock(String),
    #[error("no recorded response for prompt {0}")]
    ReplayMiss(String),
    #[error("transcript i/o: {0}")]
    Io(String),
}
