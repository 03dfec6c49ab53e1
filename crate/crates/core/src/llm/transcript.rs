use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LlmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Live,
    Mock,
    Replay,
}

impl std::str::FromStr for BackendKind {
    type Err = LlmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "live" => Ok(BackendKind::Live),
            "mock" => Ok(BackendKind::Mock),
            "replay" => Ok(BackendKind::Replay),
            other => Err(LlmError::Config(format!("unknown backend `{other}` (live, mock or replay)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    pub total_tokens: Option<u64>,
}

/// One request/response exchange, stored verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub prompt_sha256: String,
    pub prompt: String,
    pub response: Option<String>,
    pub error: Option<String>,
    pub model: String,
    pub backend: BackendKind,
    #[serde(default)]
    pub strategy: Option<String>,
    /// Seconds since the Unix epoch.
    pub started_at: f64,
    pub elapsed_ms: f64,
    pub attempts: u32,
    #[serde(default)]
    pub usage: Option<Usage>,
}

pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Appends transcripts to a JSONL file; safe to share between threads.
#[derive(Debug)]
pub struct TranscriptRecorder {
    path: PathBuf,
    file: Mutex<File>,
}

impl TranscriptRecorder {
    pub fn create(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| LlmError::Io(format!("{}: {e}", dir.display())))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| LlmError::Io(format!("{}: {e}", path.display())))?;
        Ok(Self {
            path,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn record(&self, transcript: &Transcript) -> Result<(), LlmError> {
        let mut line = serde_json::to_string(transcript).expect("transcripts serialize");
        line.push('\n');
        let mut file = self.file.lock().unwrap_or_else(|p| p.into_inner());
        file.write_all(line.as_bytes())
            .and_then(|_| file.flush())
            .map_err(|e| LlmError::Io(format!("{}: {e}", self.path.display())))
    }
}

pub fn read_transcripts(path: impl AsRef<Path>) -> Result<Vec<Transcript>, LlmError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| LlmError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| LlmError::Io(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| LlmError::Io(format!("{} line {}: {e}", path.display(), n + 1)))?,
        );
    }
    Ok(out)
}

/// Successful responses keyed by prompt hash; later entries win.
#[derive(Debug, Default, Clone)]
pub struct ReplayIndex {
    responses: HashMap<String, String>,
}

impl ReplayIndex {
    pub fn from_transcripts(transcripts: impl IntoIterator<Item = Transcript>) -> Self {
        let mut responses = HashMap::new();
        for t in transcripts {
            if let Some(r) = t.response {
                responses.insert(t.prompt_sha256, r);
            }
        }
        Self { responses }
    }

    /// Loads every `*.jsonl` file when `path` is a directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let mut files = Vec::new();
        if path.is_dir() {
            let entries = fs::read_dir(path).map_err(|e| LlmError::Io(format!("{}: {e}", path.display())))?;
            for entry in entries.flatten() {
                let p = entry.path();
                if p.extension().is_some_and(|e| e == "jsonl") {
                    files.push(p);
                }
            }
            files.sort();
        } else {
            files.push(path.to_path_buf());
        }
        let mut all = Vec::new();
        for f in files {
            all.extend(read_transcripts(f)?);
        }
        Ok(Self::from_transcripts(all))
    }

    pub fn get(&self, hash: &str) -> Option<&str> {
        self.responses.get(hash).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}
