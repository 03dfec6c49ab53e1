use std::path::{Path, PathBuf};

use formu_core::llm::LLMConfig;
use formu_core::DissolutionConditions;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Contents of the JSON file given with `--config`. Every field is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AppConfig {
    pub llm: LLMConfig,
    pub conditions: DissolutionConditions,
    /// JSONL record store. Defaults to `<output_dir>/store.jsonl`.
    pub store_path: Option<PathBuf>,
    /// Record set used for few-shot examples and as the default benchmark dataset.
    pub fixtures_path: PathBuf,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            llm: LLMConfig::default(),
            conditions: DissolutionConditions::default(),
            store_path: None,
            fixtures_path: PathBuf::from("fixtures/exemplar_records.json"),
            output_dir: PathBuf::from("formu-runs"),
            seed: 0,
        }
    }
}

impl AppConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::read(path, e))
    }

    pub fn store_path(&self) -> PathBuf {
        self.store_path
            .clone()
            .unwrap_or_else(|| self.output_dir.join("store.jsonl"))
    }

    pub fn validate(&self) -> CliResult<()> {
        self.llm.validate().map_err(CliError::usage)?;
        self.conditions.validate().map_err(CliError::usage)
    }
}
