use std::fs;
use std::path::{Path, PathBuf};

use formu_core::profile::from_csv;
use formu_core::record::{parse_number, profile_from_json_value};
use formu_core::{records_from_json, DissolutionProfile, Feature, FormulationInput, FormulationRecord};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::read(path, e))
}

pub fn read_json(path: &Path) -> CliResult<Value> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::read(path, e))
}

/// Feature values found in an input file, canonical or prompt-style keys. A
/// whole record (with an `Input` object) is accepted too.
pub fn read_input_values(path: &Path) -> CliResult<[Option<f64>; 8]> {
    let value = read_json(path)?;
    let map = value
        .get("Input")
        .or_else(|| value.get("input"))
        .unwrap_or(&value)
        .as_object()
        .ok_or_else(|| CliError::read(path, "expected a JSON object"))?;
    let mut found = [None; 8];
    for (key, v) in map {
        let Some(feature) = Feature::from_key(key) else { continue };
        let number = match v {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => parse_number(s),
            _ => None,
        }
        .ok_or_else(|| CliError::read(path, format!("field `{}` is not a number", feature.canonical_key())))?;
        found[feature as usize] = Some(number);
    }
    Ok(found)
}

/// Profile from a `time_hr,released_pct` CSV, a JSON `[[t, r], ...]` list,
/// a `{"columns", "data"}` table, or a record carrying one of those.
pub fn read_profile(path: &Path) -> CliResult<DissolutionProfile> {
    let text = read_text(path)?;
    let trimmed = text.trim_start();
    if !(trimmed.starts_with('{') || trimmed.starts_with('[')) {
        return from_csv(&text).map_err(|e| CliError::read(path, e));
    }
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::read(path, e))?;
    let table = ["profile", "Output", "output"]
        .iter()
        .find_map(|k| value.get(k))
        .unwrap_or(&value);
    profile_from_json_value(table).map_err(|e| CliError::read(path, e))
}

pub fn read_records(path: &Path) -> CliResult<Vec<FormulationRecord>> {
    records_from_json(&read_text(path)?).map_err(|e| CliError::read(path, e))
}

pub fn input_to_json(input: &FormulationInput) -> String {
    serde_json::to_string_pretty(input).expect("input serializes")
}

/// Output directory of one command invocation.
pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    /// `<output_dir>/<run_name>` or `<output_dir>/<command>-<UTC stamp>`.
    pub fn create(output_dir: &Path, command: &str, run_name: Option<&str>) -> CliResult<Self> {
        let base = match run_name {
            Some(name) => {
                if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
                    return Err(CliError::Usage(format!("invalid run name `{name}`")));
                }
                output_dir.join(name)
            }
            None => {
                let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
                let mut path = output_dir.join(format!("{command}-{stamp}"));
                let mut n = 2;
                while path.exists() {
                    path = output_dir.join(format!("{command}-{stamp}-{n}"));
                    n += 1;
                }
                path
            }
        };
        fs::create_dir_all(&base).map_err(|e| CliError::write(&base, e))?;
        Ok(Self { path: base })
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> CliResult<PathBuf> {
        let path = self.path.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::write(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| CliError::write(&path, e))?;
        Ok(path)
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }
}
