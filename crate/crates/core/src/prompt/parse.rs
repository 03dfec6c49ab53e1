//! Lenient extraction of release tables (and design answers) from model output.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::PromptError;
use crate::profile::{DissolutionProfile, ProfilePoint};
use crate::record::{parse_number, FormulationInput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    Hours,
    Minutes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClampedValue {
    /// Hours.
    pub time: f64,
    pub original: f64,
    pub clamped: f64,
}

/// Everything the parser had to repair or assume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseReport {
    pub time_unit: TimeUnit,
    pub time_column: String,
    pub value_column: String,
    /// Byte offset of the table in the response.
    pub offset: usize,
    pub inside_code_fence: bool,
    pub surrounding_text: bool,
    pub reordered: bool,
    pub clamped: Vec<ClampedValue>,
    pub warnings: Vec<String>,
}

impl ParseReport {
    pub fn repaired(&self) -> bool {
        self.reordered || !self.clamped.is_empty() || self.time_unit == TimeUnit::Minutes
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedProfile {
    pub profile: DissolutionProfile,
    pub report: ParseReport,
}

/// Every JSON object starting at a `{`, in order of position, with its byte span.
fn json_objects(text: &str) -> impl Iterator<Item = (usize, usize, Value)> + '_ {
    text.char_indices().filter(|&(_, c)| c == '{').filter_map(move |(i, _)| {
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(v @ Value::Object(_))) => Some((i, i + stream.byte_offset(), v)),
            _ => None,
        }
    })
}

fn find_table(value: &Value) -> Option<&Map<String, Value>> {
    match value {
        Value::Object(m) => {
            if m.contains_key("columns") && m.contains_key("data") {
                return Some(m);
            }
            m.values().find_map(find_table)
        }
        Value::Array(items) => items.iter().find_map(find_table),
        _ => None,
    }
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => parse_number(s.trim().trim_end_matches('%')),
        _ => None,
    }
}

fn inside_fence(text: &str, offset: usize) -> bool {
    text[..offset].matches("```").count() % 2 == 1
}

/// Extracts the first `{"columns": [...], "data": [...]}` table in `text`.
pub fn parse_profile_response(text: &str) -> Result<ParsedProfile, PromptError> {
    let (offset, end, value) = json_objects(text)
        .find(|(_, _, v)| find_table(v).is_some())
        .ok_or(PromptError::NoTable)?;
    let table = find_table(&value).ok_or(PromptError::NoTable)?;

    let columns: Vec<String> = match table.get("columns") {
        Some(Value::Array(cols)) => cols.iter().map(|c| c.as_str().unwrap_or_default().to_owned()).collect(),
        _ => Vec::new(),
    };
    let time_index = columns
        .iter()
        .position(|c| c.to_ascii_lowercase().contains("time"))
        .unwrap_or(0);
    let value_index = if time_index == 0 { 1 } else { 0 };
    let time_column = columns.get(time_index).cloned().unwrap_or_default();
    let value_column = columns.get(value_index).cloned().unwrap_or_default();
    let mut warnings = Vec::new();
    if columns.len() < 2 {
        warnings.push("fewer than two column names; assuming [time, released]".to_owned());
    }
    let lower = time_column.to_ascii_lowercase();
    let time_unit = if lower.contains("min") {
        TimeUnit::Minutes
    } else {
        if !(lower.contains("hr") || lower.contains("hour")) {
            warnings.push(format!("time column `{time_column}` has no recognised unit; assuming hours"));
        }
        TimeUnit::Hours
    };

    let rows = match table.get("data") {
        Some(Value::Array(rows)) => rows,
        _ => return Err(PromptError::NoTable),
    };
    if rows.is_empty() {
        return Err(PromptError::EmptyProfile);
    }
    let mut points = Vec::with_capacity(rows.len());
    let mut clamped = Vec::new();
    for (index, row) in rows.iter().enumerate() {
        let cells = row.as_array().ok_or(PromptError::BadRow { index })?;
        let (Some(t), Some(r)) = (
            cells.get(time_index).and_then(as_number),
            cells.get(value_index).and_then(as_number),
        ) else {
            return Err(PromptError::BadRow { index });
        };
        if !t.is_finite() || !r.is_finite() {
            return Err(PromptError::BadRow { index });
        }
        let time = match time_unit {
            TimeUnit::Hours => t,
            TimeUnit::Minutes => t / 60.0,
        };
        let released = r.clamp(0.0, 100.0);
        if released != r {
            clamped.push(ClampedValue {
                time,
                original: r,
                clamped: released,
            });
        }
        points.push(ProfilePoint::new(time, released));
    }
    let reordered = points.windows(2).any(|w| w[1].time < w[0].time);
    let profile = DissolutionProfile::from_unordered(points).map_err(|e| match e {
        crate::profile::ProfileError::DuplicateTime { time } => PromptError::DuplicateTime { time },
        other => PromptError::Profile(other),
    })?;
    if !clamped.is_empty() {
        warnings.push(format!("{} released value(s) clamped to [0, 100]", clamped.len()));
    }
    let outside = format!("{}{}", &text[..offset], &text[end..]).replace("```json", "").replace("```", "");
    let surrounding_text = !outside.trim().is_empty();
    Ok(ParsedProfile {
        profile,
        report: ParseReport {
            time_unit,
            time_column,
            value_column,
            offset,
            inside_code_fence: inside_fence(text, offset),
            surrounding_text,
            reordered,
            clamped,
            warnings,
        },
    })
}

/// Reads a design answer: the first JSON object (or `"key" : value` block)
/// that carries all eight formulation fields.
pub fn parse_design_response(text: &str) -> Result<FormulationInput, PromptError> {
    let mut last_error = None;
    for (_, _, value) in json_objects(text) {
        if let Value::Object(map) = &value {
            match FormulationInput::from_json_map(map) {
                Ok(input) => return Ok(input),
                Err(e) => last_error = Some(e),
            }
        }
    }
    match FormulationInput::from_prompt_block(text) {
        Ok(input) => Ok(input),
        Err(e) => Err(PromptError::Record(last_error.unwrap_or(e))),
    }
}
