//! Formulation inputs and stored formulation records.
//!
//! Records are exchanged with canonical snake_case keys. Files written with
//! the verbose keys used inside prompts (`"Mean Particle Size, D50"`, ...) are
//! accepted through [`FormulationInput::from_json_map`].

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::dissolution::{
    psd_from_lognormal, DissolutionError, DrugSubstance, ParticleMorphology, SizeDistribution,
};
use crate::profile::{DissolutionProfile, ProfileError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecordError {
    #[error("missing required field `{0}`")]
    Missing(&'static str),
    #[error("field `{field}`: {message}")]
    InvalidValue { field: &'static str, message: String },
    #[error("record `{id}`: {source}")]
    Profile {
        id: String,
        #[source]
        source: ProfileError,
    },
    #[error("record is missing an id")]
    MissingId,
    #[error("expected a JSON object")]
    NotAnObject,
}

/// Numeric descriptors of a powder, as given to the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormulationInput {
    /// Mass-median particle size, µm.
    #[serde(rename = "d50_um")]
    pub d50: f64,
    pub aspect_ratio: f64,
    pub roundness: f64,
    /// mg/mL
    #[serde(rename = "solubility_mg_ml")]
    pub solubility: f64,
    /// m²/s
    #[serde(rename = "diffusivity_m2_s")]
    pub diffusivity: f64,
    /// g/mL
    #[serde(rename = "true_density_g_ml")]
    pub true_density: f64,
    /// Specific surface area, m²/g.
    #[serde(rename = "ssa_m2_g")]
    pub ssa: f64,
    /// Volume-based equivalent particle size, µm.
    #[serde(rename = "vol_eq_um")]
    pub vol_eq_size: f64,
}

/// The eight numeric features, in prompt order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    D50,
    AspectRatio,
    Roundness,
    Solubility,
    Diffusivity,
    TrueDensity,
    Ssa,
    VolEqSize,
}

impl Feature {
    pub const ALL: [Feature; 8] = [
        Feature::D50,
        Feature::AspectRatio,
        Feature::Roundness,
        Feature::Solubility,
        Feature::Diffusivity,
        Feature::TrueDensity,
        Feature::Ssa,
        Feature::VolEqSize,
    ];

    pub fn canonical_key(self) -> &'static str {
        match self {
            Feature::D50 => "d50_um",
            Feature::AspectRatio => "aspect_ratio",
            Feature::Roundness => "roundness",
            Feature::Solubility => "solubility_mg_ml",
            Feature::Diffusivity => "diffusivity_m2_s",
            Feature::TrueDensity => "true_density_g_ml",
            Feature::Ssa => "ssa_m2_g",
            Feature::VolEqSize => "vol_eq_um",
        }
    }

    /// Key as written in prompts.
    pub fn prompt_key(self) -> &'static str {
        match self {
            Feature::D50 => "Mean Particle Size, D50",
            Feature::AspectRatio => "Aspect ratio",
            Feature::Roundness => "Roundness",
            Feature::Solubility => "solubility of drug (mg/mL)",
            Feature::Diffusivity => "Diffusion coefficient of drug (m^2/s)",
            Feature::TrueDensity => "True Density of drug (g/mL)",
            Feature::Ssa => "Specific surface area (m^2/g)",
            Feature::VolEqSize => "volume-based equivalent particle size (micrometer)",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Feature::D50 | Feature::VolEqSize => "µm",
            Feature::AspectRatio | Feature::Roundness => "-",
            Feature::Solubility => "mg/mL",
            Feature::Diffusivity => "m²/s",
            Feature::TrueDensity => "g/mL",
            Feature::Ssa => "m²/g",
        }
    }

    /// Minimum number of decimals when rendered into a prompt.
    fn min_decimals(self) -> usize {
        match self {
            Feature::D50 => 0,
            Feature::AspectRatio | Feature::Roundness => 1,
            Feature::Solubility | Feature::Ssa | Feature::VolEqSize => 2,
            Feature::TrueDensity => 3,
            Feature::Diffusivity => 0,
        }
    }

    /// Accepts canonical keys and prompt keys (case and spacing insensitive).
    pub fn from_key(key: &str) -> Option<Feature> {
        let norm = normalize_key(key);
        Feature::ALL.into_iter().find(|f| {
            f.canonical_key() == key || normalize_key(f.prompt_key()) == norm || normalize_key(f.canonical_key()) == norm
        })
    }

    pub fn format_value(self, v: f64) -> String {
        match self {
            Feature::Diffusivity => format_power_of_ten(v),
            _ => format_min_decimals(v, self.min_decimals()),
        }
    }
}

fn normalize_key(key: &str) -> String {
    key.chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Shortest round-trip representation, padded with zeros to `min` decimals.
pub(crate) fn format_min_decimals(v: f64, min: usize) -> String {
    let s = format!("{v}");
    if s.contains('e') || s.contains("inf") || s.contains("NaN") {
        return s;
    }
    let decimals = s.split_once('.').map_or(0, |(_, d)| d.len());
    if decimals >= min {
        return s;
    }
    let mut out = s;
    if decimals == 0 {
        out.push('.');
    }
    out.extend(std::iter::repeat('0').take(min - decimals));
    out
}

/// `7.5e-10` → `7.5x 10^(-10)`.
pub(crate) fn format_power_of_ten(v: f64) -> String {
    let s = format!("{v:e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => format!("{mantissa}x 10^({exp})"),
        None => s,
    }
}

/// Parses plain numbers and the `7.5x 10^(-10)` notation used in prompts.
pub fn parse_number(text: &str) -> Option<f64> {
    let compact: String = text
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .replace('×', "x")
        .replace('X', "x")
        .replace('*', "x");
    if let Some((mantissa, rest)) = compact.split_once("x10^") {
        let exp = rest.trim_start_matches('(').trim_end_matches(')');
        mantissa.parse::<f64>().ok()?;
        let e: i32 = exp.parse().ok()?;
        // one decimal-to-binary conversion so 7.5x10^(-10) == 7.5e-10 exactly
        return format!("{mantissa}e{e}").parse().ok();
    }
    compact.parse().ok()
}

impl FormulationInput {
    pub fn get(&self, feature: Feature) -> f64 {
        match feature {
            Feature::D50 => self.d50,
            Feature::AspectRatio => self.aspect_ratio,
            Feature::Roundness => self.roundness,
            Feature::Solubility => self.solubility,
            Feature::Diffusivity => self.diffusivity,
            Feature::TrueDensity => self.true_density,
            Feature::Ssa => self.ssa,
            Feature::VolEqSize => self.vol_eq_size,
        }
    }

    pub fn set(&mut self, feature: Feature, value: f64) {
        let slot = match feature {
            Feature::D50 => &mut self.d50,
            Feature::AspectRatio => &mut self.aspect_ratio,
            Feature::Roundness => &mut self.roundness,
            Feature::Solubility => &mut self.solubility,
            Feature::Diffusivity => &mut self.diffusivity,
            Feature::TrueDensity => &mut self.true_density,
            Feature::Ssa => &mut self.ssa,
            Feature::VolEqSize => &mut self.vol_eq_size,
        };
        *slot = value;
    }

    pub fn from_features(values: impl Fn(Feature) -> f64) -> Self {
        let mut input = FormulationInput {
            d50: 0.0,
            aspect_ratio: 0.0,
            roundness: 0.0,
            solubility: 0.0,
            diffusivity: 0.0,
            true_density: 0.0,
            ssa: 0.0,
            vol_eq_size: 0.0,
        };
        for f in Feature::ALL {
            input.set(f, values(f));
        }
        input
    }

    pub fn validate(&self) -> Result<(), RecordError> {
        for f in Feature::ALL {
            let v = self.get(f);
            let ok = match f {
                Feature::AspectRatio => v.is_finite() && v >= 1.0,
                Feature::Roundness => v > 0.0 && v <= 1.0,
                _ => v.is_finite() && v > 0.0,
            };
            if !ok {
                return Err(RecordError::InvalidValue {
                    field: f.canonical_key(),
                    message: format!("out of range: {v}"),
                });
            }
        }
        Ok(())
    }

    /// Builds an input from a JSON object keyed by canonical or prompt keys.
    /// Values may be numbers or strings such as `"7.5x 10^(-10)"`.
    pub fn from_json_map(map: &Map<String, Value>) -> Result<Self, RecordError> {
        let mut found: [Option<f64>; 8] = [None; 8];
        for (key, value) in map {
            let Some(feature) = Feature::from_key(key) else { continue };
            let v = match value {
                Value::Number(n) => n.as_f64(),
                Value::String(s) => parse_number(s),
                _ => None,
            }
            .ok_or_else(|| RecordError::InvalidValue {
                field: feature.canonical_key(),
                message: format!("not a number: {value}"),
            })?;
            found[feature as usize] = Some(v);
        }
        for f in Feature::ALL {
            if found[f as usize].is_none() {
                return Err(RecordError::Missing(f.canonical_key()));
            }
        }
        let input = Self::from_features(|f| found[f as usize].unwrap_or_default());
        input.validate()?;
        Ok(input)
    }

    /// Reads the `"key" : value` lines of a prompt input block.
    pub fn from_prompt_block(text: &str) -> Result<Self, RecordError> {
        let found = scan_prompt_block(text)?;
        for f in Feature::ALL {
            if found[f as usize].is_none() {
                return Err(RecordError::Missing(f.canonical_key()));
            }
        }
        let input = Self::from_features(|f| found[f as usize].unwrap_or_default());
        input.validate()?;
        Ok(input)
    }

    pub fn drug(&self) -> DrugSubstance {
        DrugSubstance {
            name: "drug".into(),
            c_sat: self.solubility,
            diffusivity: self.diffusivity,
            true_density: self.true_density,
        }
    }

    pub fn morphology(&self) -> Result<ParticleMorphology, DissolutionError> {
        ParticleMorphology::from_shape(self.aspect_ratio, self.roundness)
    }

    /// Log-normal distribution around this input's D50. SSA and the
    /// volume-equivalent size are record attributes and do not constrain it.
    pub fn size_distribution(&self, geo_sigma: f64, n_bins: usize) -> Result<SizeDistribution, DissolutionError> {
        psd_from_lognormal(self.d50, geo_sigma, n_bins)
    }
}

/// Values found on `"key" : value` lines, indexed by [`Feature`].
pub fn scan_prompt_block(text: &str) -> Result<[Option<f64>; 8], RecordError> {
    let mut found: [Option<f64>; 8] = [None; 8];
    for line in text.lines() {
        let line = line.trim();
        let Some(rest) = line.strip_prefix('"') else { continue };
        let Some((key, value)) = rest.split_once('"') else { continue };
        let Some(feature) = Feature::from_key(key) else { continue };
        let value = value.trim().trim_start_matches(':').trim().trim_end_matches(',');
        let v = parse_number(value).ok_or_else(|| RecordError::InvalidValue {
            field: feature.canonical_key(),
            message: format!("not a number: {value}"),
        })?;
        found[feature as usize] = Some(v);
    }
    Ok(found)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Experimental,
    Simulated,
}

/// Input features plus the measured (or simulated) release curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulationRecord {
    pub id: String,
    #[serde(flatten)]
    pub features: FormulationInput,
    pub profile: DissolutionProfile,
    pub provenance: Provenance,
    #[serde(default)]
    pub source: String,
}

impl FormulationRecord {
    pub fn validate(&self) -> Result<(), RecordError> {
        if self.id.trim().is_empty() {
            return Err(RecordError::MissingId);
        }
        self.features.validate()?;
        self.profile.check_well_formed().map_err(|source| RecordError::Profile {
            id: self.id.clone(),
            source,
        })
    }

    /// Reads a record written with prompt-style keys:
    /// `{"id", "Input": {...}, "Output": {"columns", "data"}, "provenance", "source"}`.
    /// Canonical records are accepted as well.
    pub fn from_json_value(value: &Value, fallback_id: &str) -> Result<Self, RecordError> {
        let obj = value.as_object().ok_or(RecordError::NotAnObject)?;
        let id = obj
            .get("id")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .unwrap_or_else(|| fallback_id.to_owned());
        let input_map = match obj.get("Input").or_else(|| obj.get("input")) {
            Some(Value::Object(m)) => m,
            Some(_) => return Err(RecordError::NotAnObject),
            None => obj,
        };
        let features = FormulationInput::from_json_map(input_map)?;
        let profile_value = obj
            .get("Output")
            .or_else(|| obj.get("output"))
            .or_else(|| obj.get("profile"))
            .ok_or(RecordError::Missing("profile"))?;
        let profile = profile_from_json_value(profile_value).map_err(|source| RecordError::Profile {
            id: id.clone(),
            source,
        })?;
        let provenance = match obj.get("provenance").and_then(Value::as_str) {
            Some("simulated") => Provenance::Simulated,
            Some("experimental") | None => Provenance::Experimental,
            Some(other) => {
                return Err(RecordError::InvalidValue {
                    field: "provenance",
                    message: format!("unknown provenance `{other}`"),
                })
            }
        };
        let source = obj.get("source").and_then(Value::as_str).unwrap_or_default().to_owned();
        let record = FormulationRecord {
            id,
            features,
            profile,
            provenance,
            source,
        };
        record.validate()?;
        Ok(record)
    }
}

/// Parses a JSON array of records (or a single record) in either key style.
/// Records without an id get `record-<n>` (1-based).
pub fn records_from_json(text: &str) -> Result<Vec<FormulationRecord>, RecordError> {
    let value: Value = serde_json::from_str(text).map_err(|e| RecordError::InvalidValue {
        field: "json",
        message: e.to_string(),
    })?;
    match value {
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(i, v)| FormulationRecord::from_json_value(v, &format!("record-{}", i + 1)))
            .collect(),
        other => Ok(vec![FormulationRecord::from_json_value(&other, "record-1")?]),
    }
}

/// Accepts either `[[t, r], ...]` or a `{"columns": [...], "data": [...]}` table in hours.
pub fn profile_from_json_value(value: &Value) -> Result<DissolutionProfile, ProfileError> {
    let rows = match value {
        Value::Array(rows) => rows,
        Value::Object(m) => match m.get("data") {
            Some(Value::Array(rows)) => rows,
            _ => return Err(ProfileError::Empty),
        },
        _ => return Err(ProfileError::Empty),
    };
    let mut points = Vec::with_capacity(rows.len());
    for (index, row) in rows.iter().enumerate() {
        let pair = row
            .as_array()
            .filter(|r| r.len() >= 2)
            .and_then(|r| Some((r[0].as_f64()?, r[1].as_f64()?)))
            .ok_or(ProfileError::NonFinite { index })?;
        points.push(crate::profile::ProfilePoint::new(pair.0, pair.1));
    }
    DissolutionProfile::from_unordered(points)
}
