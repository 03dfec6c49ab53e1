use std::path::PathBuf;

use clap::{Args, ValueEnum};
use formu_core::llm::{LlmClient, MockOracle, ReplayIndex, TranscriptRecorder};
use formu_core::{derived_metrics, DrugSubstance, Feature, FormulationInput};

use crate::config::AppConfig;
use crate::error::{CliError, CliResult};
use crate::io::read_input_values;

pub const UNITS: &str = "Units: particle sizes (D50, volume-equivalent size) in µm, solubility in mg/mL, \
diffusivity in m²/s, true density in g/mL, SSA in m²/g, time in hr, release in % of dose, \
medium volume in mL, dose in mg, paddle speed in rpm, MSE in %².";

/// Powder description, from a JSON file and/or flags. Flags win.
#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// FormulationInput JSON (canonical keys such as `d50`, or prompt keys such as `D50 (um)`).
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Mass-median particle size, µm.
    #[arg(long)]
    pub d50: Option<f64>,
    /// Particle aspect ratio (>= 1). Default 1.
    #[arg(long)]
    pub aspect_ratio: Option<f64>,
    /// Particle roundness in (0, 1]. Default 1.
    #[arg(long)]
    pub roundness: Option<f64>,
    /// Solubility, mg/mL. Defaults to hydrochlorothiazide when no --input is given.
    #[arg(long)]
    pub solubility: Option<f64>,
    /// Diffusion coefficient, m²/s. Defaults to hydrochlorothiazide when no --input is given.
    #[arg(long)]
    pub diffusivity: Option<f64>,
    /// True density, g/mL. Defaults to hydrochlorothiazide when no --input is given.
    #[arg(long)]
    pub true_density: Option<f64>,
    /// Specific surface area, m²/g. Derived from the log-normal PSD when absent.
    #[arg(long)]
    pub ssa: Option<f64>,
    /// Volume-equivalent size, µm. Derived from the log-normal PSD when absent.
    #[arg(long)]
    pub vol_eq_size: Option<f64>,
}

impl InputArgs {
    /// `geo_sigma` and `n_bins` only matter when SSA or the
    /// volume-equivalent size has to be derived.
    pub fn resolve(&self, geo_sigma: f64, n_bins: usize) -> CliResult<FormulationInput> {
        let mut found = match &self.input {
            Some(path) => read_input_values(path)?,
            None => {
                let drug = DrugSubstance::hydrochlorothiazide();
                let mut v = [None; 8];
                v[Feature::Solubility as usize] = Some(drug.c_sat);
                v[Feature::Diffusivity as usize] = Some(drug.diffusivity);
                v[Feature::TrueDensity as usize] = Some(drug.true_density);
                v
            }
        };
        let flags = [
            (Feature::D50, self.d50),
            (Feature::AspectRatio, self.aspect_ratio),
            (Feature::Roundness, self.roundness),
            (Feature::Solubility, self.solubility),
            (Feature::Diffusivity, self.diffusivity),
            (Feature::TrueDensity, self.true_density),
            (Feature::Ssa, self.ssa),
            (Feature::VolEqSize, self.vol_eq_size),
        ];
        for (f, v) in flags {
            if v.is_some() {
                found[f as usize] = v;
            }
        }
        for f in [Feature::AspectRatio, Feature::Roundness] {
            found[f as usize].get_or_insert(1.0);
        }
        for f in [Feature::D50, Feature::Solubility, Feature::Diffusivity, Feature::TrueDensity] {
            if found[f as usize].is_none() {
                return Err(CliError::Usage(format!("missing required field `{}`", f.canonical_key())));
            }
        }
        let mut input = FormulationInput::from_features(|f| found[f as usize].unwrap_or(1.0));
        if found[Feature::Ssa as usize].is_none() || found[Feature::VolEqSize as usize].is_none() {
            input.validate().map_err(CliError::usage)?;
            let psd = input.size_distribution(geo_sigma, n_bins).map_err(CliError::usage)?;
            let morph = input.morphology().map_err(CliError::usage)?;
            let m = derived_metrics(&psd, &morph, &input.drug());
            found[Feature::Ssa as usize].get_or_insert(m.ssa);
            found[Feature::VolEqSize as usize].get_or_insert(m.vol_eq_size);
            input = FormulationInput::from_features(|f| found[f as usize].unwrap_or(1.0));
        }
        input.validate().map_err(CliError::usage)?;
        Ok(input)
    }
}

/// Overrides for the dissolution test set-up.
#[derive(Debug, Clone, Default, Args)]
pub struct ConditionArgs {
    /// Medium volume, mL.
    #[arg(long)]
    pub medium_volume: Option<f64>,
    /// Dose, mg.
    #[arg(long)]
    pub dose: Option<f64>,
    /// Paddle speed, rpm.
    #[arg(long)]
    pub paddle_rpm: Option<f64>,
    /// Fraction of the paddle tip speed used as particle slip velocity, in (0, 1].
    #[arg(long)]
    pub velocity_factor: Option<f64>,
    /// Hold the bulk concentration at zero (sink conditions).
    #[arg(long)]
    pub sink: bool,
}

impl ConditionArgs {
    pub fn apply(&self, cfg: &mut AppConfig) {
        let c = &mut cfg.conditions;
        if let Some(v) = self.medium_volume {
            c.medium_volume = v;
        }
        if let Some(v) = self.dose {
            c.dose = v;
        }
        if let Some(v) = self.paddle_rpm {
            c.paddle_rpm = v;
        }
        if let Some(v) = self.velocity_factor {
            c.velocity_factor = v;
        }
        if self.sink {
            c.sink_override = true;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    /// Chat-completions endpoint; needs the API key in the configured env var.
    Live,
    /// Offline: answers with the simulator.
    Mock,
    /// Offline: serves recorded transcripts.
    Replay,
}

#[derive(Debug, Clone, Args)]
pub struct LlmArgs {
    #[arg(long, value_enum, default_value = "mock")]
    pub backend: Backend,
    /// Transcript file or directory of `*.jsonl` transcripts (replay backend).
    #[arg(long, value_name = "PATH")]
    pub replay: Option<PathBuf>,
    /// Model name for the live backend.
    #[arg(long)]
    pub model: Option<String>,
    /// Maximum concurrent requests.
    #[arg(long)]
    pub max_inflight: Option<usize>,
}

impl LlmArgs {
    pub fn apply(&self, cfg: &mut AppConfig) {
        if let Some(m) = &self.model {
            cfg.llm.model = m.clone();
        }
        if let Some(n) = self.max_inflight {
            cfg.llm.max_inflight = n;
        }
    }

    pub fn client(&self, cfg: &AppConfig, transcript: PathBuf) -> CliResult<LlmClient> {
        let client = match self.backend {
            Backend::Live => LlmClient::live(cfg.llm.clone())?,
            Backend::Mock => LlmClient::mock(cfg.llm.clone(), MockOracle::with_conditions(cfg.conditions.clone()))?,
            Backend::Replay => {
                let path = self
                    .replay
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("the replay backend needs --replay <PATH>".into()))?;
                LlmClient::replay(cfg.llm.clone(), ReplayIndex::load(path).map_err(CliError::usage)?)?
            }
        };
        let recorder = TranscriptRecorder::create(&transcript)?;
        Ok(client.with_recorder(std::sync::Arc::new(recorder)))
    }
}

pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(d50: Option<f64>) -> InputArgs {
        InputArgs {
            input: None,
            d50,
            aspect_ratio: None,
            roundness: None,
            solubility: None,
            diffusivity: None,
            true_density: None,
            ssa: None,
            vol_eq_size: None,
        }
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0, 0.5,1"), Ok(vec![0.0, 0.5, 1.0]));
        assert!(parse_grid("0,,1").is_err());
    }

    #[test]
    fn flags_only_input_uses_drug_defaults_and_derives_ssa() {
        let input = flags(Some(100.0)).resolve(1.5, 50).unwrap();
        assert_eq!(input.solubility, 0.45);
        assert_eq!(input.aspect_ratio, 1.0);
        let psd = formu_core::psd_from_lognormal(100.0, 1.5, 50).unwrap();
        let m = derived_metrics(&psd, &formu_core::ParticleMorphology::sphere(), &DrugSubstance::hydrochlorothiazide());
        assert_eq!(input.ssa, m.ssa);
        assert_eq!(input.vol_eq_size, m.vol_eq_size);
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("in.json");
        std::fs::write(
            &path,
            r#"{"Input": {"D50 (um)": 97.5, "solubility_mg_ml": 0.45, "diffusivity_m2_s": "7.5x 10^(-10)",
                "true_density_g_ml": 1.512, "ssa_m2_g": 1.07, "vol_eq_um": 1.85}}"#,
        )
        .unwrap();
        let mut args = flags(Some(50.0));
        args.input = Some(path);
        let input = args.resolve(1.5, 50).unwrap();
        assert_eq!((input.d50, input.ssa, input.diffusivity), (50.0, 1.07, 7.5e-10));
    }

    #[test]
    fn missing_d50_is_named() {
        let err = flags(None).resolve(1.5, 50).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("d50_um"));
    }
}
