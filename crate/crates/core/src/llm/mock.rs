//! Offline backend that answers prompts with the simulator.

use serde_json::{Map, Value};

use super::LlmError;
use crate::design::{design_psd, DesignSpec, Parameterization};
use crate::dissolution::{derived_metrics, simulate_dissolution, DissolutionConditions, DrugSubstance, ParticleMorphology};
use crate::profile::{render_profile_json, standard_grid};
use crate::prompt::{extract_input, parse_profile_response};
use crate::record::{scan_prompt_block, Feature};

/// Geometric standard deviation assumed for a bare D50.
pub const MOCK_GEO_SIGMA: f64 = 1.5;
pub const MOCK_BINS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct MockOracle {
    pub conditions: DissolutionConditions,
    pub geo_sigma: f64,
    pub n_bins: usize,
    /// Output grid, hours.
    pub grid: Vec<f64>,
}

impl Default for MockOracle {
    fn default() -> Self {
        Self {
            conditions: DissolutionConditions::default(),
            geo_sigma: MOCK_GEO_SIGMA,
            n_bins: MOCK_BINS,
            grid: standard_grid(),
        }
    }
}

const TARGET_MARKER: &str = "Target = ";

impl MockOracle {
    pub fn with_conditions(conditions: DissolutionConditions) -> Self {
        Self {
            conditions,
            ..Self::default()
        }
    }

    /// Prediction prompts get the simulated release table; design prompts
    /// (those carrying a target curve) get a log-normal design.
    pub fn respond(&self, prompt: &str) -> Result<String, LlmError> {
        if let Some(at) = prompt.find(TARGET_MARKER) {
            return self.design(prompt, at);
        }
        let input = extract_input(prompt).map_err(|e| LlmError::MockParse(e.to_string()))?;
        let morph = input.morphology().map_err(|e| LlmError::MockParse(e.to_string()))?;
        let psd = input
            .size_distribution(self.geo_sigma, self.n_bins)
            .map_err(|e| LlmError::MockParse(e.to_string()))?;
        let profile = simulate_dissolution(&input.drug(), &morph, &psd, &self.conditions, &self.grid)
            .map_err(|e| LlmError::Mock(e.to_string()))?;
        Ok(render_profile_json(&profile))
    }

    fn design(&self, prompt: &str, at: usize) -> Result<String, LlmError> {
        let parse = |m: String| LlmError::MockParse(m);
        let target = parse_profile_response(&prompt[at..]).map_err(|e| parse(e.to_string()))?.profile;
        let found = scan_prompt_block(&prompt[..at]).map_err(|e| parse(e.to_string()))?;
        let get = |f: Feature| found[f as usize].ok_or_else(|| parse(format!("missing {}", f.prompt_key())));
        let drug = DrugSubstance::new("drug", get(Feature::Solubility)?, get(Feature::Diffusivity)?, get(Feature::TrueDensity)?)
            .map_err(|e| parse(e.to_string()))?;
        let morph = ParticleMorphology::sphere();
        let mut spec = DesignSpec::new(
            target,
            drug.clone(),
            morph,
            self.conditions.clone(),
            Parameterization::LogNormal {
                d50: 100.0,
                geo_sigma: self.geo_sigma,
            },
        );
        spec.n_bins = self.n_bins;
        let result = design_psd(&spec).map_err(|e| LlmError::Mock(e.to_string()))?;
        let metrics = derived_metrics(&result.psd, &morph, &drug);
        let values = [
            (Feature::D50, result.psd.d50()),
            (Feature::AspectRatio, 1.0),
            (Feature::Roundness, 1.0),
            (Feature::Solubility, drug.c_sat),
            (Feature::Diffusivity, drug.diffusivity),
            (Feature::TrueDensity, drug.true_density),
            (Feature::Ssa, metrics.ssa),
            (Feature::VolEqSize, metrics.vol_eq_size),
        ];
        let mut map = Map::new();
        for (f, v) in values {
            map.insert(f.prompt_key().to_owned(), Value::from(v));
        }
        Ok(serde_json::to_string_pretty(&Value::Object(map)).expect("object serializes"))
    }
}
