//! Inverse design: find a size distribution whose simulated release curve
//! matches a target.
//!
//! Two parameterizations are offered. `LogNormal` searches (d50, geo_sigma)
//! with a bounded Nelder-Mead on log-transformed parameters. `FreeBins` puts
//! fixed geometric bins across a size range and fits their mass fractions
//! with projected finite-difference gradient descent plus a roughness penalty.

mod calibrate;
mod optimize;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dissolution::{
    psd_from_lognormal, DissolutionConditions, DissolutionError, DrugSubstance, ParticleMorphology,
    SizeDistribution, Simulator,
};
use crate::eval::{profile_mse, MetricError};
use crate::profile::{DissolutionProfile, ProfileError};

pub use calibrate::{calibrate_velocity_factor, Calibration};
pub use report::design_report;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("invalid design configuration: {0}")]
    Config(String),
    #[error("invalid target profile: {0}")]
    Target(#[from] ProfileError),
    #[error(transparent)]
    Simulation(#[from] DissolutionError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Parameterization {
    /// Start point for the first optimizer run.
    LogNormal { d50: f64, geo_sigma: f64 },
    FreeBins { n: usize },
}

/// Box constraints. Sizes in µm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DesignBounds {
    pub d50: (f64, f64),
    pub geo_sigma: (f64, f64),
    /// Span of the free-bin grid.
    pub size_range: (f64, f64),
}

impl Default for DesignBounds {
    fn default() -> Self {
        Self {
            d50: (1.0, 1000.0),
            geo_sigma: (1.0, 3.0),
            size_range: (1.0, 1000.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub target: DissolutionProfile,
    pub drug: DrugSubstance,
    pub morph: ParticleMorphology,
    pub conditions: DissolutionConditions,
    pub parameterization: Parameterization,
    pub bounds: DesignBounds,
    /// Weight of the second-difference roughness term (free bins only).
    pub regularization_weight: f64,
    /// Bins used by the forward model for log-normal candidates.
    pub n_bins: usize,
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
}

impl DesignSpec {
    pub fn new(
        target: DissolutionProfile,
        drug: DrugSubstance,
        morph: ParticleMorphology,
        conditions: DissolutionConditions,
        parameterization: Parameterization,
    ) -> Self {
        Self {
            target,
            drug,
            morph,
            conditions,
            parameterization,
            bounds: DesignBounds::default(),
            regularization_weight: 1e-2,
            n_bins: 50,
            starts: 4,
            seed: 0,
            max_iterations: 200,
        }
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        self.target.check_well_formed()?;
        if self.target.len() < 2 {
            return Err(DesignError::Config("target needs at least 2 points".into()));
        }
        self.drug.validate()?;
        self.morph.validate()?;
        self.conditions.validate()?;
        let check = |name: &str, (lo, hi): (f64, f64), min: f64| {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(DesignError::Config(format!("{name} bounds need lo < hi, got ({lo}, {hi})")));
            }
            if lo < min {
                return Err(DesignError::Config(format!("{name} lower bound must be >= {min}, got {lo}")));
            }
            Ok(())
        };
        if !(self.regularization_weight.is_finite() && self.regularization_weight >= 0.0) {
            return Err(DesignError::Config("regularization weight must be >= 0".into()));
        }
        if self.starts == 0 {
            return Err(DesignError::Config("need at least one start".into()));
        }
        match self.parameterization {
            Parameterization::LogNormal { d50, geo_sigma } => {
                check("d50", self.bounds.d50, f64::MIN_POSITIVE)?;
                check("geo_sigma", self.bounds.geo_sigma, 1.0)?;
                if self.n_bins == 0 {
                    return Err(DesignError::Config("n_bins must be > 0".into()));
                }
                let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
                if !inside(d50, self.bounds.d50) || !inside(geo_sigma, self.bounds.geo_sigma) {
                    return Err(DesignError::Config(format!(
                        "start ({d50}, {geo_sigma}) lies outside the bounds"
                    )));
                }
            }
            Parameterization::FreeBins { n } => {
                check("size_range", self.bounds.size_range, f64::MIN_POSITIVE)?;
                if n < 2 {
                    return Err(DesignError::Config("free bins need n >= 2".into()));
                }
            }
        }
        Ok(())
    }

    /// Bin centres of the free-bin grid, geometric across `size_range`.
    pub fn free_bin_sizes(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.bounds.size_range;
        let (a, b) = (lo.ln(), hi.ln());
        (0..n)
            .map(|i| (a + (b - a) * (i as f64 + 0.5) / n as f64).exp())
            .collect()
    }

    pub fn simulate(&self, psd: &SizeDistribution) -> Result<DissolutionProfile, DesignError> {
        let grid = self.target.times();
        Ok(Simulator::default()
            .run(&self.drug, &self.morph, psd, &self.conditions, &grid)?
            .profile)
    }
}

/// Sum of squared second differences of the bin fractions.
pub fn roughness(fractions: &[f64]) -> f64 {
    fractions
        .windows(3)
        .map(|w| {
            let d = w[0] - 2.0 * w[1] + w[2];
            d * d
        })
        .sum()
}

/// Fit error (%²) of `psd` against the target, plus the roughness penalty
/// when the spec uses free bins.
pub fn objective(psd: &SizeDistribution, spec: &DesignSpec) -> Result<f64, DesignError> {
    let achieved = spec.simulate(psd)?;
    let fit = profile_mse(&spec.target, &achieved)?;
    let penalty = match spec.parameterization {
        Parameterization::FreeBins { .. } => spec.regularization_weight * roughness(&psd.fractions()),
        Parameterization::LogNormal { .. } => 0.0,
    };
    Ok(fit + penalty)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalFit {
    pub d50: f64,
    pub geo_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    pub psd: SizeDistribution,
    /// Present for the log-normal parameterization.
    pub lognormal: Option<LogNormalFit>,
    pub achieved: DissolutionProfile,
    /// Plain MSE against the target, %².
    pub residual_mse: f64,
    /// Objective including any penalty.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective after each accepted iteration, starting with the
    /// initial point.
    pub history: Vec<f64>,
    /// Which start produced the result.
    pub start_index: usize,
}

pub fn design_psd(spec: &DesignSpec) -> Result<DesignResult, DesignError> {
    spec.validate()?;
    let runs = optimize::run_starts(spec)?;
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            a.value
                .total_cmp(&b.value)
                .then(a.iterations.cmp(&b.iterations))
                .then(ia.cmp(ib))
        })
        .map(|(_, run)| run)
        .expect("at least one start");
    let psd = optimize::decode(spec, &best.x)?;
    let achieved = spec.simulate(&psd)?;
    let residual_mse = profile_mse(&spec.target, &achieved)?;
    let lognormal = match spec.parameterization {
        Parameterization::LogNormal { .. } => {
            let (d50, geo_sigma) = optimize::lognormal_params(spec, &best.x);
            Some(LogNormalFit { d50, geo_sigma })
        }
        Parameterization::FreeBins { .. } => None,
    };
    Ok(DesignResult {
        psd,
        lognormal,
        achieved,
        residual_mse,
        objective: best.value,
        iterations: best.iterations,
        converged: best.converged,
        history: best.history,
        start_index: best.start_index,
    })
}

/// Target curve simulated from a log-normal powder. Handy for round trips.
pub fn lognormal_target(
    d50: f64,
    geo_sigma: f64,
    n_bins: usize,
    drug: &DrugSubstance,
    morph: &ParticleMorphology,
    conditions: &DissolutionConditions,
    grid: &[f64],
) -> Result<DissolutionProfile, DissolutionError> {
    let psd = psd_from_lognormal(d50, geo_sigma, n_bins)?;
    crate::dissolution::simulate_dissolution(drug, morph, &psd, conditions, grid)
}
