//! Forward dissolution model for polydisperse drug powders.
//!
//! Each size class shrinks according to the Nernst-Brunner film model
//!
//! ```text
//! dx/dt = -(k * psi_a / (rho_s * psi_v)) * (c_sat - c_b),   k = Sh * D / x
//! Sh    = 2 + 0.52 * Re^0.52 * Sc^(1/3)
//! ```
//!
//! with the bulk concentration `c_b` fed back from the dissolved mass. Records
//! and reports use µm, mg, mL and hours; everything inside the solver runs in
//! SI units. Conversion happens at the boundary of this module only.

mod kinetics;
mod psd;
mod solver;

pub use kinetics::{mass_transfer_coefficient, reynolds_schmidt, sherwood, shrink_rate};
pub use psd::{derived_metrics, psd_from_lognormal, DerivedMetrics, SizeBin, SizeDistribution};
pub use solver::{
    simulate_dissolution, SherwoodModel, SimulationOutput, SimulationState, Simulator,
    SolverOptions,
};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DissolutionError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("mass-transfer coefficient is singular at zero particle size")]
    ZeroSize,
    #[error("bulk concentration {c_b} mg/mL exceeds solubility {c_sat} mg/mL")]
    SaturationViolation { c_b: f64, c_sat: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid size distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid output grid: {0}")]
    InvalidGrid(String),
    #[error("integration failed at step {step} (bin {bin}, t = {time_s} s): {reason}")]
    Integration {
        step: usize,
        bin: usize,
        time_s: f64,
        reason: String,
    },
}

pub(crate) fn ensure_positive(name: &str, v: f64) -> Result<(), DissolutionError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(DissolutionError::InvalidInput(format!("{name} must be > 0, got {v}")))
    }
}

/// Intrinsic drug constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrugSubstance {
    pub name: String,
    /// Solubility, mg/mL (numerically equal to kg/m³).
    pub c_sat: f64,
    /// Molecular diffusion coefficient, m²/s.
    pub diffusivity: f64,
    /// True density, g/mL.
    pub true_density: f64,
}

impl DrugSubstance {
    pub fn new(
        name: impl Into<String>,
        c_sat: f64,
        diffusivity: f64,
        true_density: f64,
    ) -> Result<Self, DissolutionError> {
        let drug = Self {
            name: name.into(),
            c_sat,
            diffusivity,
            true_density,
        };
        drug.validate()?;
        Ok(drug)
    }

    /// Hydrochlorothiazide constants used throughout the reference prompts.
    pub fn hydrochlorothiazide() -> Self {
        Self {
            name: "hydrochlorothiazide".into(),
            c_sat: 0.45,
            diffusivity: 7.5e-10,
            true_density: 1.512,
        }
    }

    pub fn validate(&self) -> Result<(), DissolutionError> {
        ensure_positive("solubility", self.c_sat)?;
        ensure_positive("diffusivity", self.diffusivity)?;
        ensure_positive("true density", self.true_density)
    }

    /// True density in kg/m³.
    pub(crate) fn density_si(&self) -> f64 {
        self.true_density * 1000.0
    }
}

/// Particle shape: surface = `psi_a · x²`, volume = `psi_v · x³`, with `x` the
/// volume-equivalent diameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleMorphology {
    pub aspect_ratio: f64,
    /// Carried as a record attribute; it does not enter the kinetics.
    pub roundness: f64,
    pub psi_a: f64,
    pub psi_v: f64,
}

impl Default for ParticleMorphology {
    fn default() -> Self {
        Self::sphere()
    }
}

impl ParticleMorphology {
    pub fn sphere() -> Self {
        Self {
            aspect_ratio: 1.0,
            roundness: 1.0,
            psi_a: PI,
            psi_v: PI / 6.0,
        }
    }

    /// Elongated particles are treated as prolate spheroids of equal volume;
    /// `psi_a` picks up the spheroid-to-sphere surface ratio.
    pub fn from_shape(aspect_ratio: f64, roundness: f64) -> Result<Self, DissolutionError> {
        if !(aspect_ratio.is_finite() && aspect_ratio >= 1.0) {
            return Err(DissolutionError::InvalidInput(format!(
                "aspect ratio must be >= 1, got {aspect_ratio}"
            )));
        }
        if !(roundness > 0.0 && roundness <= 1.0) {
            return Err(DissolutionError::InvalidInput(format!(
                "roundness must be in (0, 1], got {roundness}"
            )));
        }
        Ok(Self {
            aspect_ratio,
            roundness,
            psi_a: PI * prolate_surface_ratio(aspect_ratio),
            psi_v: PI / 6.0,
        })
    }

    pub fn custom(psi_a: f64, psi_v: f64) -> Result<Self, DissolutionError> {
        ensure_positive("psi_a", psi_a)?;
        ensure_positive("psi_v", psi_v)?;
        Ok(Self {
            aspect_ratio: 1.0,
            roundness: 1.0,
            psi_a,
            psi_v,
        })
    }

    pub fn validate(&self) -> Result<(), DissolutionError> {
        ensure_positive("psi_a", self.psi_a)?;
        ensure_positive("psi_v", self.psi_v)
    }

    /// Surface-to-volume shape ratio `psi_a / psi_v` (6 for spheres).
    pub fn shape_ratio(&self) -> f64 {
        self.psi_a / self.psi_v
    }
}

/// Surface of a prolate spheroid with the given aspect ratio divided by the
/// surface of the sphere of equal volume. Equals 1 for `aspect_ratio == 1`.
fn prolate_surface_ratio(aspect_ratio: f64) -> f64 {
    if aspect_ratio <= 1.0 + 1e-12 {
        return 1.0;
    }
    let e = (1.0 - 1.0 / (aspect_ratio * aspect_ratio)).sqrt();
    (1.0 + aspect_ratio * e.asin() / e) / (2.0 * aspect_ratio.powf(2.0 / 3.0))
}

/// Dissolution test set-up. Defaults describe a USP II paddle vessel with
/// water at 37 °C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DissolutionConditions {
    /// mL
    pub medium_volume: f64,
    /// °C
    pub temperature: f64,
    pub ph: f64,
    /// rev/min
    pub paddle_rpm: f64,
    /// mg
    pub dose: f64,
    /// kg/m³
    pub fluid_density: f64,
    /// Pa·s
    pub fluid_viscosity: f64,
    /// Fraction of the paddle tip speed seen by particles as slip velocity.
    pub velocity_factor: f64,
    /// m
    pub impeller_radius: f64,
    /// Forces `c_b = 0` throughout.
    pub sink_override: bool,
}

impl Default for DissolutionConditions {
    fn default() -> Self {
        Self {
            medium_volume: 900.0,
            temperature: 37.0,
            ph: 7.2,
            paddle_rpm: 50.0,
            dose: 10.0,
            fluid_density: 993.0,
            fluid_viscosity: 7.0e-4,
            velocity_factor: 0.1,
            impeller_radius: 0.037,
            sink_override: false,
        }
    }
}

impl DissolutionConditions {
    pub fn validate(&self) -> Result<(), DissolutionError> {
        ensure_positive("medium volume", self.medium_volume)?;
        ensure_positive("dose", self.dose)?;
        ensure_positive("fluid density", self.fluid_density)?;
        ensure_positive("fluid viscosity", self.fluid_viscosity)?;
        ensure_positive("impeller radius", self.impeller_radius)?;
        if !(self.velocity_factor > 0.0 && self.velocity_factor <= 1.0) {
            return Err(DissolutionError::InvalidInput(format!(
                "velocity factor must be in (0, 1], got {}",
                self.velocity_factor
            )));
        }
        if !(self.paddle_rpm.is_finite() && self.paddle_rpm >= 0.0) {
            return Err(DissolutionError::InvalidInput(format!(
                "paddle speed must be >= 0, got {}",
                self.paddle_rpm
            )));
        }
        Ok(())
    }

    /// Largest amount that can dissolve before the medium saturates, mg.
    pub fn saturation_capacity(&self, drug: &DrugSubstance) -> f64 {
        drug.c_sat * self.medium_volume
    }
}
