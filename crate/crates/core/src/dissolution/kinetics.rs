use std::f64::consts::PI;

use super::{DissolutionConditions, DissolutionError, DrugSubstance, ParticleMorphology};

/// Sherwood correlation `Sh = 2 + 0.52 · Re^0.52 · Sc^(1/3)`.
pub fn sherwood(re: f64, sc: f64) -> Result<f64, DissolutionError> {
    if !(re >= 0.0) || !re.is_finite() {
        return Err(DissolutionError::Domain(format!("Reynolds number must be >= 0, got {re}")));
    }
    if !(sc > 0.0) || !sc.is_finite() {
        return Err(DissolutionError::Domain(format!("Schmidt number must be > 0, got {sc}")));
    }
    Ok(2.0 + 0.52 * re.powf(0.52) * sc.cbrt())
}

/// Film mass-transfer coefficient `k = Sh · D / x` in m/s (`x` in m).
pub fn mass_transfer_coefficient(sh: f64, diffusivity: f64, x: f64) -> Result<f64, DissolutionError> {
    if x == 0.0 {
        return Err(DissolutionError::ZeroSize);
    }
    if !(sh > 0.0 && diffusivity > 0.0 && x > 0.0) {
        return Err(DissolutionError::Domain(format!(
            "Sh, D and x must be > 0 (Sh = {sh}, D = {diffusivity}, x = {x})"
        )));
    }
    Ok(sh * diffusivity / x)
}

/// Particle Reynolds and Schmidt numbers for a particle of size `x` (m).
///
/// The slip velocity is `velocity_factor` times the paddle tip speed.
pub fn reynolds_schmidt(
    conditions: &DissolutionConditions,
    x: f64,
    diffusivity: f64,
) -> Result<(f64, f64), DissolutionError> {
    if !(x > 0.0) {
        return Err(DissolutionError::Domain(format!("particle size must be > 0, got {x}")));
    }
    let tip_speed = 2.0 * PI * conditions.paddle_rpm / 60.0 * conditions.impeller_radius;
    let u = conditions.velocity_factor * tip_speed;
    let re = conditions.fluid_density * u * x / conditions.fluid_viscosity;
    let sc = conditions.fluid_viscosity / (conditions.fluid_density * diffusivity);
    Ok((re, sc))
}

/// Shrink rate `dx/dt` in m/s for a particle of size `x` (m) with bulk
/// concentration `c_b` in mg/mL.
pub fn shrink_rate(
    x: f64,
    k: f64,
    morph: &ParticleMorphology,
    drug: &DrugSubstance,
    c_b: f64,
) -> Result<f64, DissolutionError> {
    if c_b > drug.c_sat {
        return Err(DissolutionError::SaturationViolation { c_b, c_sat: drug.c_sat });
    }
    if !(c_b >= 0.0) {
        return Err(DissolutionError::Domain(format!("bulk concentration must be >= 0, got {c_b}")));
    }
    if !(x > 0.0) {
        return Err(DissolutionError::ZeroSize);
    }
    // mg/mL == kg/m³
    let driving_force = drug.c_sat - c_b;
    Ok(-(k * morph.psi_a / (drug.density_si() * morph.psi_v)) * driving_force)
}
