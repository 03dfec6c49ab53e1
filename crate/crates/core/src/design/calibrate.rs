use super::DesignError;
use crate::dissolution::{simulate_dissolution, DissolutionConditions};
use crate::eval::profile_mse;
use crate::record::FormulationRecord;

/// Result of fitting the paddle velocity factor to measured records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub velocity_factor: f64,
    /// Mean forward-prediction MSE over the records, %².
    pub mean_mse: f64,
}

fn mean_forward_mse(
    records: &[FormulationRecord],
    base: &DissolutionConditions,
    velocity_factor: f64,
    geo_sigma: f64,
    n_bins: usize,
) -> Result<f64, DesignError> {
    let conditions = DissolutionConditions {
        velocity_factor,
        ..base.clone()
    };
    let mut total = 0.0;
    for r in records {
        let psd = r.features.size_distribution(geo_sigma, n_bins)?;
        let morph = r.features.morphology()?;
        let sim = simulate_dissolution(&r.features.drug(), &morph, &psd, &conditions, &r.profile.times())?;
        total += profile_mse(&r.profile, &sim)?;
    }
    Ok(total / records.len() as f64)
}

/// Golden-section search of `velocity_factor` over `[lo, hi]` (log scale)
/// minimising the mean forward MSE of log-normal powders built from each
/// record's D50.
pub fn calibrate_velocity_factor(
    records: &[FormulationRecord],
    base: &DissolutionConditions,
    geo_sigma: f64,
    n_bins: usize,
    (lo, hi): (f64, f64),
) -> Result<Calibration, DesignError> {
    if records.is_empty() {
        return Err(DesignError::Config("calibration needs at least one record".into()));
    }
    if !(lo > 0.0 && lo < hi && hi <= 1.0) {
        return Err(DesignError::Config(format!("velocity factor range ({lo}, {hi}) must satisfy 0 < lo < hi <= 1")));
    }
    let f = |log_v: f64| mean_forward_mse(records, base, log_v.exp(), geo_sigma, n_bins);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut best = (a, f(a)?);
    let fb = f(b)?;
    if fb < best.1 {
        best = (b, fb);
    }
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..40 {
        for (x, fx) in [(c, fc), (d, fd)] {
            if fx < best.1 {
                best = (x, fx);
            }
        }
        if (b - a).abs() < 1e-4 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d)?;
        }
    }
    Ok(Calibration {
        velocity_factor: best.0.exp().clamp(lo, hi),
        mean_mse: best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissolution::{psd_from_lognormal, DrugSubstance, ParticleMorphology};
    use crate::profile::standard_grid;
    use crate::record::{FormulationInput, Provenance};

    #[test]
    fn recovers_the_generating_velocity_factor() {
        let truth = DissolutionConditions {
            velocity_factor: 0.02,
            ..DissolutionConditions::default()
        };
        let records: Vec<FormulationRecord> = [150.0, 250.0, 400.0]
            .iter()
            .map(|&d50| {
                let features = FormulationInput {
                    d50,
                    aspect_ratio: 1.0,
                    roundness: 1.0,
                    solubility: 0.45,
                    diffusivity: 7.5e-10,
                    true_density: 1.512,
                    ssa: 1.0,
                    vol_eq_size: 1.0,
                };
                let psd = psd_from_lognormal(d50, 1.5, 30).unwrap();
                let profile = simulate_dissolution(
                    &DrugSubstance::hydrochlorothiazide(),
                    &ParticleMorphology::sphere(),
                    &psd,
                    &truth,
                    &standard_grid(),
                )
                .unwrap();
                FormulationRecord {
                    id: format!("{d50}"),
                    features,
                    profile,
                    provenance: Provenance::Simulated,
                    source: String::new(),
                }
            })
            .collect();
        let cal = calibrate_velocity_factor(&records, &DissolutionConditions::default(), 1.5, 30, (1e-4, 1.0)).unwrap();
        assert!((cal.velocity_factor / 0.02 - 1.0).abs() < 0.05, "{cal:?}");
        assert!(cal.mean_mse < 1e-2);
    }
}
