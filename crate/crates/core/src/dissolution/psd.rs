use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{DissolutionError, DrugSubstance, ParticleMorphology};

const FRACTION_SUM_TOL: f64 = 1e-9;

/// One size class: volume-equivalent size in µm and its share of the dose mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeBin {
    pub size: f64,
    pub mass_fraction: f64,
}

/// Binned mass-fraction particle size distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<SizeBin>", into = "Vec<SizeBin>")]
pub struct SizeDistribution {
    bins: Vec<SizeBin>,
}

impl SizeDistribution {
    pub fn new(bins: Vec<SizeBin>) -> Result<Self, DissolutionError> {
        if bins.is_empty() {
            return Err(DissolutionError::InvalidDistribution("no bins".into()));
        }
        for (i, b) in bins.iter().enumerate() {
            if !(b.size.is_finite() && b.size > 0.0) {
                return Err(DissolutionError::InvalidDistribution(format!(
                    "bin {i}: size must be > 0, got {}",
                    b.size
                )));
            }
            if i > 0 && b.size <= bins[i - 1].size {
                return Err(DissolutionError::InvalidDistribution(format!(
                    "bin {i}: sizes must be strictly increasing"
                )));
            }
            if !(b.mass_fraction.is_finite() && b.mass_fraction >= 0.0) {
                return Err(DissolutionError::InvalidDistribution(format!(
                    "bin {i}: mass fraction must be >= 0, got {}",
                    b.mass_fraction
                )));
            }
        }
        let total: f64 = bins.iter().map(|b| b.mass_fraction).sum();
        if (total - 1.0).abs() > FRACTION_SUM_TOL {
            return Err(DissolutionError::InvalidDistribution(format!(
                "mass fractions sum to {total}, expected 1"
            )));
        }
        Ok(Self { bins })
    }

    /// Rescales non-negative weights to unit sum before validating.
    pub fn normalized(sizes: &[f64], weights: &[f64]) -> Result<Self, DissolutionError> {
        if sizes.len() != weights.len() {
            return Err(DissolutionError::InvalidDistribution(
                "sizes and weights differ in length".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(DissolutionError::InvalidDistribution("weights sum to zero".into()));
        }
        Self::new(
            sizes
                .iter()
                .zip(weights)
                .map(|(&size, &w)| SizeBin {
                    size,
                    mass_fraction: w / total,
                })
                .collect(),
        )
    }

    pub fn monodisperse(size: f64) -> Result<Self, DissolutionError> {
        Self::new(vec![SizeBin {
            size,
            mass_fraction: 1.0,
        }])
    }

    pub fn bins(&self) -> &[SizeBin] {
        &self.bins
    }

    pub fn sizes(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.size).collect()
    }

    pub fn fractions(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.mass_fraction).collect()
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Mass-median size in µm.
    ///
    /// Each bin's mass is centred on its size; the cumulative curve through the
    /// bin centres is interpolated log-linearly to the 50 % level.
    pub fn d50(&self) -> f64 {
        let mut below = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for b in &self.bins {
            let mid = below + b.mass_fraction / 2.0;
            if mid >= 0.5 {
                return match prev {
                    None => b.size,
                    Some((c0, x0)) => {
                        let w = (0.5 - c0) / (mid - c0);
                        (x0.ln() + w * (b.size.ln() - x0.ln())).exp()
                    }
                };
            }
            below += b.mass_fraction;
            if b.mass_fraction > 0.0 {
                prev = Some((mid, b.size));
            }
        }
        self.bins[self.bins.len() - 1].size
    }
}

impl TryFrom<Vec<SizeBin>> for SizeDistribution {
    type Error = DissolutionError;

    fn try_from(bins: Vec<SizeBin>) -> Result<Self, Self::Error> {
        Self::new(bins)
    }
}

impl From<SizeDistribution> for Vec<SizeBin> {
    fn from(psd: SizeDistribution) -> Self {
        psd.bins
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// Log-normal mass distribution with mass median `d50` (µm) and geometric
/// standard deviation `geo_sigma`, discretised into `n_bins` geometric bins
/// spanning ±3 log-standard-deviations.
pub fn psd_from_lognormal(
    d50: f64,
    geo_sigma: f64,
    n_bins: usize,
) -> Result<SizeDistribution, DissolutionError> {
    if !(d50.is_finite() && d50 > 0.0) {
        return Err(DissolutionError::InvalidInput(format!("d50 must be > 0, got {d50}")));
    }
    if !(geo_sigma.is_finite() && geo_sigma >= 1.0) {
        return Err(DissolutionError::InvalidInput(format!(
            "geometric sigma must be >= 1, got {geo_sigma}"
        )));
    }
    if n_bins == 0 {
        return Err(DissolutionError::InvalidInput("need at least one bin".into()));
    }
    let sigma = geo_sigma.ln();
    if n_bins == 1 || sigma < 1e-12 {
        return SizeDistribution::monodisperse(d50);
    }
    let width = 6.0 * sigma / n_bins as f64;
    let edge_z = |i: usize| -3.0 + 6.0 * i as f64 / n_bins as f64;
    let sizes: Vec<f64> = (0..n_bins)
        .map(|i| (d50.ln() - 3.0 * sigma + (i as f64 + 0.5) * width).exp())
        .collect();
    let weights: Vec<f64> = (0..n_bins)
        .map(|i| std_normal_cdf(edge_z(i + 1)) - std_normal_cdf(edge_z(i)))
        .collect();
    SizeDistribution::normalized(&sizes, &weights)
}

/// Powder-level properties implied by a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedMetrics {
    /// Specific surface area, m²/g.
    pub ssa: f64,
    /// Mass-weighted volume-equivalent diameter, µm.
    pub vol_eq_size: f64,
}

pub fn derived_metrics(
    psd: &SizeDistribution,
    morph: &ParticleMorphology,
    drug: &DrugSubstance,
) -> DerivedMetrics {
    let rho = drug.density_si();
    // m²/kg -> m²/g
    let ssa = psd
        .bins()
        .iter()
        .map(|b| b.mass_fraction * morph.psi_a / (morph.psi_v * rho * b.size * 1e-6))
        .sum::<f64>()
        / 1000.0;
    let to_sphere = (6.0 * morph.psi_v / PI).cbrt();
    let vol_eq_size = psd
        .bins()
        .iter()
        .map(|b| b.mass_fraction * b.size * to_sphere)
        .sum();
    DerivedMetrics { ssa, vol_eq_size }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Inverse of the standard normal CDF by bisection on erf, test-only.
    fn lognormal_mass_quantile_bounds(d50: f64, geo_sigma: f64, q: f64) -> f64 {
        let (mut lo, mut hi) = (-10.0f64, 10.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if std_normal_cdf(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        d50 * (0.5 * (lo + hi) * geo_sigma.ln()).exp()
    }

    #[test]
    fn degenerate_lognormal_is_single_bin() {
        let psd = psd_from_lognormal(97.5, 1.0, 50).unwrap();
        assert_eq!(psd.len(), 1);
        assert_eq!(psd.bins()[0], SizeBin { size: 97.5, mass_fraction: 1.0 });
    }

    #[test]
    fn lognormal_fractions_and_median() {
        let psd = psd_from_lognormal(97.5, 1.5, 50).unwrap();
        assert_eq!(psd.len(), 50);
        let total: f64 = psd.fractions().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        let median = psd.d50();
        assert!((95.6..=99.5).contains(&median), "median {median}");
        // numerical 50 % quantile of the continuous distribution
        let q50 = lognormal_mass_quantile_bounds(97.5, 1.5, 0.5);
        assert!((median - q50).abs() / q50 < 0.02);
        // bins span ±3 log-standard deviations
        let lo = psd.sizes()[0];
        let hi = *psd.sizes().last().unwrap();
        assert!(lo > 97.5 * 1.5f64.powf(-3.0) && hi < 97.5 * 1.5f64.powf(3.0));
    }

    #[test]
    fn lognormal_scaling() {
        let small = psd_from_lognormal(45.0, 1.5, 50).unwrap();
        let large = psd_from_lognormal(200.0, 1.5, 50).unwrap();
        let m = large.d50();
        assert!(small.sizes().iter().all(|&x| x < m));
    }

    #[test]
    fn median_within_two_percent_for_many_bins() {
        for &(d50, gs) in &[(20.0, 1.2), (120.0, 1.6), (300.0, 2.0), (45.0, 1.5)] {
            for n in [30, 31, 50, 80] {
                let psd = psd_from_lognormal(d50, gs, n).unwrap();
                assert!((psd.d50() - d50).abs() / d50 < 0.02, "{d50} {gs} {n}");
            }
        }
    }

    #[test]
    fn distribution_validation() {
        let bad_order = vec![
            SizeBin { size: 2.0, mass_fraction: 0.5 },
            SizeBin { size: 1.0, mass_fraction: 0.5 },
        ];
        assert!(SizeDistribution::new(bad_order).is_err());
        let bad_sum = vec![SizeBin { size: 1.0, mass_fraction: 0.9 }];
        assert!(SizeDistribution::new(bad_sum).is_err());
        let negative = vec![
            SizeBin { size: 1.0, mass_fraction: 1.5 },
            SizeBin { size: 2.0, mass_fraction: -0.5 },
        ];
        assert!(SizeDistribution::new(negative).is_err());
        assert!(SizeDistribution::monodisperse(0.0).is_err());
    }

    #[test]
    fn d50_of_two_bins() {
        let psd = SizeDistribution::normalized(&[10.0, 40.0], &[1.0, 1.0]).unwrap();
        // halfway between the bin centres in log space
        assert!((psd.d50() - 20.0).abs() < 1e-9);
        let skewed = SizeDistribution::normalized(&[10.0, 40.0, 90.0], &[0.7, 0.2, 0.1]).unwrap();
        assert!(skewed.d50() > 10.0 && skewed.d50() < 40.0);
    }

    #[test]
    fn ssa_of_monodisperse_sphere() {
        let drug = DrugSubstance::hydrochlorothiazide();
        let sphere = ParticleMorphology::sphere();
        let one = derived_metrics(&SizeDistribution::monodisperse(1.0).unwrap(), &sphere, &drug);
        // 6 / (1512 kg/m³ · 1e-6 m) = 3968 m²/kg
        assert!((one.ssa - 6.0 / (1512.0 * 1e-6) / 1000.0).abs() < 1e-12);
        assert!((one.ssa - 3.97).abs() < 5e-3);
        assert!((one.vol_eq_size - 1.0).abs() < 1e-12);
        let ten = derived_metrics(&SizeDistribution::monodisperse(10.0).unwrap(), &sphere, &drug);
        assert!((ten.ssa - one.ssa / 10.0).abs() < 1e-12);
    }
}
