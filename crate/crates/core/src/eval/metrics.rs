//! Curve alignment and the two comparison statistics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::DissolutionProfile;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("profiles need at least 2 points (reference {reference}, predicted {predicted})")]
    TooFewPoints { reference: usize, predicted: usize },
    #[error("time ranges do not overlap on at least 2 reference points")]
    NoOverlap,
    #[error("reference has zero variance; R² is undefined")]
    DegenerateReference,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Reference and predicted values on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub grid: Vec<f64>,
    pub y: Vec<f64>,
    pub y_hat: Vec<f64>,
}

impl AlignedPair {
    pub fn new(grid: Vec<f64>, y: Vec<f64>, y_hat: Vec<f64>) -> Result<Self, MetricError> {
        if y.len() != y_hat.len() || grid.len() != y.len() {
            return Err(MetricError::LengthMismatch(y.len(), y_hat.len()));
        }
        if y.len() < 2 {
            return Err(MetricError::TooFewPoints {
                reference: y.len(),
                predicted: y_hat.len(),
            });
        }
        Ok(Self { grid, y, y_hat })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn residuals(&self) -> impl Iterator<Item = f64> + '_ {
        self.y.iter().zip(&self.y_hat).map(|(y, yh)| y - yh)
    }

    /// Back to two profiles on the shared grid (used to check idempotence).
    pub fn to_profiles(&self) -> (DissolutionProfile, DissolutionProfile) {
        let make = |vals: &[f64]| {
            let pairs: Vec<(f64, f64)> = self.grid.iter().copied().zip(vals.iter().copied()).collect();
            DissolutionProfile::from_pairs(&pairs).expect("aligned grid is increasing")
        };
        (make(&self.y), make(&self.y_hat))
    }
}

/// Restricts the reference grid to the overlap and interpolates the
/// prediction onto it. Nothing is extrapolated.
pub fn align_profiles(
    reference: &DissolutionProfile,
    predicted: &DissolutionProfile,
) -> Result<AlignedPair, MetricError> {
    if reference.len() < 2 || predicted.len() < 2 {
        return Err(MetricError::TooFewPoints {
            reference: reference.len(),
            predicted: predicted.len(),
        });
    }
    let mut grid = Vec::new();
    let mut y = Vec::new();
    let mut y_hat = Vec::new();
    for p in reference.points() {
        if let Some(v) = predicted.interpolate(p.time) {
            grid.push(p.time);
            y.push(p.released);
            y_hat.push(v);
        }
    }
    if grid.len() < 2 {
        return Err(MetricError::NoOverlap);
    }
    Ok(AlignedPair { grid, y, y_hat })
}

pub fn mse(pair: &AlignedPair) -> f64 {
    pair.residuals().map(|r| r * r).sum::<f64>() / pair.n() as f64
}

pub fn r_squared(pair: &AlignedPair) -> Result<f64, MetricError> {
    let n = pair.n() as f64;
    let mean = pair.y.iter().sum::<f64>() / n;
    let ss_tot: f64 = pair.y.iter().map(|y| (y - mean) * (y - mean)).sum();
    if ss_tot == 0.0 {
        return Err(MetricError::DegenerateReference);
    }
    let ss_res: f64 = pair.residuals().map(|r| r * r).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// MSE between two profiles after alignment on the reference grid.
pub fn profile_mse(reference: &DissolutionProfile, predicted: &DissolutionProfile) -> Result<f64, MetricError> {
    align_profiles(reference, predicted).map(|p| mse(&p))
}
