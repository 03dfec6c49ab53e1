use serde::{Deserialize, Serialize};

use crate::record::{Feature, FormulationRecord};

/// Below this store size the weights fall back to uniform.
pub const MIN_RECORDS_FOR_ADAPTATION: usize = 5;
pub const SCALE_FLOOR: f64 = 1e-12;

/// Per-feature weights (summing to 1) and spreads used by the retrieval kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalWeights {
    pub weights: [f64; 8],
    pub scales: [f64; 8],
}

impl RetrievalWeights {
    pub fn weight(&self, f: Feature) -> f64 {
        self.weights[f as usize]
    }

    pub fn scale(&self, f: Feature) -> f64 {
        self.scales[f as usize]
    }

    /// Equal weight on each of `features`, zero elsewhere.
    pub fn uniform_over(features: &[Feature], scales: [f64; 8]) -> Self {
        let mut weights = [0.0; 8];
        let share = 1.0 / features.len().max(1) as f64;
        for &f in features {
            weights[f as usize] = share;
        }
        Self { weights, scales }
    }

    /// Keeps only `features` and renormalises. Falls back to uniform over
    /// them when all their weights are zero.
    pub fn restricted_to(&self, features: &[Feature]) -> Self {
        let total: f64 = features.iter().map(|&f| self.weight(f)).sum();
        if total <= 0.0 {
            return Self::uniform_over(features, self.scales);
        }
        let mut weights = [0.0; 8];
        for &f in features {
            weights[f as usize] = self.weight(f) / total;
        }
        Self {
            weights,
            scales: self.scales,
        }
    }
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median absolute deviation; mean absolute deviation when the MAD is zero
/// but the values are not all equal. Floored at [`SCALE_FLOOR`].
pub fn robust_scale(values: &[f64]) -> f64 {
    if values.is_empty() {
        return SCALE_FLOOR;
    }
    let mut v = values.to_vec();
    let med = median(&mut v);
    let mut dev: Vec<f64> = values.iter().map(|x| (x - med).abs()).collect();
    let mad = median(&mut dev);
    let scale = if mad > 0.0 {
        mad
    } else {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        values.iter().map(|x| (x - mean).abs()).sum::<f64>() / values.len() as f64
    };
    scale.max(SCALE_FLOOR)
}

/// Ranks starting at 1, ties get their average rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; 0 when either side has no variation.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Derives retrieval weights from the records.
///
/// Scales are robust spreads of each feature. Weights are proportional to
/// the absolute Spearman correlation between the feature and the released
/// percentage at 1 hr. Small stores (fewer than
/// [`MIN_RECORDS_FOR_ADAPTATION`]) and stores where no feature correlates
/// get uniform weights over the features that vary.
pub fn adapt_weights(records: &[FormulationRecord]) -> RetrievalWeights {
    let mut scales = [SCALE_FLOOR; 8];
    let mut varying = Vec::new();
    let columns: Vec<Vec<f64>> = Feature::ALL
        .iter()
        .map(|&f| records.iter().map(|r| r.features.get(f)).collect())
        .collect();
    for (f, column) in Feature::ALL.iter().zip(&columns) {
        scales[*f as usize] = robust_scale(column);
        if column.iter().any(|&v| v != column[0]) {
            varying.push(*f);
        }
    }
    if varying.is_empty() {
        return RetrievalWeights::uniform_over(&Feature::ALL, scales);
    }
    if records.len() < MIN_RECORDS_FOR_ADAPTATION {
        return RetrievalWeights::uniform_over(&varying, scales);
    }
    let released: Vec<f64> = records.iter().map(|r| r.profile.interpolate_clamped(1.0)).collect();
    let mut weights = [0.0; 8];
    for &f in &varying {
        let rho = spearman(&columns[f as usize], &released).abs();
        weights[f as usize] = if rho.is_finite() { rho } else { 0.0 };
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return RetrievalWeights::uniform_over(&varying, scales);
    }
    for w in &mut weights {
        *w /= total;
    }
    RetrievalWeights { weights, scales }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spread_statistics() {
        assert_eq!(robust_scale(&[1.0, 2.0, 3.0, 4.0, 100.0]), 1.0);
        // MAD is 0 here, mean absolute deviation is 0.32
        assert!((robust_scale(&[1.0, 1.0, 1.0, 1.0, 2.0]) - 0.32).abs() < 1e-12);
        assert_eq!(robust_scale(&[5.0, 5.0]), SCALE_FLOOR);
    }

    #[test]
    fn spearman_cases() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 1.0, 0.0]), -1.0);
        assert_eq!(spearman(&[1.0, 1.0, 1.0], &[3.0, 1.0, 0.0]), 0.0);
        // monotone but non-linear
        assert_eq!(spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 8.0, 27.0, 64.0]), 1.0);
        assert_eq!(ranks(&[2.0, 1.0, 2.0]), vec![2.5, 1.0, 2.5]);
    }
}
