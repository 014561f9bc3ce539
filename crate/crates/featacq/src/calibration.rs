//! Per-time-step confidence calibration by histogram binning: equal-width
//! bins over [0,1] map raw max-class probability to empirical accuracy,
//! smoothed to be monotone so higher raw confidence never calibrates lower.

use crate::error::ChronoError;
use serde::{Deserialize, Serialize};

pub const DEFAULT_BINS: usize = 10;

/// One calibrated value per bin per time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMap {
    bins: usize,
    per_step: Vec<Vec<f64>>,
}

pub fn bin_of(confidence: f64, bins: usize) -> usize {
    ((confidence.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1)
}

/// Weighted pool-adjacent-violators: smallest change to make values
/// non-decreasing in bin order.
fn isotonic(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, f64, usize)> = Vec::new(); // (mean, weight, count)
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() >= 2 {
            let (v2, w2, c2) = blocks[blocks.len() - 1];
            let (v1, w1, c1) = blocks[blocks.len() - 2];
            if v1 <= v2 {
                break;
            }
            blocks.pop();
            blocks.pop();
            let w = w1 + w2;
            blocks.push(((v1 * w1 + v2 * w2) / w, w, c1 + c2));
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (v, _, c) in blocks {
        out.extend(std::iter::repeat_n(v, c));
    }
    out
}

/// Fits one bin table per time step from validation (confidence, correct)
/// pairs. Empty bins inherit the nearest populated bin's value (ties to the
/// lower bin).
pub fn fit_calibration(
    val_runs: &[Vec<(f64, bool)>],
    bins: usize,
) -> Result<CalibrationMap, ChronoError> {
    assert!(bins >= 2);
    let mut per_step = Vec::with_capacity(val_runs.len());
    for pairs in val_runs {
        if pairs.is_empty() {
            return Err(ChronoError::EmptyValidation);
        }
        let mut hits = vec![0.0f64; bins];
        let mut counts = vec![0.0f64; bins];
        for &(conf, correct) in pairs {
            let b = bin_of(conf, bins);
            counts[b] += 1.0;
            hits[b] += f64::from(correct);
        }
        let populated: Vec<usize> = (0..bins).filter(|&b| counts[b] > 0.0).collect();
        let raw: Vec<f64> = populated.iter().map(|&b| hits[b] / counts[b]).collect();
        let w: Vec<f64> = populated.iter().map(|&b| counts[b]).collect();
        let smooth = isotonic(&raw, &w);
        let mut table = vec![f64::NAN; bins];
        for (&b, &v) in populated.iter().zip(&smooth) {
            table[b] = v;
        }
        for b in 0..bins {
            if table[b].is_nan() {
                let nearest = populated
                    .iter()
                    .copied()
                    .min_by_key(|&p| (p.abs_diff(b), p))
                    .expect("at least one populated bin");
                table[b] = table[nearest];
            }
        }
        per_step.push(table);
    }
    Ok(CalibrationMap { bins, per_step })
}

impl CalibrationMap {
    pub fn num_steps(&self) -> usize {
        self.per_step.len()
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn bin_values(&self, t: usize) -> &[f64] {
        &self.per_step[t]
    }

    /// Calibrated confidence for a raw confidence at time step t.
    pub fn apply(&self, t: usize, confidence: f64) -> f64 {
        self.per_step[t][bin_of(confidence, self.bins)]
    }
}

/// Expected calibration error: Σ_b (n_b / n) · |accuracy_b − confidence_b|.
pub fn ece(pairs: &[(f64, bool)], bins: usize) -> f64 {
    assert!(!pairs.is_empty());
    let mut hits = vec![0.0f64; bins];
    let mut confs = vec![0.0f64; bins];
    let mut counts = vec![0.0f64; bins];
    for &(conf, correct) in pairs {
        let b = bin_of(conf, bins);
        counts[b] += 1.0;
        confs[b] += conf;
        hits[b] += f64::from(correct);
    }
    let n: f64 = counts.iter().sum();
    (0..bins)
        .filter(|&b| counts[b] > 0.0)
        .map(|b| counts[b] / n * (hits[b] / counts[b] - confs[b] / counts[b]).abs())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::substream;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn isotonic_pools_violators() {
        let got = isotonic(&[0.3, 0.1, 0.5], &[1.0, 1.0, 1.0]);
        assert_relative_eq!(got[0], 0.2);
        assert_relative_eq!(got[1], 0.2);
        assert_relative_eq!(got[2], 0.5);
        // already monotone input is untouched
        assert_eq!(isotonic(&[0.1, 0.2, 0.9], &[1.0, 2.0, 1.0]), vec![0.1, 0.2, 0.9]);
    }

    #[test]
    fn perfectly_calibrated_pairs_give_identity_map() {
        // in each bin, fraction correct equals the bin-center confidence
        let mut pairs = Vec::new();
        for b in 0..10 {
            let center = (b as f64 + 0.5) / 10.0;
            let k = 20;
            let correct = (center * k as f64).round() as usize;
            for i in 0..k {
                pairs.push((center, i < correct));
            }
        }
        let map = fit_calibration(&[pairs], 10).unwrap();
        for b in 0..10 {
            let center = (b as f64 + 0.5) / 10.0;
            assert!((map.apply(0, center) - center).abs() <= 0.05, "bin {b}");
        }
    }

    #[test]
    fn all_correct_maps_populated_bins_to_one() {
        let pairs: Vec<(f64, bool)> = (0..50).map(|i| (i as f64 / 50.0, true)).collect();
        let map = fit_calibration(&[pairs], 10).unwrap();
        for b in 0..10 {
            assert_relative_eq!(map.bin_values(0)[b], 1.0);
        }
    }

    #[test]
    fn empty_bins_inherit_nearest_value() {
        // only bins 1 (acc 0.4) and 8 (acc 1.0) are populated
        let mut pairs = Vec::new();
        for i in 0..5 {
            pairs.push((0.15, i < 2));
        }
        for _ in 0..5 {
            pairs.push((0.85, true));
        }
        let map = fit_calibration(&[pairs], 10).unwrap();
        let t = map.bin_values(0);
        assert_relative_eq!(t[0], 0.4);
        assert_relative_eq!(t[4], 0.4); // distance 3 vs 4
        assert_relative_eq!(t[5], 1.0); // distance 4 vs 3
        assert_relative_eq!(t[9], 1.0);
        // monotone after fill
        for b in 1..10 {
            assert!(t[b] >= t[b - 1]);
        }
    }

    #[test]
    fn calibrated_confidence_is_monotone_in_raw_confidence() {
        let mut rng = substream(3, &[0xCA]);
        let pairs: Vec<(f64, bool)> = (0..500)
            .map(|_| {
                let c: f64 = rng.random();
                // deliberately noisy, non-monotone accuracy profile
                let p = 0.5 + 0.4 * (c * 6.0).sin();
                (c, rng.random::<f64>() < p)
            })
            .collect();
        let map = fit_calibration(&[pairs], 10).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=100 {
            let v = map.apply(0, k as f64 / 100.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn calibration_reduces_ece_of_overconfident_model() {
        let mut rng = substream(5, &[0xCB]);
        let pairs: Vec<(f64, bool)> = (0..2000)
            .map(|_| {
                let c: f64 = 0.5 + 0.5 * rng.random::<f64>();
                (c, rng.random::<f64>() < 0.6 * c)
            })
            .collect();
        let map = fit_calibration(std::slice::from_ref(&pairs), 10).unwrap();
        let before = ece(&pairs, 10);
        let after_pairs: Vec<(f64, bool)> =
            pairs.iter().map(|&(c, ok)| (map.apply(0, c), ok)).collect();
        let after = ece(&after_pairs, 10);
        assert!(after <= before, "ece went from {before} to {after}");
        assert!(before > 0.2);
        assert!(after < 0.1);
    }

    #[test]
    fn missing_step_pairs_are_rejected() {
        assert!(matches!(
            fit_calibration(&[vec![(0.5, true)], vec![]], 10),
            Err(ChronoError::EmptyValidation)
        ));
    }

    #[test]
    fn per_step_tables_are_independent() {
        let map = fit_calibration(
            &[vec![(0.95, true), (0.9, true)], vec![(0.95, false), (0.9, false)]],
            10,
        )
        .unwrap();
        assert_relative_eq!(map.apply(0, 0.92), 1.0);
        assert_relative_eq!(map.apply(1, 0.92), 0.0);
    }
}
