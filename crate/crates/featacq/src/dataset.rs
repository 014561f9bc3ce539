//! Datasets, task kinds, deterministic splits, and min-max normalization.

use crate::error::DataError;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::util::substream;

/// What the model predicts.
///
/// Classification keeps labels out of the feature matrix; regression stores the
/// target as one coordinate of the joint row vector (`target_index`), so one
/// density model covers features and target together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskKind {
    Classification { num_classes: usize },
    Regression { target_index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub rows: DMatrix<f64>,
    /// Per-row class index for classification; None for regression.
    pub labels: Option<Vec<usize>>,
    pub task: TaskKind,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        rows: DMatrix<f64>,
        labels: Option<Vec<usize>>,
        task: TaskKind,
        feature_names: Vec<String>,
    ) -> Result<Self, DataError> {
        if let TaskKind::Classification { num_classes } = task {
            let labels = labels.as_ref().expect("classification needs labels");
            if let Some(bad) = labels.iter().find(|&&l| l >= num_classes) {
                return Err(DataError::BadLabel(bad.to_string()));
            }
            assert_eq!(labels.len(), rows.nrows());
        }
        assert_eq!(feature_names.len(), rows.ncols());
        Ok(Dataset { rows, labels, task, feature_names })
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn d(&self) -> usize {
        self.rows.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.rows.row(i).iter().cloned().collect()
    }

    fn take(&self, idx: &[usize]) -> Dataset {
        let rows = DMatrix::from_fn(idx.len(), self.d(), |r, c| self.rows[(idx[r], c)]);
        let labels = self.labels.as_ref().map(|ls| idx.iter().map(|&i| ls[i]).collect());
        Dataset { rows, labels, task: self.task, feature_names: self.feature_names.clone() }
    }

    /// Disjoint, exhaustive row partition, deterministic given `seed`.
    /// Sizes are floor(n * ratio) for val/test with the remainder in train.
    pub fn split(
        &self,
        ratios: (f64, f64, f64),
        seed: u64,
    ) -> Result<(Dataset, Dataset, Dataset), DataError> {
        let total = ratios.0 + ratios.1 + ratios.2;
        if (total - 1.0).abs() > 1e-9 {
            return Err(DataError::BadRatios(total));
        }
        if self.n() < 10 {
            return Err(DataError::TooFewRows { got: self.n(), min: 10 });
        }
        let mut idx: Vec<usize> = (0..self.n()).collect();
        let mut rng = substream(seed, &[0x5911]);
        idx.shuffle(&mut rng);
        let n_val = (self.n() as f64 * ratios.1).floor() as usize;
        let n_test = (self.n() as f64 * ratios.2).floor() as usize;
        let n_train = self.n() - n_val - n_test;
        let train = self.take(&idx[..n_train]);
        let val = self.take(&idx[n_train..n_train + n_val]);
        let test = self.take(&idx[n_train + n_val..]);
        Ok((train, val, test))
    }
}

/// Per-column min-max statistics; fit on one split, applied to others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormStats {
    pub fn fit(rows: &DMatrix<f64>) -> NormStats {
        let d = rows.ncols();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for r in 0..rows.nrows() {
            for c in 0..d {
                min[c] = min[c].min(rows[(r, c)]);
                max[c] = max[c].max(rows[(r, c)]);
            }
        }
        NormStats { min, max }
    }

    /// (x - min) / (max - min); constant columns map to 0.
    pub fn apply(&self, rows: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(rows.nrows(), rows.ncols(), |r, c| {
            let range = self.max[c] - self.min[c];
            if range.abs() < 1e-12 {
                0.0
            } else {
                (rows[(r, c)] - self.min[c]) / range
            }
        })
    }
}

/// Normalizes a dataset in place using its own full-row statistics and
/// returns them. Idempotent: a second pass is the identity.
pub fn normalize_full(ds: &mut Dataset) -> NormStats {
    let stats = NormStats::fit(&ds.rows);
    ds.rows = stats.apply(&ds.rows);
    stats
}
