//! Chronologically-constrained acquisition: a Dirichlet prior biased toward
//! earlier time steps, updated by informativeness draws, with a Thompson-style
//! selection of the next step; plus consecutive acquisition that stops at a
//! calibrated confidence threshold.

use crate::acquisition::{predict, Prediction};
use crate::calibration::CalibrationMap;
use crate::cmi::cmi_classification_block;
use crate::error::{ChronoError, Error, ModelError};
use crate::model::Engine;
use crate::state::ObservedState;
use crate::util::substream;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

pub const DEFAULT_ALPHA: f64 = 10.0;

/// Acquisition state over a T-step series with `step_width` features per
/// step. Acquired step indices must strictly increase.
#[derive(Debug, Clone)]
pub struct ChronoState {
    pub t_steps: usize,
    pub step_width: usize,
    pub state: ObservedState,
    last_step: Option<usize>,
}

impl ChronoState {
    pub fn new(t_steps: usize, step_width: usize) -> Self {
        assert!(t_steps >= 1 && step_width >= 1);
        Self {
            t_steps,
            step_width,
            state: ObservedState::empty(t_steps * step_width),
            last_step: None,
        }
    }

    pub fn features_of_step(&self, t: usize) -> Vec<usize> {
        (t * self.step_width..(t + 1) * self.step_width).collect()
    }

    pub fn max_step(&self) -> Option<usize> {
        self.last_step
    }

    /// Time steps still acquirable: everything after the latest one.
    pub fn remaining_steps(&self) -> Vec<usize> {
        let from = self.last_step.map_or(0, |t| t + 1);
        (from..self.t_steps).collect()
    }

    pub fn acquire_step(&self, t: usize, values: &[f64]) -> Result<Self, ChronoError> {
        assert_eq!(values.len(), self.step_width);
        if t >= self.t_steps || self.last_step.is_some_and(|last| t <= last) {
            return Err(ChronoError::NotChronological {
                step: t,
                last: self.last_step.map_or(-1, |l| l as i64),
            });
        }
        let mut state = self.state.clone();
        for (k, &v) in self.features_of_step(t).iter().zip(values) {
            state = state.acquire(*k, v).expect("chronological steps never repeat");
        }
        Ok(Self { t_steps: self.t_steps, step_width: self.step_width, state, last_step: Some(t) })
    }
}

/// Dirichlet over the remaining time steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams {
    pub support: Vec<usize>,
    pub concentrations: Vec<f64>,
}

/// Prior concentration α·(T − t) for each remaining step t, so earlier
/// steps start more probable.
pub fn prior_params(
    t_steps: usize,
    max_observed: Option<usize>,
    alpha: f64,
) -> Result<DirichletParams, ChronoError> {
    assert!(alpha > 0.0);
    let from = max_observed.map_or(0, |t| t + 1);
    if from >= t_steps {
        return Err(ChronoError::NoRemainingSteps);
    }
    let support: Vec<usize> = (from..t_steps).collect();
    let concentrations = support.iter().map(|&t| alpha * (t_steps - t) as f64).collect();
    Ok(DirichletParams { support, concentrations })
}

/// Conjugate update: concentrations plus per-step counts.
pub fn posterior_params(
    prior: &DirichletParams,
    counts: &[usize],
) -> Result<DirichletParams, ChronoError> {
    if counts.len() != prior.support.len() {
        return Err(ChronoError::Misaligned);
    }
    Ok(DirichletParams {
        support: prior.support.clone(),
        concentrations: prior
            .concentrations
            .iter()
            .zip(counts)
            .map(|(&c, &n)| c + n as f64)
            .collect(),
    })
}

/// N categorical draws with weight exp(max(CMI, 0)) per step. Negative MC
/// noise is clamped before exponentiation so it cannot invert preferences.
pub fn draw_counts_from_cmi(cmis: &[f64], n_draws: usize, rng: &mut impl Rng) -> Vec<usize> {
    let weights: Vec<f64> = cmis.iter().map(|&c| c.max(0.0).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut counts = vec![0usize; cmis.len()];
    for _ in 0..n_draws {
        let mut u: f64 = rng.random::<f64>() * total;
        let mut pick = cmis.len() - 1;
        for (k, &w) in weights.iter().enumerate() {
            if u < w {
                pick = k;
                break;
            }
            u -= w;
        }
        counts[pick] += 1;
    }
    counts
}

/// Scores each remaining step's feature block by CMI and converts the
/// soft-maxed informativeness into N draws.
pub fn informativeness_counts(
    engine: &Engine,
    chrono: &ChronoState,
    n_draws: usize,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<usize>, Error> {
    let ccm = engine.as_class_conditional().ok_or(ModelError::WrongEngine)?;
    let remaining = chrono.remaining_steps();
    if remaining.is_empty() {
        return Err(ChronoError::NoRemainingSteps.into());
    }
    let mut cmis = Vec::with_capacity(remaining.len());
    for &t in &remaining {
        let block = chrono.features_of_step(t);
        cmis.push(cmi_classification_block(ccm, &block, &chrono.state, n_samples, seed)?.value);
    }
    let mut rng = substream(seed, &[0xD12A, chrono.max_step().map_or(0, |t| t as u64 + 1)]);
    Ok(draw_counts_from_cmi(&cmis, n_draws, &mut rng))
}

/// One Dirichlet sample via normalized Gamma draws; returns the most likely
/// step (ties, a measure-zero event, go to the earliest).
pub fn select_time_step(post: &DirichletParams, seed: u64) -> usize {
    let mut rng = substream(seed, &[0x5E1E]);
    let draws: Vec<f64> = post
        .concentrations
        .iter()
        .map(|&c| Gamma::new(c, 1.0).expect("positive concentration").sample(&mut rng))
        .collect();
    let total: f64 = draws.iter().sum();
    let mut best = 0;
    for (k, &g) in draws.iter().enumerate() {
        if g / total > draws[best] / total {
            best = k;
        }
    }
    post.support[best]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ChronoPolicy {
    /// Informativeness-updated Dirichlet posterior sampling.
    Dirichlet { alpha: f64 },
    /// Uniform choice among remaining steps (baseline).
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChronoStepRecord {
    pub selected_step: usize,
    pub prediction: Prediction,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChronoTrace {
    pub steps: Vec<ChronoStepRecord>,
}

impl ChronoTrace {
    pub fn selected_steps(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.selected_step).collect()
    }
}

/// Budgeted chronological acquisition. N (the informativeness draw count)
/// defaults to 5 × the number of remaining steps.
#[allow(clippy::too_many_arguments)]
pub fn run_chrono_episode(
    engine: &Engine,
    row: &[f64],
    t_steps: usize,
    step_width: usize,
    policy: ChronoPolicy,
    budget: usize,
    n_draws: Option<usize>,
    n_samples: usize,
    seed: u64,
) -> Result<ChronoTrace, Error> {
    assert_eq!(row.len(), t_steps * step_width);
    let mut chrono = ChronoState::new(t_steps, step_width);
    let mut steps = Vec::new();
    for step_idx in 0..budget {
        let remaining = chrono.remaining_steps();
        if remaining.is_empty() {
            break;
        }
        let t = match policy {
            ChronoPolicy::Dirichlet { alpha } => {
                let prior = prior_params(t_steps, chrono.max_step(), alpha)?;
                let n = n_draws.unwrap_or(5 * remaining.len());
                let counts =
                    informativeness_counts(engine, &chrono, n, n_samples, seed)?;
                let post = posterior_params(&prior, &counts)?;
                select_time_step(&post, seed.wrapping_add(0x9E37 * (step_idx as u64 + 1)))
            }
            ChronoPolicy::Uniform => {
                let mut rng = substream(seed, &[0x04F0, step_idx as u64]);
                remaining[rng.random_range(0..remaining.len())]
            }
        };
        let values: Vec<f64> = chrono.features_of_step(t).iter().map(|&f| row[f]).collect();
        chrono = chrono.acquire_step(t, &values)?;
        let prediction = predict(engine, &chrono.state, None)?;
        let confidence = prediction.confidence().expect("classification task");
        steps.push(ChronoStepRecord { selected_step: t, prediction, confidence });
    }
    Ok(ChronoTrace { steps })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsecutiveRun {
    /// Last acquired step index (0-based).
    pub t_stop: usize,
    pub prediction: Prediction,
    pub raw_confidences: Vec<f64>,
    pub calibrated_confidences: Vec<f64>,
}

/// Acquires steps 0, 1, 2, … in order and stops at the first step whose
/// calibrated max-class probability reaches tau, else runs to T−1.
pub fn run_consecutive(
    engine: &Engine,
    row: &[f64],
    tau: f64,
    calib: &CalibrationMap,
    t_steps: usize,
    step_width: usize,
) -> Result<ConsecutiveRun, Error> {
    assert!(tau <= 1.0);
    assert_eq!(calib.num_steps(), t_steps);
    let mut chrono = ChronoState::new(t_steps, step_width);
    let mut raw = Vec::new();
    let mut cal = Vec::new();
    let mut prediction = None;
    let mut t_stop = t_steps - 1;
    for t in 0..t_steps {
        let values: Vec<f64> = chrono.features_of_step(t).iter().map(|&f| row[f]).collect();
        chrono = chrono.acquire_step(t, &values)?;
        let p = predict(engine, &chrono.state, None)?;
        let raw_conf = p.confidence().expect("classification task");
        let cal_conf = calib.apply(t, raw_conf);
        raw.push(raw_conf);
        cal.push(cal_conf);
        prediction = Some(p);
        if cal_conf >= tau {
            t_stop = t;
            break;
        }
    }
    Ok(ConsecutiveRun {
        t_stop,
        prediction: prediction.expect("at least one step runs"),
        raw_confidences: raw,
        calibrated_confidences: cal,
    })
}
