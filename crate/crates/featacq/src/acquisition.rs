//! The greedy per-instance acquisition loop: score candidates by CMI,
//! acquire the argmax, predict, stop on budget or confidence. Includes the
//! static-order baseline that fixes one order for every instance.

use crate::cmi::{cmi_classification, cmi_regression};
use crate::error::{AcquireError, Error, ModelError};
use crate::graph::Dag;
use crate::model::Engine;
use crate::state::ObservedState;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Policy {
    Dynamic,
    /// A fixed feature order applied to every instance.
    Static(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StoppingRule {
    Budget(usize),
    /// Stop once max-class probability reaches the threshold. Classification
    /// only.
    Confidence(f64),
    /// Run until no candidates remain.
    Exhaustion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Prediction {
    Class { class: usize, posterior: Vec<f64> },
    Value(f64),
}

impl Prediction {
    /// Max-class probability; None for regression.
    pub fn confidence(&self) -> Option<f64> {
        match self {
            Prediction::Class { posterior, .. } => {
                Some(posterior.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            }
            Prediction::Value(_) => None,
        }
    }

    pub fn class(&self) -> Option<usize> {
        match self {
            Prediction::Class { class, .. } => Some(*class),
            Prediction::Value(_) => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Prediction::Value(v) => Some(*v),
            Prediction::Class { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub feature: usize,
    pub cmi: f64,
}

/// One acquisition step. `step` 0 is the prior-only record: nothing chosen,
/// no candidates scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub chosen: Option<usize>,
    pub acquired_value: Option<f64>,
    /// Candidates offered to the policy at this step.
    pub candidates: Vec<usize>,
    /// Unobserved features removed by the pruner at this step.
    pub pruned: Vec<usize>,
    pub scores: Vec<CandidateScore>,
    pub prediction: Prediction,
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub steps: Vec<StepRecord>,
    pub steps_taken: usize,
}

impl EpisodeTrace {
    pub fn final_prediction(&self) -> &Prediction {
        &self.steps.last().expect("trace always has the step-0 record").prediction
    }

    /// Prediction after exactly k acquisitions, or the final one if the
    /// episode stopped earlier.
    pub fn prediction_at(&self, k: usize) -> &Prediction {
        &self.steps[k.min(self.steps_taken)].prediction
    }
}

/// Per-instance RNG seed: base seed plus the row index.
pub fn instance_seed(base: u64, row: usize) -> u64 {
    base.wrapping_add(row as u64)
}

/// Posterior argmax for classifiers (ties to the lowest class index);
/// conditional mean of the target column for regression.
pub fn predict(
    engine: &Engine,
    state: &ObservedState,
    y_slot: Option<usize>,
) -> Result<Prediction, ModelError> {
    match y_slot {
        None => {
            let posterior = engine
                .class_posterior(state.observed(), state.values())
                .ok_or(ModelError::WrongEngine)?;
            let mut class = 0;
            for (k, &p) in posterior.iter().enumerate() {
                if p > posterior[class] {
                    class = k;
                }
            }
            Ok(Prediction::Class { class, posterior })
        }
        Some(y) => {
            let cd = engine.condition(state.observed(), state.values(), &[y])?;
            Ok(Prediction::Value(cd.mean()[0]))
        }
    }
}

fn score_feature(
    engine: &Engine,
    i: usize,
    state: &ObservedState,
    y_slot: Option<usize>,
    n_samples: usize,
    seed: u64,
) -> Result<f64, ModelError> {
    match y_slot {
        None => {
            let ccm = engine.as_class_conditional().ok_or(ModelError::WrongEngine)?;
            Ok(cmi_classification(ccm, i, state, n_samples, seed)?.value)
        }
        Some(y) => Ok(cmi_regression(engine, i, state, y, n_samples, seed)?.value),
    }
}

/// Scores every candidate and returns the argmax (ties to the lowest
/// feature index) together with all scores for the trace.
pub fn next_feature_dynamic(
    engine: &Engine,
    state: &ObservedState,
    candidates: &[usize],
    y_slot: Option<usize>,
    n_samples: usize,
    seed: u64,
) -> Result<(usize, Vec<CandidateScore>), Error> {
    if candidates.is_empty() {
        return Err(AcquireError::NoCandidates.into());
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    let mut scores = Vec::with_capacity(sorted.len());
    for &i in &sorted {
        let cmi = score_feature(engine, i, state, y_slot, n_samples, seed)?;
        scores.push(CandidateScore { feature: i, cmi });
    }
    let mut best = 0;
    for (k, s) in scores.iter().enumerate() {
        if s.cmi > scores[best].cmi {
            best = k;
        }
    }
    Ok((scores[best].feature, scores))
}

/// Runs one acquisition episode on an instance whose true feature values
/// are `row`. A pruner DAG (features plus a target node) drops candidates
/// d-separated from the target given the currently observed set.
#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    engine: &Engine,
    row: &[f64],
    policy: &Policy,
    stop: StoppingRule,
    pruner: Option<&Dag>,
    y_slot: Option<usize>,
    n_samples: usize,
    seed: u64,
) -> Result<EpisodeTrace, Error> {
    let dim = engine.dim();
    assert_eq!(row.len(), dim);
    assert_eq!(y_slot.is_none(), engine.is_classifier());
    if let StoppingRule::Confidence(tau) = stop {
        assert!(tau > 0.0 && tau <= 1.0);
        if !engine.is_classifier() {
            return Err(AcquireError::ConfidenceNeedsClassifier.into());
        }
    }
    // the pruner's target node: the label node appended after the features
    // for classification, the target column itself for regression
    let y_node = y_slot.unwrap_or(dim);
    if let Some(dag) = pruner {
        let want = if y_slot.is_none() { dim + 1 } else { dim };
        assert_eq!(dag.num_nodes(), want, "pruner node count mismatch");
    }
    let mut state = ObservedState::empty(dim);
    let mut steps = Vec::new();
    let prior = predict(engine, &state, y_slot)?;
    let prior_conf = prior.confidence();
    steps.push(StepRecord {
        step: 0,
        chosen: None,
        acquired_value: None,
        candidates: Vec::new(),
        pruned: Vec::new(),
        scores: Vec::new(),
        prediction: prior,
        confidence: prior_conf,
    });
    let mut taken = 0;
    loop {
        match stop {
            StoppingRule::Budget(b) => {
                if taken >= b {
                    break;
                }
            }
            StoppingRule::Confidence(tau) => {
                if steps.last().unwrap().confidence.unwrap_or(0.0) >= tau {
                    break;
                }
            }
            StoppingRule::Exhaustion => {}
        }
        let unobserved: Vec<usize> =
            state.unobserved().into_iter().filter(|&i| Some(i) != y_slot).collect();
        if unobserved.is_empty() {
            break;
        }
        let (candidates, pruned) = match pruner {
            Some(dag) => {
                let kept = dag.prune_candidates(y_node, state.observed(), &unobserved)?;
                let dropped =
                    unobserved.iter().copied().filter(|i| !kept.contains(i)).collect();
                (kept, dropped)
            }
            None => (unobserved, Vec::new()),
        };
        if candidates.is_empty() {
            break;
        }
        let (chosen, scores) = match policy {
            Policy::Dynamic => {
                next_feature_dynamic(engine, &state, &candidates, y_slot, n_samples, seed)?
            }
            Policy::Static(order) => {
                let next = order
                    .iter()
                    .copied()
                    .find(|f| candidates.contains(f))
                    .ok_or(AcquireError::NoCandidates)?;
                (next, Vec::new())
            }
        };
        let value = row[chosen];
        state = state.acquire(chosen, value)?;
        taken += 1;
        let prediction = predict(engine, &state, y_slot)?;
        let confidence = prediction.confidence();
        steps.push(StepRecord {
            step: taken,
            chosen: Some(chosen),
            acquired_value: Some(value),
            candidates,
            pruned,
            scores,
            prediction,
            confidence,
        });
    }
    Ok(EpisodeTrace { steps, steps_taken: taken })
}

/// Greedy static order: at each step, pick the feature with the highest CMI
/// averaged over reference instances, each conditioned on its own values of
/// the features ordered so far.
pub fn static_order(
    engine: &Engine,
    reference: &[Vec<f64>],
    y_slot: Option<usize>,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<usize>, Error> {
    assert!(!reference.is_empty());
    let dim = engine.dim();
    let mut remaining: Vec<usize> = (0..dim).filter(|&i| Some(i) != y_slot).collect();
    let mut states: Vec<ObservedState> = vec![ObservedState::empty(dim); reference.len()];
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let means: Vec<f64> = remaining
            .iter()
            .map(|&f| {
                let total: f64 = states
                    .par_iter()
                    .enumerate()
                    .map(|(r, st)| {
                        score_feature(engine, f, st, y_slot, n_samples, instance_seed(seed, r))
                    })
                    .try_reduce(|| 0.0, |a, b| Ok(a + b))?;
                Ok::<f64, ModelError>(total / states.len() as f64)
            })
            .collect::<Result<_, _>>()?;
        let mut best = 0;
        for (k, &m) in means.iter().enumerate() {
            if m > means[best] {
                best = k;
            }
        }
        let f = remaining.remove(best);
        order.push(f);
        for (r, st) in states.iter_mut().enumerate() {
            *st = st.acquire(f, reference[r][f])?;
        }
    }
    Ok(order)
}
