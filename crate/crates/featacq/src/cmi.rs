//! Conditional mutual information I(x_i; y | x_o): the acquisition reward.
//! Monte Carlo estimators for classification and regression plus an exact
//! Gaussian oracle used for conditional-independence testing.

use crate::classcond::ClassConditionalModel;
use crate::error::ModelError;
use crate::gaussian::GaussianParams;
use crate::model::Engine;
use crate::state::ObservedState;
use crate::util::substream;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimatorKind {
    ClassificationMc,
    RegressionMc,
    GaussianExact,
    DiscreteBruteforce,
}

/// A CMI value in nats. MC estimates may dip slightly negative; exact
/// estimators are non-negative by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmiEstimate {
    pub value: f64,
    pub n_samples: usize,
    pub estimator: EstimatorKind,
}

/// KL(p ‖ q) = Σ p ln(p/q) with 0·ln(0/q) = 0. q must cover p's support.
pub fn kl_discrete(p: &[f64], q: &[f64]) -> Result<f64, ModelError> {
    if p.len() != q.len() {
        return Err(ModelError::SupportMismatch);
    }
    let mut kl = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(ModelError::SupportMismatch);
            }
            kl += pi * (pi / qi).ln();
        }
    }
    Ok(kl)
}

/// Derives the per-candidate RNG stream: seed ⊕ hash of the candidate set.
/// Candidate scoring order therefore cannot affect any estimate.
fn candidate_stream(seed: u64, block: &[usize]) -> rand_chacha::ChaCha8Rng {
    let tags: Vec<u64> = block.iter().map(|&i| i as u64).collect();
    substream(seed, &tags)
}

/// Classification CMI of a feature block:
///   E_{x_b ~ p(x_b | x_o)} KL[ P(y | x_b, x_o) ‖ P(y | x_o) ].
/// The block is sampled from the y-marginalized conditional; the inner
/// expectation over y is the analytic KL over classes (no y sampling).
pub fn cmi_classification_block(
    ccm: &ClassConditionalModel,
    block: &[usize],
    state: &ObservedState,
    n_samples: usize,
    seed: u64,
) -> Result<CmiEstimate, ModelError> {
    assert!(n_samples >= 1);
    if let Some(&b) = block.iter().find(|b| state.is_observed(**b)) {
        return Err(ModelError::AlreadyObserved(b));
    }
    let obs = state.observed();
    let vals = state.values();
    let base = ccm.class_posterior(obs, vals);
    let cd = ccm.feature_marginal_given_obs(block, obs, vals)?;
    let mut rng = candidate_stream(seed, block);
    let mut obs_ext: Vec<usize> = obs.to_vec();
    obs_ext.extend_from_slice(block);
    let mut total = 0.0;
    for _ in 0..n_samples {
        let xb = cd.sample_one(&mut rng);
        let mut vals_ext: Vec<f64> = vals.to_vec();
        vals_ext.extend_from_slice(&xb);
        let post = ccm.class_posterior(&obs_ext, &vals_ext);
        total += kl_discrete(&post, &base)?;
    }
    Ok(CmiEstimate {
        value: total / n_samples as f64,
        n_samples,
        estimator: EstimatorKind::ClassificationMc,
    })
}

/// Single-feature classification CMI (the common case).
pub fn cmi_classification(
    ccm: &ClassConditionalModel,
    i: usize,
    state: &ObservedState,
    n_samples: usize,
    seed: u64,
) -> Result<CmiEstimate, ModelError> {
    cmi_classification_block(ccm, &[i], state, n_samples, seed)
}

/// Regression CMI against a continuous target stored at `y_slot`:
///   E_{(x_i, y) ~ p(x_i, y | x_o)} [ log p(y | x_i, x_o) − log p(y | x_o) ].
/// One joint sample set feeds both log terms (lower variance than two
/// independent sets); p(y | x_i, x_o) is always evaluated at the sampled x_i.
pub fn cmi_regression(
    engine: &Engine,
    i: usize,
    state: &ObservedState,
    y_slot: usize,
    n_samples: usize,
    seed: u64,
) -> Result<CmiEstimate, ModelError> {
    assert!(n_samples >= 1);
    if engine.is_classifier() {
        return Err(ModelError::WrongEngine);
    }
    if state.is_observed(i) {
        return Err(ModelError::AlreadyObserved(i));
    }
    if i == y_slot || state.is_observed(y_slot) {
        return Err(ModelError::TargetObserved);
    }
    let obs = state.observed();
    let vals = state.values();
    let joint = engine.condition(obs, vals, &[i, y_slot])?;
    let marginal_y = engine.condition(obs, vals, &[y_slot])?;
    let mut rng = candidate_stream(seed, &[i]);
    let mut obs_ext: Vec<usize> = obs.to_vec();
    obs_ext.push(i);
    let mut vals_ext: Vec<f64> = vals.to_vec();
    vals_ext.push(0.0);
    let mut total = 0.0;
    for _ in 0..n_samples {
        let xy = joint.sample_one(&mut rng);
        let (x_i, y) = (xy[0], xy[1]);
        *vals_ext.last_mut().unwrap() = x_i;
        let cond_y = engine.condition(&obs_ext, &vals_ext, &[y_slot])?;
        total += cond_y.log_density(&[y])? - marginal_y.log_density(&[y])?;
    }
    Ok(CmiEstimate {
        value: total / n_samples as f64,
        n_samples,
        estimator: EstimatorKind::RegressionMc,
    })
}

/// Exact Gaussian CMI −½ ln(1 − ρ²) where ρ is the partial correlation of
/// (i, j) given `cond`, from the conditional covariance. Always ≥ 0.
pub fn cmi_gaussian_exact(
    g: &GaussianParams,
    i: usize,
    j: usize,
    cond: &[usize],
) -> Result<CmiEstimate, ModelError> {
    assert_ne!(i, j);
    assert!(!cond.contains(&i) && !cond.contains(&j));
    let zeros = vec![0.0; cond.len()]; // conditional covariance ignores values
    let c = g.condition(cond, &zeros, &[i, j])?;
    let rho2 = (c.cov[(0, 1)] * c.cov[(0, 1)] / (c.cov[(0, 0)] * c.cov[(1, 1)]))
        .clamp(0.0, 1.0 - 1e-15);
    Ok(CmiEstimate {
        value: (-0.5 * (1.0 - rho2).ln()).max(0.0),
        n_samples: 1,
        estimator: EstimatorKind::GaussianExact,
    })
}
