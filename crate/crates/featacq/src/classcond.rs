//! Class-conditional density model: P(y) prior plus one mixture per class.
//! Posteriors come from Bayes' rule in log domain; feature conditionals
//! marginalize the class out.

use crate::conditional::ConditionalDistribution;
use crate::error::ModelError;
use crate::mixture::{fit_mixture_em, MixtureModel};
use crate::util::{logsumexp, substream};
use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassConditionalModel {
    pub class_prior: Vec<f64>,
    pub per_class: Vec<MixtureModel>,
}

impl ClassConditionalModel {
    pub fn num_classes(&self) -> usize {
        self.class_prior.len()
    }

    pub fn dim(&self) -> usize {
        self.per_class[0].dim()
    }

    /// P(y | x_o) = softmax_y( log p(x_o | y) + log P(y) ).
    /// Empty observations return the prior exactly.
    pub fn class_posterior(&self, obs_idx: &[usize], obs_vals: &[f64]) -> Vec<f64> {
        if obs_idx.is_empty() {
            return self.class_prior.clone();
        }
        let logits: Vec<f64> = self
            .class_prior
            .iter()
            .zip(&self.per_class)
            .map(|(p, m)| {
                p.ln()
                    + m.log_marginal_density(obs_idx, obs_vals)
                        .expect("valid observation subset")
            })
            .collect();
        let z = logsumexp(&logits);
        logits.iter().map(|l| (l - z).exp()).collect()
    }

    /// log p(x_idx | y = k) for a coordinate subset.
    pub fn log_class_likelihood(
        &self,
        k: usize,
        idx: &[usize],
        vals: &[f64],
    ) -> Result<f64, ModelError> {
        self.per_class[k].log_marginal_density(idx, vals)
    }

    /// p(x_target | x_obs) with the class marginalized out:
    ///   Σ_y P(y | x_o) p(x_target | x_o, y),
    /// assembled as one mixture whose weights multiply the class posterior
    /// into each class's conditioned component weights.
    pub fn feature_marginal_given_obs(
        &self,
        target: &[usize],
        obs_idx: &[usize],
        obs_vals: &[f64],
    ) -> Result<ConditionalDistribution, ModelError> {
        if let Some(&t) = target.iter().find(|t| obs_idx.contains(t)) {
            return Err(ModelError::AlreadyObserved(t));
        }
        let mut log_w = Vec::new();
        let mut comps = Vec::new();
        for (p, m) in self.class_prior.iter().zip(&self.per_class) {
            // log [ P(y) p(x_o | y) ]; normalization over classes happens in
            // the mixture constructor, yielding P(y | x_o) weights.
            let evidence = m.log_marginal_density(obs_idx, obs_vals)?;
            let class_cd = m.condition(obs_idx, obs_vals, target)?;
            for (lw, comp) in class_cd.into_parts() {
                log_w.push(p.ln() + evidence + lw);
                comps.push(comp);
            }
        }
        Ok(ConditionalDistribution::new(target.to_vec(), log_w, comps))
    }
}

/// Fits the prior from label frequencies and one m-component mixture per
/// class (per-class EM sub-streams derived from `seed`).
pub fn fit_class_conditional(
    rows: &DMatrix<f64>,
    labels: &[usize],
    num_classes: usize,
    m: usize,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<(ClassConditionalModel, bool), ModelError> {
    assert_eq!(rows.nrows(), labels.len());
    let n = rows.nrows();
    let mut prior = vec![0.0; num_classes];
    for &l in labels {
        prior[l] += 1.0;
    }
    for p in prior.iter_mut() {
        *p /= n as f64;
    }
    let mut per_class = Vec::with_capacity(num_classes);
    let mut all_converged = true;
    for k in 0..num_classes {
        let idx: Vec<usize> = (0..n).filter(|&r| labels[r] == k).collect();
        let class_rows = DMatrix::from_fn(idx.len(), rows.ncols(), |r, c| rows[(idx[r], c)]);
        let mut class_seed = substream(seed, &[k as u64]);
        let fit = fit_mixture_em(&class_rows, m, class_seed.random(), tol, max_iter)?;
        all_converged &= fit.converged;
        per_class.push(fit.model);
    }
    Ok((ClassConditionalModel { class_prior: prior, per_class }, all_converged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::GaussianParams;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn two_class(mean0: f64, mean1: f64, prior0: f64) -> ClassConditionalModel {
        let g = |m: f64| {
            MixtureModel::from_single(GaussianParams::new(
                DVector::from_vec(vec![m]),
                DMatrix::identity(1, 1),
            ))
        };
        ClassConditionalModel { class_prior: vec![prior0, 1.0 - prior0], per_class: vec![g(mean0), g(mean1)] }
    }

    #[test]
    fn empty_observation_returns_prior() {
        let m = two_class(0.0, 2.0, 0.7);
        let post = m.class_posterior(&[], &[]);
        assert_relative_eq!(post[0], 0.7, epsilon = 1e-12);
        assert_relative_eq!(post[1], 0.3, epsilon = 1e-12);
    }

    #[test]
    fn equal_likelihoods_leave_prior_untouched() {
        let m = two_class(1.0, 1.0, 0.9);
        let post = m.class_posterior(&[0], &[0.4]);
        assert_relative_eq!(post[0], 0.9, epsilon = 1e-12);
        assert_relative_eq!(post[1], 0.1, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_evidence_gives_uniform_posterior() {
        let m = two_class(-1.0, 1.0, 0.5);
        let post = m.class_posterior(&[0], &[0.0]);
        assert_relative_eq!(post[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(post[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn posterior_is_a_simplex() {
        let m = two_class(-0.3, 1.7, 0.25);
        let post = m.class_posterior(&[0], &[2.0]);
        assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(post.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn class_marginal_mixture_density_closed_form() {
        // classes N(0,1), N(2,1), uniform prior, no observations:
        // p(x=1) = φ(1) ≈ 0.2420
        let m = two_class(0.0, 2.0, 0.5);
        let cd = m.feature_marginal_given_obs(&[0], &[], &[]).unwrap();
        assert_relative_eq!(cd.log_density(&[1.0]).unwrap().exp(), 0.24197072451914337, epsilon = 1e-12);
    }

    #[test]
    fn identical_class_models_ignore_the_prior() {
        let skew = two_class(0.5, 0.5, 0.9);
        let flat = two_class(0.5, 0.5, 0.5);
        let a = skew.feature_marginal_given_obs(&[0], &[], &[]).unwrap();
        let b = flat.feature_marginal_given_obs(&[0], &[], &[]).unwrap();
        assert_relative_eq!(a.log_density(&[0.2]).unwrap(), b.log_density(&[0.2]).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn single_class_marginal_equals_plain_conditioning() {
        let g = GaussianParams::new(
            DVector::from_vec(vec![0.0, 1.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]),
        );
        let mm = MixtureModel::from_single(g.clone());
        let ccm = ClassConditionalModel { class_prior: vec![1.0], per_class: vec![mm.clone()] };
        let a = ccm.feature_marginal_given_obs(&[0], &[1], &[2.0]).unwrap();
        let b = mm.condition(&[1], &[2.0], &[0]).unwrap();
        assert_relative_eq!(a.log_density(&[0.3]).unwrap(), b.log_density(&[0.3]).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn marginal_integrates_to_one() {
        let m = two_class(-1.0, 1.5, 0.4);
        let cd = m.feature_marginal_given_obs(&[0], &[], &[]).unwrap();
        let h = 0.01;
        let mass: f64 = (-1200..1200)
            .map(|i| cd.log_density(&[i as f64 * h]).unwrap().exp() * h)
            .sum();
        assert!((mass - 1.0).abs() < 1e-3);
    }

    #[test]
    fn observing_a_feature_rules_it_out_as_target() {
        let m = two_class(0.0, 1.0, 0.5);
        assert!(matches!(
            m.feature_marginal_given_obs(&[0], &[0], &[1.0]),
            Err(ModelError::AlreadyObserved(0))
        ));
    }

    #[test]
    fn fit_recovers_priors_and_means() {
        let mut rng = substream(21, &[0]);
        let n = 600;
        let mut labels = Vec::with_capacity(n);
        let rows = DMatrix::from_fn(n, 1, |r, _| {
            let y = usize::from(r % 3 == 0); // P(y=1) = 1/3
            labels.push(y);
            let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
            z + if y == 1 { 4.0 } else { -4.0 }
        });
        let (m, converged) = fit_class_conditional(&rows, &labels, 2, 1, 7, 1e-6, 200).unwrap();
        assert!(converged);
        assert_relative_eq!(m.class_prior[1], 1.0 / 3.0, epsilon = 1e-9);
        assert!((m.per_class[0].components[0].mean[0] + 4.0).abs() < 0.2);
        assert!((m.per_class[1].components[0].mean[0] - 4.0).abs() < 0.2);
    }
}
