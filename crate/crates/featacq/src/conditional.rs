//! Conditional distributions p(x_u | x_o): a reweighted mixture of conditioned
//! Gaussians (a single component in the pure-Gaussian case).

use crate::error::ModelError;
use crate::gaussian::{chol_form, log_density_chol, CholForm, GaussianParams};
use crate::util::{logsumexp, normalize_log_weights, sample_categorical_log};
use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone)]
pub struct ConditionalComponent {
    pub mean: DVector<f64>,
    form: CholForm,
}

impl ConditionalComponent {
    pub fn new(g: &GaussianParams) -> Result<Self, ModelError> {
        Ok(ConditionalComponent { mean: g.mean.clone(), form: chol_form(&g.cov)? })
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        log_density_chol(x, &self.mean, &self.form)
    }

    fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        let k = self.mean.len();
        let z = DVector::from_fn(k, |_, _| StandardNormal.sample(rng));
        let x = &self.mean + &self.form.lower * z;
        x.iter().cloned().collect()
    }
}

/// Mixture over conditioned components with normalized log-weights.
///
/// Components are kept in a canonical order (sorted by mean, then weight) so
/// that sampling is invariant to how the mixture was assembled — in
/// particular, relabeling classes of a class-conditional model does not
/// change the draw sequence.
#[derive(Debug, Clone)]
pub struct ConditionalDistribution {
    pub target: Vec<usize>,
    log_weights: Vec<f64>,
    components: Vec<ConditionalComponent>,
}

impl ConditionalDistribution {
    pub fn new(
        target: Vec<usize>,
        mut log_weights: Vec<f64>,
        components: Vec<ConditionalComponent>,
    ) -> Self {
        assert_eq!(log_weights.len(), components.len());
        assert!(!components.is_empty());
        normalize_log_weights(&mut log_weights);
        let mut order: Vec<usize> = (0..components.len()).collect();
        order.sort_by(|&a, &b| {
            let ka = &components[a].mean;
            let kb = &components[b].mean;
            for i in 0..ka.len() {
                match ka[i].total_cmp(&kb[i]) {
                    std::cmp::Ordering::Equal => continue,
                    other => return other,
                }
            }
            log_weights[a].total_cmp(&log_weights[b])
        });
        let log_weights = order.iter().map(|&i| log_weights[i]).collect();
        let components: Vec<_> = order.into_iter().map(|i| components[i].clone()).collect();
        ConditionalDistribution { target, log_weights, components }
    }

    pub fn from_gaussian(target: Vec<usize>, g: &GaussianParams) -> Result<Self, ModelError> {
        Ok(Self::new(target, vec![0.0], vec![ConditionalComponent::new(g)?]))
    }

    pub fn dim(&self) -> usize {
        self.target.len()
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Decomposes into (log-weight, component) pairs, e.g. for reweighting
    /// into a larger mixture.
    pub fn into_parts(self) -> impl Iterator<Item = (f64, ConditionalComponent)> {
        self.log_weights.into_iter().zip(self.components)
    }

    /// Mixture log-density at x_u.
    pub fn log_density(&self, x_u: &[f64]) -> Result<f64, ModelError> {
        if x_u.len() != self.dim() {
            return Err(ModelError::DimensionMismatch { got: x_u.len(), expected: self.dim() });
        }
        let terms: Vec<f64> = self
            .log_weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w + c.log_density(x_u))
            .collect();
        Ok(logsumexp(&terms))
    }

    /// Mixture mean Σ_k w_k μ_k.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for (w, c) in self.log_weights.iter().zip(&self.components) {
            let wk = w.exp();
            for (mi, ci) in m.iter_mut().zip(c.mean.iter()) {
                *mi += wk * ci;
            }
        }
        m
    }

    /// One draw: pick a component by weight, then sample its Gaussian.
    pub fn sample_one(&self, rng: &mut impl Rng) -> Vec<f64> {
        let k = if self.components.len() == 1 {
            0
        } else {
            sample_categorical_log(&self.log_weights, rng.random::<f64>())
        };
        self.components[k].sample(rng)
    }

    /// n i.i.d. draws, deterministic given the RNG state.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }
}
