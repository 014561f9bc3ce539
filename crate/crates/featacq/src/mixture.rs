//! Gaussian mixtures fit by EM, and mixture conditionals.

use crate::conditional::{ConditionalComponent, ConditionalDistribution};
use crate::error::ModelError;
use crate::gaussian::{chol_form, fit_gaussian, log_density_chol, GaussianParams, COV_REGULARIZATION};
use crate::util::{logsumexp, substream};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    pub weights: Vec<f64>,
    pub components: Vec<GaussianParams>,
}

/// EM result; `converged == false` means the tolerance was not met within the
/// iteration cap and `model` is the best iterate found.
#[derive(Debug, Clone)]
pub struct EmFit {
    pub model: MixtureModel,
    pub mean_log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl MixtureModel {
    pub fn from_single(g: GaussianParams) -> Self {
        MixtureModel { weights: vec![1.0], components: vec![g] }
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    /// Mixture log-density over a subset of coordinates; empty idx yields 0.
    pub fn log_marginal_density(&self, idx: &[usize], vals: &[f64]) -> Result<f64, ModelError> {
        if idx.is_empty() {
            return Ok(0.0);
        }
        let mut terms = Vec::with_capacity(self.components.len());
        for (w, c) in self.weights.iter().zip(&self.components) {
            terms.push(w.ln() + c.marginal(idx).log_density(vals)?);
        }
        Ok(logsumexp(&terms))
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64, ModelError> {
        let idx: Vec<usize> = (0..self.dim()).collect();
        self.log_marginal_density(&idx, x)
    }

    /// p(x_target | x_obs): each component conditioned by Schur complement,
    /// weights reweighted by the component evidence w_k·N(x_o; μ_k,o, Σ_k,oo)
    /// in the log domain.
    pub fn condition(
        &self,
        obs_idx: &[usize],
        obs_vals: &[f64],
        target: &[usize],
    ) -> Result<ConditionalDistribution, ModelError> {
        let mut log_w = Vec::with_capacity(self.components.len());
        let mut comps = Vec::with_capacity(self.components.len());
        for (w, c) in self.weights.iter().zip(&self.components) {
            let evidence = c.log_marginal_density(obs_idx, obs_vals)?;
            let conditioned = c.condition(obs_idx, obs_vals, target)?;
            log_w.push(w.ln() + evidence);
            comps.push(ConditionalComponent::new(&conditioned)?);
        }
        Ok(ConditionalDistribution::new(target.to_vec(), log_w, comps))
    }
}

/// Farthest-point component seeds: the first center is a seeded random row;
/// each further center maximizes the minimum distance to chosen centers.
/// Deterministic given the seed and avoids coincident inits.
fn farthest_point_means(rows: &DMatrix<f64>, m: usize, rng: &mut impl Rng) -> Vec<DVector<f64>> {
    let n = rows.nrows();
    let first = rng.random_range(0..n);
    let mut chosen = vec![first];
    let row_vec = |r: usize| DVector::from_fn(rows.ncols(), |c, _| rows[(r, c)]);
    let mut min_d2: Vec<f64> = (0..n)
        .map(|r| (row_vec(r) - row_vec(first)).norm_squared())
        .collect();
    while chosen.len() < m {
        let next = (0..n)
            .max_by(|&a, &b| min_d2[a].total_cmp(&min_d2[b]))
            .expect("nonempty rows");
        chosen.push(next);
        for (r, md) in min_d2.iter_mut().enumerate() {
            let d2 = (row_vec(r) - row_vec(next)).norm_squared();
            if d2 < *md {
                *md = d2;
            }
        }
    }
    chosen.into_iter().map(row_vec).collect()
}

/// EM for a Gaussian mixture. Responsibilities are computed in the log
/// domain; every M-step covariance gets +λI; a component whose covariance
/// still fails factorization is reset to the global covariance at the most
/// distant row. Components are sorted canonically (by mean, then weight) on
/// return, so equal fits compare equal regardless of internal label order.
pub fn fit_mixture_em(
    rows: &DMatrix<f64>,
    m: usize,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<EmFit, ModelError> {
    let (n, d) = (rows.nrows(), rows.ncols());
    assert!(m >= 1);
    if n < 10 * m || n <= d {
        return Err(ModelError::TooFewSamples { n, d: d.max(10 * m - 1) });
    }
    if m == 1 {
        let g = fit_gaussian(rows)?;
        let mut ll = 0.0;
        let form = chol_form(&g.cov)?;
        for r in 0..n {
            let x: Vec<f64> = rows.row(r).iter().cloned().collect();
            ll += log_density_chol(&x, &g.mean, &form);
        }
        return Ok(EmFit {
            model: MixtureModel::from_single(g),
            mean_log_likelihood: ll / n as f64,
            iterations: 0,
            converged: true,
        });
    }

    let global = fit_gaussian(rows)?;
    let mut rng = substream(seed, &[0xE11]);
    let means = farthest_point_means(rows, m, &mut rng);
    let mut weights = vec![1.0 / m as f64; m];
    let mut comps: Vec<GaussianParams> = means
        .into_iter()
        .map(|mean| GaussianParams { mean, cov: global.cov.clone() })
        .collect();

    let mut prev_mean_ll = f64::NEG_INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let mut log_resp = DMatrix::zeros(n, m);
    for iter in 0..max_iter {
        // E-step
        let forms: Vec<_> = comps.iter().map(|c| chol_form(&c.cov)).collect::<Result<_, _>>()?;
        let mut total_ll = 0.0;
        for r in 0..n {
            let x: Vec<f64> = rows.row(r).iter().cloned().collect();
            let mut terms = vec![0.0; m];
            for k in 0..m {
                terms[k] = weights[k].ln() + log_density_chol(&x, &comps[k].mean, &forms[k]);
            }
            let z = logsumexp(&terms);
            total_ll += z;
            for k in 0..m {
                log_resp[(r, k)] = terms[k] - z;
            }
        }
        let mean_ll = total_ll / n as f64;
        debug_assert!(mean_ll >= prev_mean_ll - 1e-8, "EM log-likelihood decreased");
        if iter > 0 && (mean_ll - prev_mean_ll).abs() < tol {
            converged = true;
            prev_mean_ll = mean_ll;
            break;
        }
        prev_mean_ll = mean_ll;
        iterations = iter + 1;

        // M-step
        for k in 0..m {
            let nk: f64 = (0..n).map(|r| log_resp[(r, k)].exp()).sum();
            let nk = nk.max(1e-300);
            weights[k] = nk / n as f64;
            let mut mu = DVector::zeros(d);
            for r in 0..n {
                let rk = log_resp[(r, k)].exp();
                for c in 0..d {
                    mu[c] += rk * rows[(r, c)];
                }
            }
            mu /= nk;
            let mut cov = DMatrix::zeros(d, d);
            for r in 0..n {
                let rk = log_resp[(r, k)].exp();
                for a in 0..d {
                    let da = rows[(r, a)] - mu[a];
                    for b in a..d {
                        cov[(a, b)] += rk * da * (rows[(r, b)] - mu[b]);
                    }
                }
            }
            for a in 0..d {
                for b in a..d {
                    let v = cov[(a, b)] / nk;
                    cov[(a, b)] = v;
                    cov[(b, a)] = v;
                }
                cov[(a, a)] += COV_REGULARIZATION;
            }
            if chol_form(&cov).is_err() {
                // reset degenerate component at the row farthest from its mean
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = (0..d).map(|c| (rows[(a, c)] - mu[c]).powi(2)).sum::<f64>();
                        let db = (0..d).map(|c| (rows[(b, c)] - mu[c]).powi(2)).sum::<f64>();
                        da.total_cmp(&db)
                    })
                    .unwrap();
                mu = DVector::from_fn(d, |c, _| rows[(far, c)]);
                cov = global.cov.clone();
            }
            comps[k] = GaussianParams { mean: mu, cov };
        }
    }

    // canonical component order: lexicographic by mean, then weight
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        for i in 0..d {
            match comps[a].mean[i].total_cmp(&comps[b].mean[i]) {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
        weights[a].total_cmp(&weights[b])
    });
    let model = MixtureModel {
        weights: order.iter().map(|&k| weights[k]).collect(),
        components: order.iter().map(|&k| comps[k].clone()).collect(),
    };
    Ok(EmFit { model, mean_log_likelihood: prev_mean_ll, iterations, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand_distr::Distribution;

    fn two_bump_rows(n: usize, seed: u64) -> DMatrix<f64> {
        // half at mean -3, half at +3, unit variance
        let mut rng = substream(seed, &[77]);
        DMatrix::from_fn(n, 1, |r, _| {
            let z: f64 = rand_distr::StandardNormal.sample(&mut rng);
            if r % 2 == 0 {
                z - 3.0
            } else {
                z + 3.0
            }
        })
    }

    #[test]
    fn single_component_em_is_gaussian_mle() {
        let rows = two_bump_rows(200, 5);
        let em = fit_mixture_em(&rows, 1, 0, 1e-6, 500).unwrap();
        let g = fit_gaussian(&rows).unwrap();
        assert_relative_eq!(em.model.components[0].mean[0], g.mean[0], epsilon = 1e-6);
        assert_relative_eq!(em.model.components[0].cov[(0, 0)], g.cov[(0, 0)], epsilon = 1e-6);
    }

    #[test]
    fn em_recovers_well_separated_means() {
        let rows = two_bump_rows(2000, 8);
        let em = fit_mixture_em(&rows, 2, 3, 1e-6, 500).unwrap();
        assert!(em.converged);
        // canonical order sorts by mean, so component 0 is the left bump
        assert!((em.model.components[0].mean[0] + 3.0).abs() < 0.1);
        assert!((em.model.components[1].mean[0] - 3.0).abs() < 0.1);
        assert!((em.model.weights[0] - 0.5).abs() < 0.05);
    }

    #[test]
    fn em_log_likelihood_is_monotone() {
        // run EM twice with increasing iteration caps; the later mean ll
        // can never be lower (each E/M pair is non-decreasing).
        let rows = two_bump_rows(400, 2);
        let short = fit_mixture_em(&rows, 2, 1, 0.0, 3).unwrap();
        let long = fit_mixture_em(&rows, 2, 1, 0.0, 30).unwrap();
        assert!(long.mean_log_likelihood >= short.mean_log_likelihood - 1e-8);
    }

    #[test]
    fn em_is_deterministic_given_seed() {
        let rows = two_bump_rows(300, 4);
        let a = fit_mixture_em(&rows, 3, 11, 1e-6, 200).unwrap();
        let b = fit_mixture_em(&rows, 3, 11, 1e-6, 200).unwrap();
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn em_rejects_insufficient_rows() {
        let rows = two_bump_rows(25, 1);
        assert!(matches!(fit_mixture_em(&rows, 3, 0, 1e-6, 10), Err(ModelError::TooFewSamples { .. })));
    }

    #[test]
    fn nonconverged_fit_is_flagged_not_erred() {
        let rows = two_bump_rows(500, 6);
        let em = fit_mixture_em(&rows, 2, 0, 0.0, 2).unwrap();
        assert!(!em.converged);
        assert_eq!(em.iterations, 2);
    }

    #[test]
    fn mixture_conditioning_reweights_by_evidence() {
        // two far-apart 2-D components; observing x0 near one of them should
        // concentrate the conditional of x1 on that component's mean
        let c0 = GaussianParams::new(
            DVector::from_vec(vec![-3.0, -3.0]),
            DMatrix::identity(2, 2),
        );
        let c1 = GaussianParams::new(DVector::from_vec(vec![3.0, 3.0]), DMatrix::identity(2, 2));
        let mm = MixtureModel { weights: vec![0.5, 0.5], components: vec![c0, c1] };
        let cd = mm.condition(&[0], &[3.0], &[1]).unwrap();
        assert!((cd.mean()[0] - 3.0).abs() < 1e-3);
    }

    #[test]
    fn conditioning_on_nothing_keeps_prior_weights() {
        let c0 = GaussianParams::new(DVector::from_vec(vec![-1.0]), DMatrix::identity(1, 1));
        let c1 = GaussianParams::new(DVector::from_vec(vec![1.0]), DMatrix::identity(1, 1));
        let mm = MixtureModel { weights: vec![0.25, 0.75], components: vec![c0, c1] };
        let cd = mm.condition(&[], &[], &[0]).unwrap();
        assert_relative_eq!(cd.mean()[0], 0.75 - 0.25, epsilon = 1e-12);
    }

    #[test]
    fn mixture_marginal_density_sums_components() {
        let c0 = GaussianParams::new(DVector::zeros(1), DMatrix::identity(1, 1));
        let c1 = GaussianParams::new(DVector::from_vec(vec![2.0]), DMatrix::identity(1, 1));
        let mm = MixtureModel { weights: vec![0.5, 0.5], components: vec![c0, c1] };
        // 0.5·φ(1) + 0.5·φ(-1) = φ(1)
        assert_relative_eq!(
            mm.log_marginal_density(&[0], &[1.0]).unwrap().exp(),
            0.24197072451914337,
            epsilon = 1e-12
        );
    }
}
