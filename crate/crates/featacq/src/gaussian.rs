//! Multivariate Gaussian parameters: fitting, marginals, conditionals, entropy.

use crate::error::ModelError;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

/// Diagonal regularization added to every fitted covariance; guarantees
/// Cholesky success on degenerate data.
pub const COV_REGULARIZATION: f64 = 1e-6;

const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Lower-triangular Cholesky factor plus cached log-determinant of the
/// covariance; the working form for densities and sampling.
#[derive(Debug, Clone)]
pub struct CholForm {
    pub lower: DMatrix<f64>,
    pub log_det_cov: f64,
}

/// Cholesky with escalating diagonal jitter; covariances that survive
/// conditioning can be borderline semidefinite numerically.
pub fn robust_cholesky(cov: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>, ModelError> {
    if let Some(ch) = Cholesky::new(cov.clone()) {
        return Ok(ch);
    }
    let k = cov.nrows();
    for exp in [-12, -10, -8, -6] {
        let jitter = 10f64.powi(exp);
        let mut c = cov.clone();
        for i in 0..k {
            c[(i, i)] += jitter;
        }
        if let Some(ch) = Cholesky::new(c) {
            return Ok(ch);
        }
    }
    Err(ModelError::NotPositiveDefinite)
}

pub fn chol_form(cov: &DMatrix<f64>) -> Result<CholForm, ModelError> {
    let ch = robust_cholesky(cov)?;
    let lower = ch.l();
    let log_det_cov = 2.0 * lower.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(CholForm { lower, log_det_cov })
}

/// log N(x; mean, LL^T) using a precomputed factor.
pub fn log_density_chol(x: &[f64], mean: &DVector<f64>, form: &CholForm) -> f64 {
    let k = mean.len();
    debug_assert_eq!(x.len(), k);
    let diff = DVector::from_fn(k, |i, _| x[i] - mean[i]);
    // solve L z = diff by forward substitution
    let mut z = diff;
    for i in 0..k {
        let mut s = z[i];
        for j in 0..i {
            s -= form.lower[(i, j)] * z[j];
        }
        z[i] = s / form.lower[(i, i)];
    }
    let quad: f64 = z.iter().map(|v| v * v).sum();
    -0.5 * (k as f64 * LN_2PI + form.log_det_cov + quad)
}

/// Maximum-likelihood fit with +λI regularization. Requires n > d.
pub fn fit_gaussian(rows: &DMatrix<f64>) -> Result<GaussianParams, ModelError> {
    let (n, d) = (rows.nrows(), rows.ncols());
    if n <= d {
        return Err(ModelError::TooFewSamples { n, d });
    }
    let mean = DVector::from_fn(d, |c, _| rows.column(c).sum() / n as f64);
    let mut cov = DMatrix::zeros(d, d);
    for r in 0..n {
        for a in 0..d {
            let da = rows[(r, a)] - mean[a];
            for b in a..d {
                cov[(a, b)] += da * (rows[(r, b)] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / n as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
        cov[(a, a)] += COV_REGULARIZATION;
    }
    if Cholesky::new(cov.clone()).is_none() {
        return Err(ModelError::SingularCovariance);
    }
    Ok(GaussianParams { mean, cov })
}

impl GaussianParams {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Standard normal-like constructor for tests and fixtures.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        assert_eq!(mean.len(), cov.nrows());
        assert_eq!(cov.nrows(), cov.ncols());
        GaussianParams { mean, cov }
    }

    pub fn marginal(&self, idx: &[usize]) -> GaussianParams {
        let mean = DVector::from_fn(idx.len(), |i, _| self.mean[idx[i]]);
        let cov = DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.cov[(idx[a], idx[b])]);
        GaussianParams { mean, cov }
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.dim() {
            return Err(ModelError::DimensionMismatch { got: x.len(), expected: self.dim() });
        }
        let form = chol_form(&self.cov)?;
        Ok(log_density_chol(x, &self.mean, &form))
    }

    /// log N(x_idx; marginal over idx). Empty idx yields 0 (no evidence).
    pub fn log_marginal_density(&self, idx: &[usize], vals: &[f64]) -> Result<f64, ModelError> {
        if idx.is_empty() {
            return Ok(0.0);
        }
        self.marginal(idx).log_density(vals)
    }

    /// Conditional of `target` given observations:
    ///   mean_{u|o} = μ_u + Σ_uo Σ_oo⁻¹ (x_o − μ_o)
    ///   cov_{u|o}  = Σ_uu − Σ_uo Σ_oo⁻¹ Σ_ou
    /// Empty `obs_idx` returns the marginal unchanged.
    pub fn condition(
        &self,
        obs_idx: &[usize],
        obs_vals: &[f64],
        target: &[usize],
    ) -> Result<GaussianParams, ModelError> {
        if target.is_empty() {
            return Err(ModelError::EmptyTarget);
        }
        if target.iter().any(|t| obs_idx.contains(t)) {
            return Err(ModelError::OverlappingSets);
        }
        if obs_idx.is_empty() {
            return Ok(self.marginal(target));
        }
        debug_assert_eq!(obs_idx.len(), obs_vals.len());
        let (no, nu) = (obs_idx.len(), target.len());
        let sigma_oo = DMatrix::from_fn(no, no, |a, b| self.cov[(obs_idx[a], obs_idx[b])]);
        let sigma_uo = DMatrix::from_fn(nu, no, |a, b| self.cov[(target[a], obs_idx[b])]);
        let sigma_uu = DMatrix::from_fn(nu, nu, |a, b| self.cov[(target[a], target[b])]);
        let ch = robust_cholesky(&sigma_oo)?;
        let diff = DVector::from_fn(no, |i, _| obs_vals[i] - self.mean[obs_idx[i]]);
        let alpha = ch.solve(&diff);
        let mean = DVector::from_fn(nu, |i, _| self.mean[target[i]]) + &sigma_uo * alpha;
        let k = ch.solve(&sigma_uo.transpose()); // Σ_oo⁻¹ Σ_ou
        let mut cov = sigma_uu - &sigma_uo * k;
        // symmetrize and floor tiny negative diagonals from cancellation
        for a in 0..nu {
            for b in (a + 1)..nu {
                let v = 0.5 * (cov[(a, b)] + cov[(b, a)]);
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
            cov[(a, a)] = cov[(a, a)].max(1e-12);
        }
        Ok(GaussianParams { mean, cov })
    }
}

/// Differential entropy ½ ln((2πe)^k det Σ) in nats, via Cholesky log-det.
pub fn gaussian_entropy(cov: &DMatrix<f64>) -> Result<f64, ModelError> {
    let ch = Cholesky::new(cov.clone()).ok_or(ModelError::NotPositiveDefinite)?;
    let log_det: f64 = 2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let k = cov.nrows() as f64;
    Ok(0.5 * (k * (LN_2PI + 1.0) + log_det))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn constant_data_fits_mean_with_regularized_cov() {
        let rows = DMatrix::from_element(20, 2, 0.3);
        let g = fit_gaussian(&rows).unwrap();
        assert_relative_eq!(g.mean[0], 0.3, epsilon = 1e-12);
        assert_relative_eq!(g.mean[1], 0.3, epsilon = 1e-12);
        assert_relative_eq!(g.cov[(0, 0)], COV_REGULARIZATION, epsilon = 1e-15);
        assert_relative_eq!(g.cov[(0, 1)], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn standard_normal_fit_recovers_moments() {
        let mut rng = crate::util::substream(11, &[1]);
        let rows = DMatrix::from_fn(10000, 2, |_, _| {
            rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)
        });
        let g = fit_gaussian(&rows).unwrap();
        assert!(g.mean.iter().all(|m| m.abs() < 0.05));
        assert!((g.cov[(0, 0)] - 1.0).abs() < 0.1);
        assert!((g.cov[(1, 1)] - 1.0).abs() < 0.1);
    }

    #[test]
    fn underdetermined_fit_is_rejected() {
        let rows = DMatrix::from_fn(3, 5, |r, c| (r + c) as f64);
        assert!(matches!(fit_gaussian(&rows), Err(ModelError::TooFewSamples { n: 3, d: 5 })));
    }

    #[test]
    fn conditioning_matches_hand_schur_complement() {
        // μ=(0,0), Σ=[[1,0.5],[0.5,1]]; x₁=1 → mean 0.5, var 0.75
        let g = GaussianParams::new(
            DVector::from_vec(vec![0.0, 0.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]),
        );
        let c = g.condition(&[1], &[1.0], &[0]).unwrap();
        assert_relative_eq!(c.mean[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(c.cov[(0, 0)], 0.75, epsilon = 1e-12);
    }

    #[test]
    fn conditioning_on_nothing_is_the_marginal() {
        let g = GaussianParams::new(
            DVector::from_vec(vec![1.0, 2.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]),
        );
        let c = g.condition(&[], &[], &[1]).unwrap();
        assert_relative_eq!(c.mean[0], 2.0);
        assert_relative_eq!(c.cov[(0, 0)], 2.0);
    }

    #[test]
    fn diagonal_covariance_makes_conditionals_marginal() {
        let g = GaussianParams::new(
            DVector::from_vec(vec![1.0, -1.0, 0.5]),
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0])),
        );
        let c = g.condition(&[0, 2], &[5.0, -5.0], &[1]).unwrap();
        assert_relative_eq!(c.mean[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(c.cov[(0, 0)], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn overlapping_sets_are_rejected() {
        let g = GaussianParams::new(DVector::zeros(2), DMatrix::identity(2, 2));
        assert!(matches!(g.condition(&[0], &[1.0], &[0]), Err(ModelError::OverlappingSets)));
        assert!(matches!(g.condition(&[0], &[1.0], &[]), Err(ModelError::EmptyTarget)));
    }

    #[test]
    fn chained_conditioning_equals_joint_conditioning() {
        // condition on a then b == condition on {a,b} (chain rule)
        let g = GaussianParams::new(
            DVector::from_vec(vec![0.1, -0.2, 0.3, 0.0]),
            DMatrix::from_row_slice(
                4,
                4,
                &[
                    1.0, 0.4, 0.2, 0.1, //
                    0.4, 1.5, 0.3, 0.2, //
                    0.2, 0.3, 1.2, 0.5, //
                    0.1, 0.2, 0.5, 0.9,
                ],
            ),
        );
        let joint = g.condition(&[0, 1], &[0.7, -0.3], &[2, 3]).unwrap();
        // sequential: condition the 4-dim model on x0, keep {1,2,3}, then condition on x1
        let step1 = g.condition(&[0], &[0.7], &[1, 2, 3]).unwrap();
        let step2 = step1.condition(&[0], &[-0.3], &[1, 2]).unwrap();
        for i in 0..2 {
            assert_relative_eq!(joint.mean[i], step2.mean[i], epsilon = 1e-8);
            for j in 0..2 {
                assert_relative_eq!(joint.cov[(i, j)], step2.cov[(i, j)], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn joint_density_factorizes_into_conditional_times_marginal() {
        let g = GaussianParams::new(
            DVector::from_vec(vec![0.0, 1.0, -1.0]),
            DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.0]),
        );
        let x = [0.4, 0.9, -0.7];
        let joint = g.log_density(&x).unwrap();
        let cond = g.condition(&[1, 2], &[x[1], x[2]], &[0]).unwrap();
        let split = cond.log_density(&[x[0]]).unwrap()
            + g.log_marginal_density(&[1, 2], &[x[1], x[2]]).unwrap();
        assert_relative_eq!(joint, split, epsilon = 1e-8);
    }

    #[test]
    fn entropy_closed_forms() {
        let one = DMatrix::identity(1, 1);
        assert_relative_eq!(gaussian_entropy(&one).unwrap(), 1.4189385332046727, epsilon = 1e-12);
        let three = DMatrix::identity(3, 3);
        assert_relative_eq!(gaussian_entropy(&three).unwrap(), 3.0 * 1.4189385332046727, epsilon = 1e-12);
    }

    #[test]
    fn entropy_scales_with_log_determinant() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.8]);
        let c = 2.5;
        let h0 = gaussian_entropy(&cov).unwrap();
        let h1 = gaussian_entropy(&(cov * c)).unwrap();
        assert_relative_eq!(h1 - h0, 0.5 * 2.0 * c.ln(), epsilon = 1e-10);
    }

    #[test]
    fn entropy_rejects_indefinite_input() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(gaussian_entropy(&bad), Err(ModelError::NotPositiveDefinite)));
    }

    #[test]
    fn log_density_closed_form_standard_normal() {
        let g = GaussianParams::new(DVector::zeros(1), DMatrix::identity(1, 1));
        assert_relative_eq!(g.log_density(&[0.0]).unwrap(), -0.9189385332046727, epsilon = 1e-12);
    }

    #[test]
    fn fitted_gaussian_is_deterministic() {
        let mut rng = crate::util::substream(3, &[9]);
        let rows = DMatrix::from_fn(50, 3, |_, _| rng.random::<f64>());
        let a = fit_gaussian(&rows).unwrap();
        let b = fit_gaussian(&rows).unwrap();
        assert_eq!(a, b);
    }
}
