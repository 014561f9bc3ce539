//! Conditioning the density engines on arbitrary variable subsets.
//!
//! Run with `cargo run --example conditional_density`.

use featacq::classcond::ClassConditionalModel;
use featacq::gaussian::{gaussian_entropy, GaussianParams};
use featacq::mixture::MixtureModel;
use nalgebra::{DMatrix, DVector};

fn main() {
    joint_gaussian();
    mixture_posterior_weights();
    class_posterior();
}

/// Exact Gaussian conditionals: any observed subset, any target subset.
fn joint_gaussian() {
    let cov = DMatrix::from_row_slice(
        3,
        3,
        &[
            1.0, 0.6, 0.3, //
            0.6, 1.0, 0.2, //
            0.3, 0.2, 1.0,
        ],
    );
    let g = GaussianParams::new(DVector::from_vec(vec![0.0, 1.0, -0.5]), cov);

    println!("joint Gaussian over (x0, x1, x2)");
    println!("  prior mean of x1: {:.4}", g.marginal(&[1]).mean[0]);

    // Observing x0 = 2 pulls x1 up through the 0.6 covariance.
    let c = g.condition(&[0], &[2.0], &[1]).unwrap();
    println!("  x1 | x0=2:        mean {:.4}, var {:.4}", c.mean[0], c.cov[(0, 0)]);

    // Conditioning on both remaining coordinates shrinks the variance again.
    let c2 = g.condition(&[0, 2], &[2.0, 0.0], &[1]).unwrap();
    println!("  x1 | x0=2, x2=0:  mean {:.4}, var {:.4}", c2.mean[0], c2.cov[(0, 0)]);

    let h_prior = gaussian_entropy(&g.marginal(&[1]).cov).unwrap();
    let h_post = gaussian_entropy(&c2.cov).unwrap();
    println!("  entropy of x1: {h_prior:.4} nats before, {h_post:.4} after observing the rest");
    assert!(h_post < h_prior);
    println!();
}

/// Mixture conditionals reweight components by how well each explains the
/// observation, so the conditional can stay multimodal or collapse.
fn mixture_posterior_weights() {
    let comp = |x: f64, y: f64| {
        GaussianParams::new(DVector::from_vec(vec![x, y]), DMatrix::identity(2, 2).scale(0.25))
    };
    let mm = MixtureModel {
        weights: vec![0.5, 0.5],
        components: vec![comp(-2.0, -2.0), comp(2.0, 2.0)],
    };

    println!("two-component mixture, modes at (-2,-2) and (2,2)");
    for x0 in [-2.0, 0.0, 2.0] {
        let cd = mm.condition(&[0], &[x0], &[1]).unwrap();
        let w: Vec<f64> = cd.log_weights().iter().map(|lw| lw.exp()).collect();
        println!(
            "  x1 | x0={x0:+.0}: component weights [{:.4}, {:.4}], mean {:+.4}",
            w[0],
            w[1],
            cd.mean()[0]
        );
    }
    println!();
}

/// Class posteriors from per-class densities and a prior, given any subset.
fn class_posterior() {
    let comp = |m: &[f64]| {
        MixtureModel::from_single(GaussianParams::new(
            DVector::from_row_slice(m),
            DMatrix::identity(2, 2),
        ))
    };
    let ccm = ClassConditionalModel {
        class_prior: vec![0.7, 0.3],
        per_class: vec![comp(&[-1.0, 0.0]), comp(&[1.0, 0.0])],
    };

    println!("two-class model, feature 0 separates the classes, feature 1 is noise");
    let cases: &[(&[usize], &[f64], &str)] = &[
        (&[], &[], "nothing observed"),
        (&[1], &[1.5], "only the noise feature"),
        (&[0], &[1.5], "the informative feature"),
        (&[0, 1], &[1.5, 1.5], "both features"),
    ];
    for (idx, vals, what) in cases {
        let post = ccm.class_posterior(idx, vals);
        println!("  P(y | {what}): [{:.4}, {:.4}]", post[0], post[1]);
    }
}
