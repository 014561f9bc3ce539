//! The Monte Carlo CMI estimators against their exact counterparts.
//!
//! Run with `cargo run --example cmi_estimators`.

use featacq::classcond::ClassConditionalModel;
use featacq::cmi::{cmi_classification, cmi_gaussian_exact, cmi_regression};
use featacq::discrete::{cmi_discrete_bruteforce, xor_table};
use featacq::experiment::mean_stderr;
use featacq::gaussian::GaussianParams;
use featacq::mixture::MixtureModel;
use featacq::model::Engine;
use featacq::state::ObservedState;
use nalgebra::{DMatrix, DVector};

fn main() {
    regression_vs_closed_form();
    estimator_noise_vs_sample_count();
    classification_reference_check();
    discrete_oracle();
}

fn regression_vs_closed_form() {
    let rho = 0.5;
    let g = GaussianParams::new(
        DVector::zeros(2),
        DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]),
    );
    let exact = cmi_gaussian_exact(&g, 0, 1, &[]).unwrap().value;
    let engine = Engine::Gaussian(g);
    let mc = cmi_regression(&engine, 0, &ObservedState::empty(2), 1, 10_000, 7).unwrap();
    println!("bivariate Gaussian, rho = {rho}");
    println!("  closed form -0.5 ln(1 - rho^2) = {exact:.6} nats");
    println!("  Monte Carlo at 10^4 samples    = {:.6} nats", mc.value);
    println!("  absolute error                 = {:.6}", (mc.value - exact).abs());
    println!();
}

fn estimator_noise_vs_sample_count() {
    let g = GaussianParams::new(
        DVector::zeros(2),
        DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]),
    );
    let engine = Engine::Gaussian(g);
    println!("estimator spread over 200 seeds per sample count");
    for n in [10usize, 100, 1000] {
        let values: Vec<f64> = (0..200)
            .map(|s| {
                cmi_regression(&engine, 0, &ObservedState::empty(2), 1, n, 100 + s)
                    .unwrap()
                    .value
            })
            .collect();
        let (mean, _) = mean_stderr(&values);
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / (values.len() - 1) as f64)
            .sqrt();
        println!("  n = {n:>4}: mean {mean:.5}, sd {sd:.5}");
    }
    println!();
}

fn classification_reference_check() {
    let comp = |m: f64| {
        MixtureModel::from_single(GaussianParams::new(
            DVector::from_vec(vec![m]),
            DMatrix::identity(1, 1),
        ))
    };
    let ccm = ClassConditionalModel {
        class_prior: vec![0.5, 0.5],
        per_class: vec![comp(-1.0), comp(1.0)],
    };
    let reference = cmi_classification(&ccm, 0, &ObservedState::empty(1), 100_000, 1).unwrap();
    let estimates: Vec<f64> = (0..1000)
        .map(|s| cmi_classification(&ccm, 0, &ObservedState::empty(1), 10, s).unwrap().value)
        .collect();
    let (mean, se) = mean_stderr(&estimates);
    println!("classification CMI, two unit Gaussians at -1 and +1");
    println!("  reference (10^5 samples)     = {:.6} nats", reference.value);
    println!("  mean of 1000 ten-sample runs = {mean:.6} +- {se:.6}");
    println!();
}

fn discrete_oracle() {
    let t = xor_table();
    let single = cmi_discrete_bruteforce(&t, 0, 2, &[]).unwrap().value;
    let pair = cmi_discrete_bruteforce(&t, 0, 2, &[1]).unwrap().value;
    println!("XOR triple (a, b, y = a xor b), exact enumeration");
    println!("  I(a; y)     = {single:.6} nats (pairwise independent)");
    println!("  I(a; y | b) = {pair:.6} nats (= ln 2 = {:.6})", 2f64.ln());
}
