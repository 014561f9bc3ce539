//! Learning a Bayesian-network pruner from data: Markov blankets from
//! full-conditioning CI tests, spouse-link deletion, v-structure
//! orientation, rule closure, and a diff against the generating graph.
//!
//! Run with `cargo run --example structure_learning`.

use featacq::graph::{cpdag_diff, to_cpdag};
use featacq::structure::{
    learn_bn, learn_bn_from_rows, permutation_null_epsilon, GaussianCiOracle,
};
use featacq::synth::{
    asia_dag, draw_edge_weights, gen_linear_gaussian_bn, population_covariance,
    LinearGaussianBnSpec,
};

fn main() {
    let (dag, names) = asia_dag();
    println!("ground truth: the 8-node asia network, {} edges", dag.edges().len());
    for (p, c) in dag.edges() {
        println!("  {} -> {}", names[p], names[c]);
    }

    // Noise-free route: CI answers from the population covariance of the
    // linear-Gaussian model, machine-precision threshold.
    let weights = draw_edge_weights(&dag, 11);
    let oracle = GaussianCiOracle::from_params(population_covariance(&dag, &weights), 1e-8);
    let exact = learn_bn(&oracle, 1).unwrap();
    let diff = cpdag_diff(&exact.cpdag, &to_cpdag(&dag));
    println!("\nfrom the exact oracle:");
    println!("  skeleton errors    {}", diff.skeleton_errors());
    println!("  v-structure errors {}", diff.v_structure_errors());

    // Sample route: 5000 draws, Gaussian fitted to the rows, threshold
    // calibrated on column-permuted null data.
    let spec = LinearGaussianBnSpec { n: 5000, target: 7, classify: false, seed: 11 };
    let sample = gen_linear_gaussian_bn(&dag, &names, &spec).unwrap();
    let eps = permutation_null_epsilon(&sample.dataset.rows, 1, 5).unwrap();
    println!("\nfrom {} samples (permutation-null epsilon {:.5}):", spec.n, eps);
    let learned = learn_bn_from_rows(&sample.dataset.rows, eps, 1).unwrap();
    let sdiff = cpdag_diff(&learned.cpdag, &to_cpdag(&sample.dag));
    println!("  skeleton errors    {}", sdiff.skeleton_errors());
    println!("  v-structure errors {}", sdiff.v_structure_errors());
    if !sdiff.missing_edges.is_empty() {
        println!("  missing: {:?}", sdiff.missing_edges);
    }
    if !sdiff.extra_edges.is_empty() {
        println!("  extra:   {:?}", sdiff.extra_edges);
    }
    for w in &learned.warnings {
        println!("  warning: {w}");
    }

    println!("\nlearned skeleton (sample route):");
    for (a, b) in learned.cpdag.skeleton() {
        let mark = if learned.cpdag.has_directed(a, b) {
            "->"
        } else if learned.cpdag.has_directed(b, a) {
            "<-"
        } else {
            "--"
        };
        println!("  {} {mark} {}", sample.dataset.feature_names[a], sample.dataset.feature_names[b]);
    }
}
