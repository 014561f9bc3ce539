//! Synthetic data generators and ground-truth DAG fixtures. All generation
//! is single-threaded over one sequential RNG stream per dataset so a seed
//! pins the exact bytes produced.

use crate::dataset::{normalize_full, Dataset, TaskKind};
use crate::error::{DataError, GraphError};
use crate::gaussian::GaussianParams;
use crate::graph::Dag;
use crate::util::substream;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub const NOISE_VARIANCE: f64 = 0.3;

/// Two-class gating benchmark: x₀ ~ U(0,1) selects which of x₁..x₉ carries
/// the class signal. Exactly one feature per row depends on y.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchicalSpec {
    pub n: usize,
    pub w1: f64,
    pub w2: f64,
    /// Redraw (w1, w2) per conditional feature instead of sharing one pair.
    pub per_feature_weights: bool,
    pub seed: u64,
}

impl HierarchicalSpec {
    /// n = 20000 with (w1, w2) drawn once from U(0,1).
    pub fn standard(seed: u64) -> Self {
        let mut rng = substream(seed, &[0x11E2]);
        Self {
            n: 20_000,
            w1: rng.random::<f64>(),
            w2: rng.random::<f64>(),
            per_feature_weights: false,
            seed,
        }
    }

    pub fn num_features(&self) -> usize {
        10
    }
}

/// Raw (unnormalized) generation. `flip_labels` regenerates under the same
/// random stream with every y flipped; only the gated column may change,
/// which is the counterfactual check used in tests.
pub fn gen_hierarchical_raw(spec: &HierarchicalSpec, flip_labels: bool) -> (DMatrix<f64>, Vec<usize>) {
    let d = spec.num_features();
    let mut rng = substream(spec.seed, &[0x11E2, 1]);
    let mut wrng = substream(spec.seed, &[0x11E2, 2]);
    let per_feat: Vec<(f64, f64)> = (0..9)
        .map(|_| {
            if spec.per_feature_weights {
                (wrng.random::<f64>(), wrng.random::<f64>())
            } else {
                (spec.w1, spec.w2)
            }
        })
        .collect();
    let mut rows = DMatrix::zeros(spec.n, d);
    let mut labels = Vec::with_capacity(spec.n);
    for r in 0..spec.n {
        let mut y = usize::from(rng.random::<f64>() < 0.5);
        if flip_labels {
            y = 1 - y;
        }
        let x0: f64 = rng.random::<f64>();
        // ninth of [0,1] containing x0 picks the signal-carrying feature
        let gate = ((x0 * 9.0).floor() as usize).min(8) + 1;
        rows[(r, 0)] = x0;
        for j in 1..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            rows[(r, j)] = if j == gate {
                let (w1, w2) = per_feat[j - 1];
                w1 * y as f64 + w2 * x0 + NOISE_VARIANCE.sqrt() * z
            } else {
                z
            };
        }
        labels.push(y);
    }
    (rows, labels)
}

pub fn gen_hierarchical(spec: &HierarchicalSpec) -> Dataset {
    let (rows, labels) = gen_hierarchical_raw(spec, false);
    let names = (0..spec.num_features()).map(|j| format!("x{j}")).collect();
    let mut ds = Dataset::new(rows, Some(labels), TaskKind::Classification { num_classes: 2 }, names)
        .expect("generator invariants");
    normalize_full(&mut ds);
    ds
}

/// Linear-Gaussian structural model on a DAG: node = Σ w·parent + N(0, 0.3),
/// weights drawn once from U(0,1). The target node is relabeled to the last
/// index so features occupy 0..d−1 and the target is node d everywhere.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearGaussianBnSpec {
    pub n: usize,
    pub target: usize,
    pub classify: bool,
    pub seed: u64,
}

/// Relabels nodes so `target` becomes the highest index, preserving all
/// other nodes' relative order.
pub fn relabel_target_last(dag: &Dag, target: usize) -> Result<(Dag, Vec<usize>), GraphError> {
    let n = dag.num_nodes();
    if target >= n {
        return Err(GraphError::InvalidNode(target));
    }
    // old index -> new index
    let map: Vec<usize> = (0..n)
        .map(|v| {
            if v == target {
                n - 1
            } else if v < target {
                v
            } else {
                v - 1
            }
        })
        .collect();
    let edges: Vec<(usize, usize)> = dag.edges().iter().map(|&(p, c)| (map[p], map[c])).collect();
    Ok((Dag::from_edges(n, &edges)?, map))
}

/// Edge weights in child-major order matching `dag.edges()`.
pub fn draw_edge_weights(dag: &Dag, seed: u64) -> Vec<f64> {
    let mut rng = substream(seed, &[0xB1]);
    dag.edges().iter().map(|_| rng.random::<f64>()).collect()
}

/// Population covariance of the structural model: x = Wx + e with
/// e ~ N(0, σ²I) gives Σ = (I−W)⁻¹ σ²I (I−W)⁻ᵀ. This is the exact law the
/// samples are drawn from, so CI tests against it are noise-free.
pub fn population_covariance(dag: &Dag, weights: &[f64]) -> GaussianParams {
    let n = dag.num_nodes();
    let mut w = DMatrix::zeros(n, n);
    for (&(p, c), &wt) in dag.edges().iter().zip(weights) {
        w[(c, p)] = wt;
    }
    let inv = (DMatrix::identity(n, n) - w)
        .try_inverse()
        .expect("I − W is unit lower-triangular under a topological order");
    let cov = &inv * NOISE_VARIANCE * inv.transpose();
    GaussianParams::new(DVector::zeros(n), cov)
}

pub struct BnSample {
    pub dataset: Dataset,
    pub dag: Dag,
    pub weights: Vec<f64>,
    /// Continuous target values before any classification split.
    pub target_values: Vec<f64>,
}

/// Ancestral sampling. For classification the target column is median-split
/// into two balanced classes and removed from the features; for regression
/// it stays as the last column.
pub fn gen_linear_gaussian_bn(
    dag: &Dag,
    names: &[String],
    spec: &LinearGaussianBnSpec,
) -> Result<BnSample, DataError> {
    let (dag, map) = relabel_target_last(dag, spec.target).expect("valid target");
    let mut names_rl = vec![String::new(); names.len()];
    for (old, &new) in map.iter().enumerate() {
        names_rl[new] = names[old].clone();
    }
    let n_nodes = dag.num_nodes();
    let weights = draw_edge_weights(&dag, spec.seed);
    let edges = dag.edges();
    let order = dag.topological_order();
    let mut rng = substream(spec.seed, &[0xB2]);
    let mut values = DMatrix::zeros(spec.n, n_nodes);
    let sigma = NOISE_VARIANCE.sqrt();
    for r in 0..spec.n {
        for &v in &order {
            let mut mean = 0.0;
            for (&(p, c), &wt) in edges.iter().zip(&weights) {
                if c == v {
                    mean += wt * values[(r, p)];
                }
            }
            let z: f64 = StandardNormal.sample(&mut rng);
            values[(r, v)] = mean + sigma * z;
        }
    }
    let target_values: Vec<f64> = (0..spec.n).map(|r| values[(r, n_nodes - 1)]).collect();
    let dataset = if spec.classify {
        let mut sorted = target_values.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[spec.n / 2];
        let labels: Vec<usize> = target_values.iter().map(|&v| usize::from(v >= median)).collect();
        let rows = values.columns(0, n_nodes - 1).into_owned();
        Dataset::new(
            rows,
            Some(labels),
            TaskKind::Classification { num_classes: 2 },
            names_rl[..n_nodes - 1].to_vec(),
        )?
    } else {
        Dataset::new(
            values,
            None,
            TaskKind::Regression { target_index: n_nodes - 1 },
            names_rl,
        )?
    };
    Ok(BnSample { dataset, dag, weights, target_values })
}

/// The 8-node asia network topology (public BN-repository structure).
pub fn asia_dag() -> (Dag, Vec<String>) {
    let names: Vec<String> =
        ["asia", "tub", "smoke", "lung", "bronc", "either", "xray", "dysp"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    let dag = Dag::from_edges(
        8,
        &[(0, 1), (2, 3), (2, 4), (1, 5), (3, 5), (5, 6), (5, 7), (4, 7)],
    )
    .unwrap();
    (dag, names)
}

/// An 11-node protein-signaling topology in the style of the public sachs
/// network (consensus edge set).
pub fn sachs_dag() -> (Dag, Vec<String>) {
    let names: Vec<String> = [
        "raf", "mek", "plcg", "pip2", "pip3", "erk", "akt", "pka", "pkc", "p38", "jnk",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let idx = |s: &str| names.iter().position(|n| n == s).unwrap();
    let edge_names = [
        ("pkc", "pka"),
        ("pkc", "raf"),
        ("pkc", "mek"),
        ("pkc", "jnk"),
        ("pkc", "p38"),
        ("pka", "raf"),
        ("pka", "mek"),
        ("pka", "erk"),
        ("pka", "akt"),
        ("pka", "jnk"),
        ("pka", "p38"),
        ("raf", "mek"),
        ("mek", "erk"),
        ("erk", "akt"),
        ("plcg", "pip3"),
        ("plcg", "pip2"),
        ("pip3", "pip2"),
    ];
    let edges: Vec<(usize, usize)> = edge_names.iter().map(|&(a, b)| (idx(a), idx(b))).collect();
    (Dag::from_edges(11, &edges).unwrap(), names)
}

/// Five-node pruning demo: y=0, x1..x4 with edges x3→x1, y→x1, y→x2, x2→x4.
/// Observing x2 separates x4 from y; observing x1 reconnects x3.
pub fn gating_demo_dag() -> (Dag, Vec<String>) {
    let names: Vec<String> = ["y", "x1", "x2", "x3", "x4"].iter().map(|s| s.to_string()).collect();
    (Dag::from_edges(5, &[(3, 1), (0, 1), (0, 2), (2, 4)]).unwrap(), names)
}

/// Two-class time-series chain: one feature per step, class-conditional
/// drift growing linearly with t so later steps are more informative.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChronoSpec {
    pub n: usize,
    pub t_steps: usize,
    pub step_width: usize,
    /// Peak mean separation (at the final step) between the two classes.
    pub drift: f64,
    pub seed: u64,
}

impl ChronoSpec {
    pub fn standard(seed: u64) -> Self {
        Self { n: 6000, t_steps: 12, step_width: 1, drift: 1.6, seed }
    }
}

pub fn gen_chrono_chain(spec: &ChronoSpec) -> Dataset {
    let d = spec.t_steps * spec.step_width;
    let mut rng = substream(spec.seed, &[0xC5A0]);
    let mut rows = DMatrix::zeros(spec.n, d);
    let mut labels = Vec::with_capacity(spec.n);
    for r in 0..spec.n {
        let y = usize::from(rng.random::<f64>() < 0.5);
        let sign = if y == 1 { 1.0 } else { -1.0 };
        for t in 0..spec.t_steps {
            let mu = sign * spec.drift * (t + 1) as f64 / spec.t_steps as f64 / 2.0;
            for k in 0..spec.step_width {
                let z: f64 = StandardNormal.sample(&mut rng);
                rows[(r, t * spec.step_width + k)] = mu + z;
            }
        }
        labels.push(y);
    }
    let names = (0..d)
        .map(|j| format!("t{:02}f{}", j / spec.step_width, j % spec.step_width))
        .collect();
    Dataset::new(rows, Some(labels), TaskKind::Classification { num_classes: 2 }, names)
        .expect("generator invariants")
}
