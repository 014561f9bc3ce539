//! Per-instance dynamic feature acquisition.
//!
//! Instead of committing to one fixed feature subset, an agent starts from
//! an empty observation set and, for each instance, repeatedly buys the
//! feature with the highest estimated conditional mutual information with
//! the prediction target given what it has already seen. Everything runs on
//! analytic conditional density models (a joint Gaussian, a Gaussian
//! mixture, or per-class mixtures), which can condition on any subset of
//! variables in closed form, so the acquisition rewards need only a handful
//! of model samples per candidate.
//!
//! The crate covers the full loop and the machinery around it:
//!
//! - [`gaussian`], [`mixture`], [`classcond`]: arbitrary-subset conditional
//!   densities with exact marginals, conditionals, and log-likelihoods.
//! - [`cmi`]: sampled and closed-form conditional mutual information
//!   estimators, plus a discrete brute-force oracle for validation.
//! - [`acquisition`]: greedy per-instance episodes, static baseline orders,
//!   budget and confidence stopping, full step-by-step traces.
//! - [`graph`], [`structure`]: d-separation, Markov blankets, candidate
//!   pruning, and constraint-based structure learning that turns
//!   conditional-independence answers into a CPDAG and a usable DAG.
//! - [`timeseries`], [`calibration`]: chronologically constrained
//!   acquisition of whole time steps under a Dirichlet step-selection
//!   policy, and per-step histogram calibration for early stopping.
//! - [`synth`], [`io`], [`experiment`], [`svg`]: benchmark generators,
//!   file formats, and the deterministic pipelines behind the `featacq`
//!   command-line tool.
//!
//! The `examples/` directory walks each capability end to end; the CLI in
//! `src/bin/featacq.rs` exposes the same pipelines as subcommands.

pub mod acquisition;
pub mod calibration;
pub mod classcond;
pub mod cmi;
pub mod conditional;
pub mod dataset;
pub mod discrete;
pub mod error;
pub mod experiment;
pub mod gaussian;
pub mod graph;
pub mod io;
pub mod mixture;
pub mod model;
pub mod state;
pub mod structure;
pub mod svg;
pub mod synth;
pub mod timeseries;
pub mod util;

pub use acquisition::{
    instance_seed, run_episode, static_order, EpisodeTrace, Policy, Prediction, StoppingRule,
};
pub use dataset::{Dataset, NormStats, TaskKind};
pub use error::Error;
pub use graph::{cpdag_diff, to_cpdag, CpdagDiff, Dag, Pdag};
pub use model::{fit_engine, Engine, EngineChoice, Model};
pub use state::ObservedState;
pub use structure::{learn_bn, learn_bn_from_rows, LearnedBn};
