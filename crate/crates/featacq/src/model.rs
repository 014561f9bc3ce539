//! The fitted model: task, engine, normalization statistics, names.
//! Persisted as a versioned JSON document whose round-trip reproduces
//! densities exactly (floats serialize losslessly).

use crate::classcond::{fit_class_conditional, ClassConditionalModel};
use crate::conditional::ConditionalDistribution;
use crate::dataset::{Dataset, NormStats, TaskKind};
use crate::error::ModelError;
use crate::gaussian::{fit_gaussian, GaussianParams};
use crate::mixture::{fit_mixture_em, MixtureModel};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::str::FromStr;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Density engine behind the arbitrary-conditional interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Engine {
    /// One joint Gaussian over all coordinates (regression-style tasks).
    Gaussian(GaussianParams),
    /// One joint Gaussian mixture over all coordinates.
    Mixture(MixtureModel),
    /// Per-class mixtures plus a class prior (classification tasks).
    ClassConditional(ClassConditionalModel),
}

impl Engine {
    pub fn dim(&self) -> usize {
        match self {
            Engine::Gaussian(g) => g.dim(),
            Engine::Mixture(m) => m.dim(),
            Engine::ClassConditional(c) => c.dim(),
        }
    }

    pub fn is_classifier(&self) -> bool {
        matches!(self, Engine::ClassConditional(_))
    }

    /// p(x_target | x_obs); the class-conditional engine marginalizes y out.
    pub fn condition(
        &self,
        obs_idx: &[usize],
        obs_vals: &[f64],
        target: &[usize],
    ) -> Result<ConditionalDistribution, ModelError> {
        match self {
            Engine::Gaussian(g) => {
                let cd = g.condition(obs_idx, obs_vals, target)?;
                ConditionalDistribution::from_gaussian(target.to_vec(), &cd)
            }
            Engine::Mixture(m) => m.condition(obs_idx, obs_vals, target),
            Engine::ClassConditional(c) => c.feature_marginal_given_obs(target, obs_idx, obs_vals),
        }
    }

    pub fn class_posterior(&self, obs_idx: &[usize], obs_vals: &[f64]) -> Option<Vec<f64>> {
        match self {
            Engine::ClassConditional(c) => Some(c.class_posterior(obs_idx, obs_vals)),
            _ => None,
        }
    }

    pub fn as_class_conditional(&self) -> Option<&ClassConditionalModel> {
        match self {
            Engine::ClassConditional(c) => Some(c),
            _ => None,
        }
    }
}

/// Which engine to fit; parsed from strings like `gaussian`, `mixture:3`,
/// `class-conditional:2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineChoice {
    Gaussian,
    Mixture(usize),
    ClassConditional(usize),
}

impl FromStr for EngineChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let comps = |arg: Option<&str>| -> Result<usize, String> {
            let m = arg.unwrap_or("1").parse::<usize>().map_err(|e| e.to_string())?;
            if m == 0 {
                return Err("component count must be ≥ 1".into());
            }
            Ok(m)
        };
        match name {
            "gaussian" => Ok(EngineChoice::Gaussian),
            "mixture" => Ok(EngineChoice::Mixture(comps(arg)?)),
            "class-conditional" | "class_conditional" => {
                Ok(EngineChoice::ClassConditional(comps(arg)?))
            }
            other => Err(format!(
                "unknown engine {other:?}; expected gaussian, mixture[:m], or class-conditional[:m]"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub format_version: u32,
    pub task: TaskKind,
    pub engine: Engine,
    /// Normalization applied to inputs before fitting, if any. Regression
    /// targets are normalized with the features; metrics are reported in
    /// normalized units.
    pub norm: Option<NormStats>,
    pub feature_names: Vec<String>,
    /// False when an EM fit hit its iteration cap (best iterate kept).
    pub em_converged: bool,
}

/// EM defaults used by fits unless overridden.
pub const EM_TOL: f64 = 1e-6;
pub const EM_MAX_ITER: usize = 500;

/// Fits the requested engine on the dataset (already normalized upstream).
pub fn fit_engine(ds: &Dataset, choice: EngineChoice, seed: u64) -> Result<Model, ModelError> {
    let (engine, em_converged) = match (choice, ds.task) {
        (EngineChoice::Gaussian, _) => (Engine::Gaussian(fit_gaussian(&ds.rows)?), true),
        (EngineChoice::Mixture(m), _) => {
            let fit = fit_mixture_em(&ds.rows, m, seed, EM_TOL, EM_MAX_ITER)?;
            (Engine::Mixture(fit.model), fit.converged)
        }
        (EngineChoice::ClassConditional(m), TaskKind::Classification { num_classes }) => {
            let labels = ds.labels.as_ref().expect("classification labels");
            let (ccm, conv) =
                fit_class_conditional(&ds.rows, labels, num_classes, m, seed, EM_TOL, EM_MAX_ITER)?;
            (Engine::ClassConditional(ccm), conv)
        }
        (EngineChoice::ClassConditional(_), TaskKind::Regression { .. }) => {
            return Err(ModelError::WrongEngine)
        }
    };
    Ok(Model {
        format_version: MODEL_FORMAT_VERSION,
        task: ds.task,
        engine,
        norm: None,
        feature_names: ds.feature_names.clone(),
        em_converged,
    })
}

impl Model {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json() + "\n")
            .map_err(|e| ModelError::Persistence(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Model, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Persistence(format!("{}: {e}", path.display())))?;
        let model: Model = serde_json::from_str(&text)
            .map_err(|e| ModelError::Persistence(format!("{}: {e}", path.display())))?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelError::Persistence(format!(
                "unsupported model format version {}",
                model.format_version
            )));
        }
        Ok(model)
    }
}
