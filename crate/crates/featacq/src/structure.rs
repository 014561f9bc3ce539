//! Structure learning: pairwise full-conditioning Markov-blanket discovery,
//! spouse-link deletion via separating-set search, v-structure orientation,
//! and completion to a DAG. CI decisions come from a pluggable oracle.

use crate::cmi::cmi_gaussian_exact;
use crate::error::{Error, ModelError};
use crate::gaussian::{fit_gaussian, GaussianParams};
use crate::graph::{complete_orientation, Dag, Pdag};
use crate::util::substream;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use std::collections::HashMap;

/// Default CI threshold for oracles with sampling noise. Exact oracles can
/// run at machine-precision thresholds instead.
pub const DEFAULT_SAMPLE_EPSILON: f64 = 0.015;

/// Cap on separating-set size during spouse-link deletion.
pub const MAX_SEPSET_SIZE: usize = 4;

#[derive(Debug, Clone, Copy)]
pub struct CiResult {
    pub independent: bool,
    pub stat: f64,
}

/// A conditional-independence test contract: symmetric in (i, j) and
/// deterministic, so results are reproducible and order-free.
pub trait CiOracle: Sync {
    fn num_vars(&self) -> usize;
    fn epsilon(&self) -> f64;
    fn stat(&self, i: usize, j: usize, cond: &[usize]) -> Result<f64, ModelError>;

    fn test(&self, i: usize, j: usize, cond: &[usize]) -> Result<CiResult, ModelError> {
        let stat = self.stat(i, j, cond)?;
        Ok(CiResult { independent: stat <= self.epsilon(), stat })
    }
}

/// Closed-form Gaussian CMI on a fixed covariance. With the population
/// covariance of a linear-Gaussian model this is a noise-free oracle; with
/// a sample-fitted covariance the stats carry O(1/n) estimation noise and
/// need a matching epsilon.
pub struct GaussianCiOracle {
    params: GaussianParams,
    epsilon: f64,
}

impl GaussianCiOracle {
    pub fn from_params(params: GaussianParams, epsilon: f64) -> Self {
        Self { params, epsilon }
    }

    pub fn fit_from_rows(rows: &DMatrix<f64>, epsilon: f64) -> Result<Self, ModelError> {
        Ok(Self { params: fit_gaussian(rows)?, epsilon })
    }
}

impl CiOracle for GaussianCiOracle {
    fn num_vars(&self) -> usize {
        self.params.dim()
    }

    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn stat(&self, i: usize, j: usize, cond: &[usize]) -> Result<f64, ModelError> {
        Ok(cmi_gaussian_exact(&self.params, i, j, cond)?.value)
    }
}

/// Markov blankets by the symmetric pairwise test: j ∈ MB(i) iff
/// I(x_i; x_j | everything else) exceeds epsilon.
pub fn learn_markov_blankets(oracle: &dyn CiOracle) -> Result<Vec<Vec<usize>>, ModelError> {
    let d = oracle.num_vars();
    let mut pairs = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            pairs.push((i, j));
        }
    }
    let results: Vec<(usize, usize, bool)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let cond: Vec<usize> = (0..d).filter(|&v| v != i && v != j).collect();
            let r = oracle.test(i, j, &cond)?;
            Ok((i, j, !r.independent))
        })
        .collect::<Result<_, ModelError>>()?;
    let mut mbs = vec![Vec::new(); d];
    for (i, j, linked) in results {
        if linked {
            mbs[i].push(j);
            mbs[j].push(i);
        }
    }
    for mb in &mut mbs {
        mb.sort_unstable();
    }
    Ok(mbs)
}

/// Subsets of `items` up to `max_size`, ordered by size then lexicographic
/// position, so the first separating set found is deterministic.
fn subsets_up_to(items: &[usize], max_size: usize) -> Vec<Vec<usize>> {
    let n = items.len();
    let mut masks: Vec<u32> = (0..(1u32 << n))
        .filter(|m| (m.count_ones() as usize) <= max_size)
        .collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    masks
        .into_iter()
        .map(|m| (0..n).filter(|&b| m >> b & 1 == 1).map(|b| items[b]).collect())
        .collect()
}

#[derive(Debug)]
pub struct ResolvedStructure {
    /// Pattern: skeleton plus oriented v-structures, before rule closure.
    pub pattern: Pdag,
    /// Separating set recorded for each deleted moral-graph link.
    pub sepsets: HashMap<(usize, usize), Vec<usize>>,
    pub warnings: Vec<String>,
}

/// Moral graph from the blankets, spouse-link deletion by separating-set
/// search, then v-structure orientation. A pair that was never linked is
/// independent given everything else, so that full set acts as its
/// separating set and can never license a v-structure.
pub fn resolve_structure(
    mbs: &[Vec<usize>],
    oracle: &dyn CiOracle,
) -> Result<ResolvedStructure, ModelError> {
    let d = mbs.len();
    let mut pdag = Pdag::new(d).expect("blanket count within node cap");
    for (i, mb) in mbs.iter().enumerate() {
        for &j in mb {
            if j > i {
                pdag.add_undirected(i, j).expect("valid blanket indices");
            }
        }
    }
    let mut sepsets: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    let mut warnings = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            if !pdag.has_undirected(i, j) {
                continue;
            }
            let mb_i: Vec<usize> = mbs[i].iter().copied().filter(|&v| v != j).collect();
            let mb_j: Vec<usize> = mbs[j].iter().copied().filter(|&v| v != i).collect();
            let pool = if mb_i.len() <= mb_j.len() { mb_i } else { mb_j };
            for s in subsets_up_to(&pool, MAX_SEPSET_SIZE) {
                if oracle.test(i, j, &s)?.independent {
                    pdag.remove_undirected(i, j);
                    sepsets.insert((i, j), s);
                    break;
                }
            }
        }
    }
    // orient i→k←j for every non-adjacent pair whose separating set omits k
    let mut demands: Vec<(usize, usize)> = Vec::new();
    for k in 0..d {
        let nbrs: Vec<usize> = (0..d).filter(|&v| v != k && pdag.has_undirected(v, k)).collect();
        for (ii, &i) in nbrs.iter().enumerate() {
            for &j in &nbrs[ii + 1..] {
                if pdag.adjacent(i, j) {
                    continue;
                }
                match sepsets.get(&(i.min(j), i.max(j))) {
                    Some(s) if !s.contains(&k) => {
                        demands.push((i, k));
                        demands.push((j, k));
                    }
                    // never-linked pairs were separated by the full
                    // conditioning set, which contains k
                    _ => {}
                }
            }
        }
    }
    demands.sort_unstable();
    demands.dedup();
    for &(p, c) in &demands {
        if demands.binary_search(&(c, p)).is_ok() {
            if p < c {
                warnings.push(format!(
                    "conflicting v-structure orientations for edge {p}–{c}; left undirected"
                ));
            }
            continue;
        }
        if pdag.has_undirected(p, c) {
            pdag.orient(p, c);
        }
    }
    Ok(ResolvedStructure { pattern: pdag, sepsets, warnings })
}

#[derive(Debug)]
pub struct LearnedBn {
    pub dag: Dag,
    /// Rule-closed pattern: the equivalence class actually identified.
    pub cpdag: Pdag,
    pub warnings: Vec<String>,
}

/// Full pipeline: blankets → skeleton and v-structures → rule closure →
/// seeded completion to a member DAG of the identified class.
pub fn learn_bn(oracle: &dyn CiOracle, seed: u64) -> Result<LearnedBn, Error> {
    let mbs = learn_markov_blankets(oracle)?;
    let resolved = resolve_structure(&mbs, oracle)?;
    let mut cpdag = resolved.pattern.clone();
    cpdag.apply_meek_rules();
    let dag = complete_orientation(&resolved.pattern, seed)?;
    Ok(LearnedBn { dag, cpdag, warnings: resolved.warnings })
}

/// Convenience entry point over raw rows: fits a joint Gaussian and runs the
/// pipeline at the given threshold.
pub fn learn_bn_from_rows(rows: &DMatrix<f64>, epsilon: f64, seed: u64) -> Result<LearnedBn, Error> {
    let oracle = GaussianCiOracle::fit_from_rows(rows, epsilon)?;
    learn_bn(&oracle, seed)
}

/// Null-calibrated threshold: breaks every dependence by independently
/// permuting each column, refits, and takes the 95th percentile of all
/// full-conditioning CMI stats across repetitions.
pub fn permutation_null_epsilon(rows: &DMatrix<f64>, seed: u64, reps: usize) -> Result<f64, ModelError> {
    assert!(reps >= 1);
    let d = rows.ncols();
    let mut stats = Vec::new();
    for rep in 0..reps {
        let mut shuffled = rows.clone();
        for c in 0..d {
            let mut col: Vec<f64> = rows.column(c).iter().copied().collect();
            let mut rng = substream(seed, &[0x9E21, rep as u64, c as u64]);
            col.shuffle(&mut rng);
            for (r, v) in col.into_iter().enumerate() {
                shuffled[(r, c)] = v;
            }
        }
        let g = fit_gaussian(&shuffled)?;
        for i in 0..d {
            for j in (i + 1)..d {
                let cond: Vec<usize> = (0..d).filter(|&v| v != i && v != j).collect();
                stats.push(cmi_gaussian_exact(&g, i, j, &cond)?.value);
            }
        }
    }
    stats.sort_by(f64::total_cmp);
    let idx = ((stats.len() as f64 * 0.95).ceil() as usize).saturating_sub(1);
    Ok(stats[idx])
}
