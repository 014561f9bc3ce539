//! Exact CMI over small discrete joint tables. Validation oracle for the
//! Monte Carlo estimators; supports up to a handful of low-cardinality
//! variables, enumerated exhaustively.

use crate::cmi::{CmiEstimate, EstimatorKind};
use crate::error::ModelError;
use std::collections::HashMap;

/// Full joint probability table. `probs` is flat with the last variable's
/// index varying fastest.
#[derive(Debug, Clone)]
pub struct DiscreteTable {
    pub card: Vec<usize>,
    pub probs: Vec<f64>,
}

impl DiscreteTable {
    pub fn new(card: Vec<usize>, probs: Vec<f64>) -> Result<Self, ModelError> {
        let size: usize = card.iter().product();
        assert_eq!(size, probs.len(), "table size mismatch");
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 || probs.iter().any(|&p| p < 0.0) {
            return Err(ModelError::NotNormalized(total));
        }
        Ok(Self { card, probs })
    }

    pub fn num_vars(&self) -> usize {
        self.card.len()
    }

    /// Iterates every full assignment with its probability.
    fn assignments(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        (0..self.probs.len()).map(|mut flat| {
            let p = self.probs[flat];
            let mut a = vec![0usize; self.card.len()];
            for v in (0..self.card.len()).rev() {
                a[v] = flat % self.card[v];
                flat /= self.card[v];
            }
            (a, p)
        })
    }

    fn marginal_over(&self, vars: &[usize]) -> HashMap<Vec<usize>, f64> {
        let mut m: HashMap<Vec<usize>, f64> = HashMap::new();
        for (a, p) in self.assignments() {
            if p == 0.0 {
                continue;
            }
            let key: Vec<usize> = vars.iter().map(|&v| a[v]).collect();
            *m.entry(key).or_insert(0.0) += p;
        }
        m
    }
}

/// Exact I(X_i; X_j | X_cond) = Σ p(a,b,s) ln[ p(a,b,s)·p(s) / (p(a,s)·p(b,s)) ]
/// summed over the support. Always ≥ 0 up to rounding, clamped at 0.
pub fn cmi_discrete_bruteforce(
    table: &DiscreteTable,
    i: usize,
    j: usize,
    cond: &[usize],
) -> Result<CmiEstimate, ModelError> {
    assert_ne!(i, j);
    assert!(!cond.contains(&i) && !cond.contains(&j));
    let mut ijs: Vec<usize> = vec![i, j];
    ijs.extend_from_slice(cond);
    let is: Vec<usize> = std::iter::once(i).chain(cond.iter().copied()).collect();
    let js: Vec<usize> = std::iter::once(j).chain(cond.iter().copied()).collect();
    let p_ijs = table.marginal_over(&ijs);
    let p_is = table.marginal_over(&is);
    let p_js = table.marginal_over(&js);
    let p_s = table.marginal_over(cond);
    let mut total = 0.0;
    for (key, &p) in &p_ijs {
        let (a, b, s) = (key[0], key[1], &key[2..]);
        let key_is: Vec<usize> = std::iter::once(a).chain(s.iter().copied()).collect();
        let key_js: Vec<usize> = std::iter::once(b).chain(s.iter().copied()).collect();
        let ps = if cond.is_empty() { 1.0 } else { p_s[s] };
        total += p * (p * ps / (p_is[&key_is] * p_js[&key_js])).ln();
    }
    Ok(CmiEstimate {
        value: total.max(0.0),
        n_samples: 1,
        estimator: EstimatorKind::DiscreteBruteforce,
    })
}

/// The XOR triple (a, b, y = a ⊕ b) with a, b uniform binary. The canonical
/// example where pairwise independence hides a fully informative pair.
pub fn xor_table() -> DiscreteTable {
    let mut probs = vec![0.0; 8];
    for a in 0..2usize {
        for b in 0..2usize {
            let y = a ^ b;
            probs[a * 4 + b * 2 + y] = 0.25;
        }
    }
    DiscreteTable::new(vec![2, 2, 2], probs).unwrap()
}
