//! The evolving acquisition state: which features are observed, with what values.

use crate::error::StateError;
use serde::{Deserialize, Serialize};

/// Observed index set `o` with aligned values over a `dim`-dimensional instance.
///
/// Value semantics: `acquire` returns a new state, so a trace can retain every
/// intermediate state and states can be shared across threads freely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedState {
    dim: usize,
    observed: Vec<usize>,
    values: Vec<f64>,
}

impl ObservedState {
    pub fn empty(dim: usize) -> Self {
        ObservedState { dim, observed: Vec::new(), values: Vec::new() }
    }

    /// Builds a state from parallel index/value lists.
    pub fn from_pairs(dim: usize, pairs: &[(usize, f64)]) -> Result<Self, StateError> {
        let mut s = Self::empty(dim);
        for &(i, v) in pairs {
            s = s.acquire(i, v)?;
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Observed indices in acquisition order. Unique by construction.
    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_observed(&self) -> usize {
        self.observed.len()
    }

    pub fn is_observed(&self, i: usize) -> bool {
        self.observed.contains(&i)
    }

    /// Unobserved set u = {0..dim-1} \ o, ascending.
    pub fn unobserved(&self) -> Vec<usize> {
        (0..self.dim).filter(|i| !self.is_observed(*i)).collect()
    }

    /// Returns a new state with feature `i` observed at value `v`.
    pub fn acquire(&self, i: usize, v: f64) -> Result<Self, StateError> {
        if i >= self.dim {
            return Err(StateError::IndexOutOfRange { index: i, dim: self.dim });
        }
        if self.is_observed(i) {
            return Err(StateError::AlreadyObserved(i));
        }
        let mut next = self.clone();
        next.observed.push(i);
        next.values.push(v);
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn acquire_appends_index_and_value() {
        let s = ObservedState::empty(3).acquire(1, 0.5).unwrap();
        assert_eq!(s.observed(), &[1]);
        assert_eq!(s.values(), &[0.5]);
        assert_eq!(s.unobserved(), vec![0, 2]);
    }

    #[test]
    fn acquiring_twice_is_rejected() {
        let s = ObservedState::empty(3).acquire(1, 0.5).unwrap();
        assert_eq!(s.acquire(1, 0.7), Err(StateError::AlreadyObserved(1)));
    }

    #[test]
    fn out_of_range_is_rejected() {
        let s = ObservedState::empty(3);
        assert_eq!(s.acquire(3, 0.0), Err(StateError::IndexOutOfRange { index: 3, dim: 3 }));
    }

    #[test]
    fn full_observation_empties_the_unobserved_set() {
        let s = ObservedState::from_pairs(3, &[(0, 0.0), (1, 1.0), (2, 2.0)]).unwrap();
        assert!(s.unobserved().is_empty());
    }

    #[test]
    fn acquire_leaves_the_input_unchanged() {
        let s0 = ObservedState::empty(2);
        let _s1 = s0.acquire(0, 1.0).unwrap();
        assert_eq!(s0.num_observed(), 0);
    }

    proptest! {
        // |o| + |u| = dim after any valid acquisition sequence.
        #[test]
        fn observed_plus_unobserved_is_dim(order in proptest::sample::subsequence((0usize..8).collect::<Vec<_>>(), 0..8)) {
            let mut s = ObservedState::empty(8);
            for (k, &i) in order.iter().enumerate() {
                s = s.acquire(i, k as f64).unwrap();
                prop_assert_eq!(s.num_observed() + s.unobserved().len(), 8);
            }
        }
    }
}
