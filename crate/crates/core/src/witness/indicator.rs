//! Norm-based entanglement indicator.
//!
//! For a fully separable n-qubit state the full correlation tensor
//! `T_{i₁…iₙ} = ⟨σ_{i₁} ⊗ … ⊗ σ_{iₙ}⟩` (indices over `x, y, z`) is a convex
//! combination of products of unit Bloch vectors, so its Euclidean norm is at
//! most one. Any partial sum of squared entries above one therefore rules out
//! full separability.

use std::collections::BTreeMap;

use serde::Serialize;

use super::pauli::{Pauli, PauliWord};
use crate::qstate::QuantumState;
use crate::{Error, Result};

const ENTRY_TOL: f64 = 1e-12;

/// Correlation tensor entries keyed by setting words such as `"zzzzzz"`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationTensor {
    n: usize,
    entries: BTreeMap<String, f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorVerdict {
    NotFullySeparable,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IndicatorReport {
    pub value: f64,
    pub verdict: IndicatorVerdict,
}

fn word_to_pauli(word: &str) -> Result<PauliWord> {
    word.chars()
        .map(|ch| match ch {
            'x' => Ok(Pauli::X),
            'y' => Ok(Pauli::Y),
            'z' => Ok(Pauli::Z),
            other => Err(Error::usage(format!("setting word {word:?} has letter {other:?}; expected x, y or z"))),
        })
        .collect::<Result<Vec<_>>>()
        .map(PauliWord::new)
}

/// All `3ⁿ` setting words, lexicographic in `x < y < z`.
pub fn all_setting_words(n: usize) -> Vec<String> {
    (0..3usize.pow(n as u32))
        .map(|mut code| {
            let mut w = vec!['x'; n];
            for slot in w.iter_mut().rev() {
                *slot = ['x', 'y', 'z'][code % 3];
                code /= 3;
            }
            w.into_iter().collect()
        })
        .collect()
}

impl CorrelationTensor {
    /// Validates word letters, lengths and that entries lie in `[−1, 1]`.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (w, v) in entries {
            word_to_pauli(&w)?;
            if w.len() != n {
                return Err(Error::usage(format!("setting word {w:?} is not of length {n}")));
            }
            if !(v.abs() <= 1.0 + ENTRY_TOL) {
                return Err(Error::domain(format!("correlation {v} for {w} outside [-1, 1]")));
            }
            map.insert(w, v);
        }
        Ok(Self { n, entries: map })
    }

    /// Computes the listed entries from a state.
    pub fn from_state<S: QuantumState + ?Sized>(state: &S, words: &[String]) -> Result<Self> {
        let n = state.n_qubits();
        let entries = words
            .iter()
            .map(|w| {
                let p = word_to_pauli(w)?;
                if p.len() != n {
                    return Err(Error::usage(format!("setting word {w:?} is not of length {n}")));
                }
                Ok((w.clone(), state.monomial_trace(&p.monomial()).re))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_entries(n, entries)
    }

    /// All `3ⁿ` entries of a state.
    pub fn full<S: QuantumState + ?Sized>(state: &S) -> Result<Self> {
        Self::from_state(state, &all_setting_words(state.n_qubits()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of squares over every stored entry.
    pub fn norm_sqr(&self) -> f64 {
        self.entries.values().map(|v| v * v).sum()
    }
}

/// `Σ_{s ∈ subset} T_s²`; flags the state as not fully separable when the
/// sum exceeds one.
pub fn indicator_norm(tensor: &CorrelationTensor, subset: &[&str]) -> Result<IndicatorReport> {
    let value = subset
        .iter()
        .map(|w| {
            tensor
                .get(w)
                .map(|v| v * v)
                .ok_or_else(|| Error::usage(format!("correlation tensor has no entry {w:?}")))
        })
        .sum::<Result<f64>>()?;
    let verdict = if value > 1.0 { IndicatorVerdict::NotFullySeparable } else { IndicatorVerdict::Inconclusive };
    Ok(IndicatorReport { value, verdict })
}
