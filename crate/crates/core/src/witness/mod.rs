//! Entanglement witnesses and the correlation-tensor indicator.
//!
//! Witnesses are stored as real Pauli expansions so that a reduced witness
//! can be read off term by term and measured with a handful of uniform
//! analyzer settings.

mod indicator;
mod pauli;

pub use indicator::{all_setting_words, indicator_norm, CorrelationTensor, IndicatorReport, IndicatorVerdict};
pub use pauli::{expectation, pauli_decompose, Pauli, PauliObservable, PauliWord, COEFF_TOL};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::qstate::QubitKet;
use crate::{Complex64, Error, Result};

/// Overlap bound of Ψ6+ with any biseparable state.
pub const PSI6_OVERLAP_BOUND: f64 = 2.0 / 3.0;

/// Identity constant of the three-setting witness for Ψ6+.
pub const PSI6_REDUCED_IDENTITY: f64 = 181.0 / 576.0;

/// Decomposition of `bound·𝟙 − |target⟩⟨target|`.
pub fn max_overlap_witness(target: &QubitKet, overlap_bound: f64) -> Result<PauliObservable> {
    if !(overlap_bound > 0.0 && overlap_bound < 1.0) {
        return Err(Error::domain(format!("overlap bound {overlap_bound} outside (0, 1)")));
    }
    let v = DMatrix::from_column_slice(target.dim(), 1, target.amplitudes());
    let op = DMatrix::<Complex64>::identity(target.dim(), target.dim()) * Complex64::from(overlap_bound) - &v * v.adjoint();
    pauli_decompose(&op)
}

/// Keeps the words whose non-identity letters all agree and sets the
/// identity coefficient to `identity_constant`.
pub fn reduce_witness(full: &PauliObservable, identity_constant: f64) -> Result<PauliObservable> {
    if !(identity_constant > 0.0) {
        return Err(Error::domain(format!("identity constant {identity_constant} must be positive")));
    }
    Ok(full
        .filtered(|w| w.single_type().is_some())
        .with_coefficient(PauliWord::identity(full.n()), identity_constant))
}

/// `Ψ6+` three-setting witness.
pub fn psi6_reduced_witness(target: &QubitKet) -> Result<PauliObservable> {
    reduce_witness(&max_overlap_witness(target, PSI6_OVERLAP_BOUND)?, PSI6_REDUCED_IDENTITY)
}

/// Largest white-noise admixture `1 − p*` at which the witness still
/// detects `ρ(p) = p|t⟩⟨t| + (1−p)𝟙/2ⁿ`.
///
/// `⟨W⟩_ρ(p)` is linear in `p`, running from the identity coefficient at
/// `p = 0` to `⟨t|W|t⟩` at `p = 1`. The result is clamped to `[0, 1]`.
pub fn white_noise_tolerance(obs: &PauliObservable, target: &QubitKet) -> Result<f64> {
    let pure = expectation(obs, target)?;
    if pure >= 0.0 {
        return Err(Error::domain(format!("witness does not detect the target (expectation {pure})")));
    }
    let mixed = obs.identity_coefficient();
    if mixed <= 0.0 {
        return Ok(1.0);
    }
    let threshold = mixed / (mixed - pure);
    Ok((1.0 - threshold).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessVerdict {
    Entangled,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WitnessReport {
    pub expectation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standard_error: Option<f64>,
    pub threshold: f64,
    pub verdict: WitnessVerdict,
    pub noise_tolerance_at_pure_target: f64,
}

impl WitnessReport {
    /// Entangled iff `expectation + k·SE < 0`; a missing SE counts as zero.
    pub fn new(
        obs: &PauliObservable,
        target: &QubitKet,
        expectation: f64,
        standard_error: Option<f64>,
        k: f64,
    ) -> Result<Self> {
        if standard_error.is_some_and(|se| !(se >= 0.0)) || !(k >= 0.0) {
            return Err(Error::domain("standard error and significance multiplier must be non-negative"));
        }
        let margin = expectation + k * standard_error.unwrap_or(0.0);
        Ok(Self {
            expectation,
            standard_error,
            threshold: 0.0,
            verdict: if margin < 0.0 { WitnessVerdict::Entangled } else { WitnessVerdict::Inconclusive },
            noise_tolerance_at_pure_target: white_noise_tolerance(obs, target)?,
        })
    }
}
