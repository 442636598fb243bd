//! 1 → 3 telecloning over Ψ6+.
//!
//! The register is the unknown qubit (index 0) followed by the six qubits of
//! Ψ6+ (indices 1–6, in mode order a…f). Alice Bell-measures the input
//! together with her port qubit; each receiver applies a Pauli correction
//! chosen by the two-bit outcome.

use std::fmt;

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use serde::Serialize;

use crate::qstate::{fidelity, reference_state, Conditioned, DensityOperator, QuantumState, QubitKet, RefState, NULL_PROBABILITY};
use crate::witness::Pauli;
use crate::{Complex64, Error, Result};

/// Register index of the unknown input qubit.
pub const INPUT_QUBIT: usize = 0;

/// Agreement required between fidelities that must coincide.
pub const FIDELITY_TOL: f64 = 1e-9;

/// Assignment of the six Ψ6+ qubits (register indices 1–6).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ProtocolLayout {
    pub port: usize,
    pub ancillas: [usize; 2],
    pub receivers: [usize; 3],
}

impl ProtocolLayout {
    pub fn new(port: usize, ancillas: [usize; 2], receivers: [usize; 3]) -> Result<Self> {
        let mut all: Vec<usize> = [port].into_iter().chain(ancillas).chain(receivers).collect();
        all.sort_unstable();
        if all != [1, 2, 3, 4, 5, 6] {
            return Err(Error::usage(format!(
                "layout port={port} ancillas={ancillas:?} receivers={receivers:?} does not partition qubits 1-6"
            )));
        }
        Ok(Self { port, ancillas, receivers })
    }

    /// Port on mode `a`, ancillas `b`, `c`, receivers `d`, `e`, `f`.
    pub fn canonical() -> Self {
        Self { port: 1, ancillas: [2, 3], receivers: [4, 5, 6] }
    }

    /// Receivers on the given register indices; the port is the lowest
    /// remaining qubit and the other two are ancillas.
    pub fn with_receivers(receivers: [usize; 3]) -> Result<Self> {
        let rest: Vec<usize> = (1..=6).filter(|q| !receivers.contains(q)).collect();
        if rest.len() != 3 {
            return Err(Error::usage(format!("receivers {receivers:?} must be three distinct qubits in 1-6")));
        }
        Self::new(rest[0], [rest[1], rest[2]], receivers)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum BellOutcome {
    #[serde(rename = "phi+")]
    PhiPlus,
    #[serde(rename = "phi-")]
    PhiMinus,
    #[serde(rename = "psi+")]
    PsiPlus,
    #[serde(rename = "psi-")]
    PsiMinus,
}

impl BellOutcome {
    /// Ordered by the two-bit message `00, 01, 10, 11`.
    pub const ALL: [BellOutcome; 4] =
        [BellOutcome::PhiPlus, BellOutcome::PhiMinus, BellOutcome::PsiPlus, BellOutcome::PsiMinus];

    pub fn bits(self) -> u8 {
        self as u8
    }

    pub fn from_bits(bits: u8) -> Result<Self> {
        Self::ALL.get(bits as usize).copied().ok_or_else(|| Error::usage(format!("Bell outcome {bits} is not a 2-bit value")))
    }

    /// Amplitudes on `|00⟩, |01⟩, |10⟩, |11⟩` of the two measured qubits.
    pub fn amplitudes(self) -> [Complex64; 4] {
        let h = Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
        let z = Complex64::ZERO;
        match self {
            BellOutcome::PhiPlus => [h, z, z, h],
            BellOutcome::PhiMinus => [h, z, z, -h],
            BellOutcome::PsiPlus => [z, h, h, z],
            BellOutcome::PsiMinus => [z, h, -h, z],
        }
    }
}

impl fmt::Display for BellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellOutcome::PhiPlus => "phi+",
            BellOutcome::PhiMinus => "phi-",
            BellOutcome::PsiPlus => "psi+",
            BellOutcome::PsiMinus => "psi-",
        })
    }
}

/// Projects qubits `q1`, `q2` onto a Bell state and removes them.
pub fn bell_measure(state: &QubitKet, q1: usize, q2: usize, outcome: BellOutcome) -> Result<Conditioned> {
    let n = state.n();
    if q1 == q2 || q1 >= n || q2 >= n {
        return Err(Error::usage(format!("Bell measurement on qubits {q1}, {q2} of {n}")));
    }
    let (b1, b2) = (n - 1 - q1, n - 1 - q2);
    let bell = outcome.amplitudes();
    let kept: Vec<usize> = (0..n).filter(|&q| q != q1 && q != q2).collect();
    let amps = state.amplitudes();
    let rest: Vec<Complex64> = (0..1usize << (n - 2))
        .map(|r| {
            let base = kept
                .iter()
                .enumerate()
                .filter(|&(i, _)| r >> (n - 3 - i) & 1 == 1)
                .fold(0usize, |acc, (_, &q)| acc | 1 << (n - 1 - q));
            (0..4)
                .map(|j| {
                    let k = base | (j >> 1) << b1 | (j & 1) << b2;
                    bell[j].conj() * amps[k]
                })
                .sum()
        })
        .collect();
    let probability: f64 = rest.iter().map(|a| a.norm_sqr()).sum();
    if probability < NULL_PROBABILITY {
        return Ok(Conditioned { state: None, probability: 0.0 });
    }
    Ok(Conditioned { state: Some(QubitKet::from_unnormalized(n - 2, rest)?), probability })
}

/// Per-outcome corrections, one Pauli per receiver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CorrectionTable {
    corrections: [[Pauli; 3]; 4],
}

impl CorrectionTable {
    pub fn new(corrections: [[Pauli; 3]; 4]) -> Self {
        Self { corrections }
    }

    /// Same Pauli at every receiver.
    pub fn uniform(per_outcome: [Pauli; 4]) -> Self {
        Self { corrections: per_outcome.map(|p| [p; 3]) }
    }

    pub fn get(&self, outcome: BellOutcome) -> [Pauli; 3] {
        self.corrections[outcome.bits() as usize]
    }

    /// True when every outcome applies one Pauli to all receivers.
    pub fn is_uniform(&self) -> bool {
        self.corrections.iter().all(|c| c.iter().all(|&p| p == c[0]))
    }
}

#[derive(Clone, Debug)]
pub struct TelecloneRun {
    pub outcome: BellOutcome,
    pub probability: f64,
    pub receivers: [DensityOperator; 3],
    pub fidelities: [f64; 3],
}

/// Reduced receiver states after the Bell measurement and corrections.
/// `None` for a null outcome.
fn receiver_states(
    input: &QubitKet,
    layout: &ProtocolLayout,
    outcome: BellOutcome,
    corrections: [Pauli; 3],
) -> Result<Option<(f64, [Matrix2<Complex64>; 3])>> {
    if input.n() != 1 {
        return Err(Error::usage(format!("telecloning input must be one qubit, got {}", input.n())));
    }
    let joint = input.tensor(&reference_state(RefState::Psi6Plus));
    let Conditioned { state, probability } = bell_measure(&joint, INPUT_QUBIT, layout.port, outcome)?;
    let Some(mut rest) = state else { return Ok(None) };
    // register index → position after removing the input and the port
    let position = |q: usize| q - 1 - usize::from(q > layout.port);
    for (r, p) in layout.receivers.iter().zip(corrections) {
        rest = rest.apply_local(position(*r), &p.matrix());
    }
    Ok(Some((probability, layout.receivers.map(|r| rest.reduced_qubit(position(r))))))
}

fn qubit_fidelity(rho: &Matrix2<Complex64>, x: &QubitKet) -> f64 {
    let v = Vector2::new(x.amplitudes()[0], x.amplitudes()[1]);
    v.dotc(&(rho * v)).re
}

/// Runs the protocol for a fixed Bell outcome.
pub fn teleclone(input: &QubitKet, layout: &ProtocolLayout, table: &CorrectionTable, outcome: BellOutcome) -> Result<TelecloneRun> {
    let (probability, states) = receiver_states(input, layout, outcome, table.get(outcome))?
        .ok_or_else(|| Error::Protocol(format!("Bell outcome {outcome} has zero probability")))?;
    let receivers = states
        .iter()
        .map(|m| DensityOperator::new(1, nalgebra::DMatrix::from_fn(2, 2, |r, c| m[(r, c)])))
        .collect::<Result<Vec<_>>>()?;
    let receivers: [DensityOperator; 3] = receivers.try_into().expect("three receivers");
    let fidelities = [0, 1, 2].map(|i| fidelity(&receivers[i], input).unwrap_or(0.0));
    Ok(TelecloneRun { outcome, probability, receivers, fidelities })
}

/// Runs the protocol with the Bell outcome drawn from its distribution.
pub fn teleclone_sampled<R: Rng + ?Sized>(
    input: &QubitKet,
    layout: &ProtocolLayout,
    table: &CorrectionTable,
    rng: &mut R,
) -> Result<TelecloneRun> {
    let mut u: f64 = rng.random();
    let mut chosen = BellOutcome::PsiMinus;
    for outcome in BellOutcome::ALL {
        let p = bell_measure(&input.tensor(&reference_state(RefState::Psi6Plus)), INPUT_QUBIT, layout.port, outcome)?.probability;
        if u < p {
            chosen = outcome;
            break;
        }
        u -= p;
    }
    teleclone(input, layout, table, chosen)
}

/// The six ±1 eigenstates of X, Y and Z.
pub fn probe_inputs() -> Vec<QubitKet> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let i = Complex64::I;
    [
        (1.0.into(), 0.0.into()),
        (0.0.into(), 1.0.into()),
        (h.into(), h.into()),
        (h.into(), (-h).into()),
        (h.into(), i * h),
        (h.into(), -i * h),
    ]
    .into_iter()
    .map(|(a, b): (Complex64, Complex64)| QubitKet::new(1, vec![a, b]).expect("normalized probe"))
    .collect()
}

/// Fidelities `[probe][receiver]` for one outcome and correction choice.
fn probe_fidelities(layout: &ProtocolLayout, outcome: BellOutcome, corrections: [Pauli; 3]) -> Result<Option<Vec<[f64; 3]>>> {
    probe_inputs()
        .iter()
        .map(|x| Ok(receiver_states(x, layout, outcome, corrections)?.map(|(_, s)| s.map(|m| qubit_fidelity(&m, x)))))
        .collect::<Result<Option<Vec<_>>>>()
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Searches Pauli corrections so that every receiver's fidelity with each
/// probe input is the same for all four Bell outcomes.
///
/// Per outcome the uniform correction with the largest mean fidelity is
/// tried first. If the resulting table is not outcome-independent, each
/// receiver is optimized on its own; since a receiver's reduced state
/// depends only on its own correction this covers all `4³` assignments.
pub fn derive_correction_table(layout: &ProtocolLayout) -> Result<CorrectionTable> {
    let best = |score: &dyn Fn(Pauli) -> Result<f64>| -> Result<Pauli> {
        let mut best = (Pauli::I, f64::NEG_INFINITY);
        for p in Pauli::ALL {
            let s = score(p)?;
            if s > best.1 + FIDELITY_TOL {
                best = (p, s);
            }
        }
        Ok(best.0)
    };
    let score_of = |fids: Option<Vec<[f64; 3]>>, receiver: Option<usize>| -> f64 {
        match fids {
            None => f64::NEG_INFINITY,
            Some(f) => mean(f.iter().flat_map(|row| row.iter().enumerate().filter(|(i, _)| receiver.is_none_or(|r| r == *i)).map(|(_, v)| *v))),
        }
    };

    let mut uniform = [Pauli::I; 4];
    for (slot, outcome) in uniform.iter_mut().zip(BellOutcome::ALL) {
        *slot = best(&|p| Ok(score_of(probe_fidelities(layout, outcome, [p; 3])?, None)))?;
    }
    let table = CorrectionTable::uniform(uniform);
    if outcome_independent(layout, &table)? {
        return Ok(table);
    }

    let mut corrections = [[Pauli::I; 3]; 4];
    for (row, outcome) in corrections.iter_mut().zip(BellOutcome::ALL) {
        for r in 0..3 {
            row[r] = best(&|p| {
                let mut c = [Pauli::I; 3];
                c[r] = p;
                Ok(score_of(probe_fidelities(layout, outcome, c)?, Some(r)))
            })?;
        }
    }
    let table = CorrectionTable::new(corrections);
    if outcome_independent(layout, &table)? {
        return Ok(table);
    }
    Err(Error::Protocol(format!(
        "no Pauli correction table makes receiver fidelities outcome-independent for layout {layout:?}"
    )))
}

fn outcome_independent(layout: &ProtocolLayout, table: &CorrectionTable) -> Result<bool> {
    let mut reference: Option<Vec<[f64; 3]>> = None;
    for outcome in BellOutcome::ALL {
        let Some(fids) = probe_fidelities(layout, outcome, table.get(outcome))? else { return Ok(false) };
        match &reference {
            None => reference = Some(fids),
            Some(r) => {
                let same = r.iter().flatten().zip(fids.iter().flatten()).all(|(a, b)| (a - b).abs() <= FIDELITY_TOL);
                if !same {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Optimal universal `1 → M` cloning fidelity `(2M + 1)/(3M)`.
pub fn optimal_fidelity(m: u32) -> Result<f64> {
    if m < 1 {
        return Err(Error::domain("number of copies must be at least 1"));
    }
    Ok((2.0 * m as f64 + 1.0) / (3.0 * m as f64))
}

#[derive(Clone, Debug, Serialize)]
pub struct OutcomeReport {
    pub outcome: BellOutcome,
    pub bits: String,
    pub probability: f64,
    pub corrections: [Pauli; 3],
    pub fidelities: [f64; 3],
}

#[derive(Clone, Debug, Serialize)]
pub struct TelecloneReport {
    pub layout: ProtocolLayout,
    pub uniform_corrections: bool,
    pub input: [[f64; 2]; 2],
    pub optimal_fidelity: f64,
    pub outcomes: Vec<OutcomeReport>,
}

/// Runs every Bell outcome for one input.
pub fn report(input: &QubitKet, layout: &ProtocolLayout, table: &CorrectionTable) -> Result<TelecloneReport> {
    let outcomes = BellOutcome::ALL
        .into_iter()
        .map(|o| {
            let run = teleclone(input, layout, table, o)?;
            Ok(OutcomeReport {
                outcome: o,
                bits: format!("{:02b}", o.bits()),
                probability: run.probability,
                corrections: table.get(o),
                fidelities: run.fidelities,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let a = input.amplitudes();
    Ok(TelecloneReport {
        layout: *layout,
        uniform_corrections: table.is_uniform(),
        input: [[a[0].re, a[0].im], [a[1].re, a[1].im]],
        optimal_fidelity: optimal_fidelity(3)?,
        outcomes,
    })
}
