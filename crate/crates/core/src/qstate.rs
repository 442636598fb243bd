//! Dense n-qubit states.
//!
//! Basis index convention: qubit 0 (mode `a`) is the most significant bit,
//! and bit value 0 is `H`, 1 is `V`. The label of index `0b000111` for six
//! qubits is therefore `"HHHVVV"`. Every other module relies on this single
//! convention.

use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::optics::{analyzer_basis, AnalyzerSetting, NamedBasis};
use crate::{Complex64, Error, Result};

const NORM_TOL: f64 = 1e-12;
/// Outcome probabilities below this are reported as null results.
pub const NULL_PROBABILITY: f64 = 1e-14;

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Label of basis index `index` for `n` qubits, e.g. `"HHVHVV"`.
pub fn basis_label(index: usize, n: usize) -> String {
    (0..n)
        .map(|q| if index >> (n - 1 - q) & 1 == 0 { 'H' } else { 'V' })
        .collect()
}

/// Inverse of [`basis_label`]. Accepts `H`/`V` as well as `0`/`1`.
pub fn parse_basis_label(label: &str) -> Result<usize> {
    label.chars().try_fold(0usize, |acc, ch| match ch {
        'H' | '0' => Ok(acc << 1),
        'V' | '1' => Ok(acc << 1 | 1),
        other => Err(Error::usage(format!("bad basis letter {other:?} in {label:?}"))),
    })
}

/// Operator of the form `M|k⟩ = phase[k] |k ⊕ flip⟩`; Pauli strings and
/// their products all have this shape.
#[derive(Clone, Debug)]
pub struct Monomial {
    pub flip: usize,
    pub phase: Vec<Complex64>,
}

/// Anything with a well-defined n-qubit density matrix.
pub trait QuantumState {
    fn n_qubits(&self) -> usize;

    /// Probabilities of the computational basis outcomes after applying the
    /// single-qubit unitary `rotations[q]` to every qubit `q`.
    fn rotated_populations(&self, rotations: &[Matrix2<Complex64>]) -> Vec<f64>;

    /// `Tr(ρ M)`.
    fn monomial_trace(&self, op: &Monomial) -> Complex64;

    /// Reduced density matrix of a single qubit.
    fn reduced_qubit(&self, qubit: usize) -> Matrix2<Complex64>;
}

/// A normalized n-qubit pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitKet {
    n: usize,
    amps: DVector<Complex64>,
}

impl QubitKet {
    /// Builds a ket from amplitudes that must already be unit norm.
    pub fn new(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_len(n, amps.len())?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::domain(format!("ket norm is {norm}, expected 1")));
        }
        Ok(Self { n, amps: DVector::from_vec(amps) })
    }

    /// Normalizes `amps`. Fails on the zero vector.
    pub fn from_unnormalized(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_len(n, amps.len())?;
        let mut v = DVector::from_vec(amps);
        let norm = v.norm();
        if norm < 1e-300 {
            return Err(Error::domain("cannot normalize the zero vector"));
        }
        v.unscale_mut(norm);
        Ok(Self { n, amps: v })
    }

    /// Computational basis state from a label such as `"HHV"`.
    pub fn basis(label: &str) -> Result<Self> {
        let n = label.chars().count();
        let idx = parse_basis_label(label)?;
        let mut amps = vec![Complex64::ZERO; 1 << n];
        amps[idx] = Complex64::ONE;
        Ok(Self { n, amps: DVector::from_vec(amps) })
    }

    /// Product state of single-qubit kets (each normalized on input).
    pub fn product(qubits: &[Vector2<Complex64>]) -> Result<Self> {
        let mut amps = vec![Complex64::ONE];
        for q in qubits {
            let q = q.normalize();
            amps = amps.iter().flat_map(|a| [a * q[0], a * q[1]]).collect();
        }
        Self::from_unnormalized(qubits.len(), amps)
    }

    /// Normalized sum `Σ w_i |label_i⟩`.
    pub fn superpose(terms: &[(Complex64, &str)]) -> Result<Self> {
        let n = terms
            .first()
            .map(|(_, l)| l.len())
            .ok_or_else(|| Error::usage("empty superposition"))?;
        let mut amps = vec![Complex64::ZERO; 1 << n];
        for (w, label) in terms {
            if label.len() != n {
                return Err(Error::usage("labels of different length"));
            }
            amps[parse_basis_label(label)?] += w;
        }
        Self::from_unnormalized(n, amps)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        self.amps.as_slice()
    }

    pub fn amplitude(&self, label: &str) -> Result<Complex64> {
        if label.len() != self.n {
            return Err(Error::usage(format!("label {label:?} has wrong length")));
        }
        Ok(self.amps[parse_basis_label(label)?])
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QubitKet) -> Complex64 {
        self.amps.dotc(&other.amps)
    }

    pub fn overlap(&self, other: &QubitKet) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// `|self⟩ ⊗ |other⟩`, with `self` on the most significant qubits.
    pub fn tensor(&self, other: &QubitKet) -> QubitKet {
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect::<Vec<_>>();
        QubitKet { n: self.n + other.n, amps: DVector::from_vec(amps) }
    }

    pub fn scale(&self, phase: Complex64) -> QubitKet {
        QubitKet { n: self.n, amps: &self.amps * phase }
    }

    /// Applies `u` to one qubit.
    pub fn apply_local(&self, qubit: usize, u: &Matrix2<Complex64>) -> QubitKet {
        let mut out = self.clone();
        apply_to_vector(out.amps.as_mut_slice(), self.n, qubit, u);
        out
    }

    /// Applies `u` to every qubit.
    pub fn apply_all(&self, u: &Matrix2<Complex64>) -> QubitKet {
        let mut out = self.clone();
        for q in 0..self.n {
            apply_to_vector(out.amps.as_mut_slice(), self.n, q, u);
        }
        out
    }

    /// Swaps `H` and `V` on every qubit.
    pub fn bit_flip(&self) -> QubitKet {
        let mask = self.dim() - 1;
        let amps = (0..self.dim()).map(|k| self.amps[k ^ mask]).collect();
        QubitKet { n: self.n, amps: DVector::from_vec(amps) }
    }

    /// Reorders qubits: qubit `q` of the result is qubit `order[q]` of `self`.
    pub fn permute(&self, order: &[usize]) -> Result<QubitKet> {
        let mut seen = vec![false; self.n];
        if order.len() != self.n || order.iter().any(|&q| q >= self.n || std::mem::replace(&mut seen[q], true)) {
            return Err(Error::usage(format!("{order:?} is not a permutation of {} qubits", self.n)));
        }
        let n = self.n;
        let amps = (0..self.dim())
            .map(|k| {
                let src = (0..n).fold(0usize, |acc, q| {
                    let bit = k >> (n - 1 - q) & 1;
                    acc | bit << (n - 1 - order[q])
                });
                self.amps[src]
            })
            .collect();
        Ok(QubitKet { n, amps: DVector::from_vec(amps) })
    }

    /// Removes the global phase: the largest amplitude (earliest basis index
    /// on ties) becomes real and positive.
    pub fn canonical_gauge(&self) -> QubitKet {
        let max = self.amps.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let Some(lead) = self.amps.iter().find(|a| a.norm() > max - NORM_TOL) else {
            return self.clone();
        };
        let phase = lead.conj() / lead.norm();
        self.scale(phase)
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator { n: self.n, matrix: &self.amps * self.amps.adjoint() }
    }

    /// Indices and amplitudes of the non-negligible components.
    pub fn support(&self, tol: f64) -> Vec<(usize, Complex64)> {
        self.amps.iter().copied().enumerate().filter(|(_, a)| a.norm() > tol).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let amplitudes: Vec<_> = self
            .amps
            .iter()
            .enumerate()
            .map(|(k, a)| serde_json::json!({ "label": basis_label(k, self.n), "re": a.re, "im": a.im }))
            .collect();
        serde_json::json!({ "n": self.n, "amplitudes": amplitudes })
    }
}

impl fmt::Display for QubitKet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, a) in self.support(1e-12) {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "({:+.6}{:+.6}i)|{}⟩", a.re, a.im, basis_label(k, self.n))?;
        }
        Ok(())
    }
}

impl QuantumState for QubitKet {
    fn n_qubits(&self) -> usize {
        self.n
    }

    fn rotated_populations(&self, rotations: &[Matrix2<Complex64>]) -> Vec<f64> {
        let mut v = self.amps.clone();
        for (q, u) in rotations.iter().enumerate() {
            apply_to_vector(v.as_mut_slice(), self.n, q, u);
        }
        v.iter().map(|a| a.norm_sqr()).collect()
    }

    fn monomial_trace(&self, op: &Monomial) -> Complex64 {
        (0..self.dim())
            .map(|k| self.amps[k ^ op.flip].conj() * op.phase[k] * self.amps[k])
            .sum()
    }

    fn reduced_qubit(&self, qubit: usize) -> Matrix2<Complex64> {
        let bit = 1 << (self.n - 1 - qubit);
        let mut rho = Matrix2::zeros();
        for k in (0..self.dim()).filter(|k| k & bit == 0) {
            let (a0, a1) = (self.amps[k], self.amps[k | bit]);
            rho[(0, 0)] += a0 * a0.conj();
            rho[(0, 1)] += a0 * a1.conj();
            rho[(1, 0)] += a1 * a0.conj();
            rho[(1, 1)] += a1 * a1.conj();
        }
        rho
    }
}

/// Hermitian, positive semidefinite, unit-trace operator on n qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    n: usize,
    matrix: DMatrix<Complex64>,
}

impl DensityOperator {
    /// Validates Hermiticity and unit trace to 1e-12 and positivity to -1e-10.
    pub fn new(n: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = 1usize << n;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::usage(format!("expected a {dim}x{dim} matrix")));
        }
        if !is_hermitian(&matrix, NORM_TOL) {
            return Err(Error::domain("density matrix is not Hermitian"));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::domain(format!("density matrix trace is {tr}")));
        }
        let min_eig = matrix.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-10 {
            return Err(Error::domain(format!("density matrix has eigenvalue {min_eig}")));
        }
        Ok(Self { n, matrix })
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let dim = 1usize << n;
        let matrix = DMatrix::identity(dim, dim) * c(1.0 / dim as f64, 0.0);
        Self { n, matrix }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix.clone().symmetric_eigenvalues().iter().copied().collect()
    }
}

impl QuantumState for DensityOperator {
    fn n_qubits(&self) -> usize {
        self.n
    }

    fn rotated_populations(&self, rotations: &[Matrix2<Complex64>]) -> Vec<f64> {
        let mut m = self.matrix.clone();
        for (q, u) in rotations.iter().enumerate() {
            conjugate_local(&mut m, self.n, q, u);
        }
        m.diagonal().iter().map(|d| d.re).collect()
    }

    fn monomial_trace(&self, op: &Monomial) -> Complex64 {
        (0..self.matrix.nrows())
            .map(|k| op.phase[k] * self.matrix[(k, k ^ op.flip)])
            .sum()
    }

    fn reduced_qubit(&self, qubit: usize) -> Matrix2<Complex64> {
        let bit = 1 << (self.n - 1 - qubit);
        let mut rho = Matrix2::zeros();
        for k in (0..self.matrix.nrows()).filter(|k| k & bit == 0) {
            for (i, ki) in [k, k | bit].into_iter().enumerate() {
                for (j, kj) in [k, k | bit].into_iter().enumerate() {
                    rho[(i, j)] += self.matrix[(ki, kj)];
                }
            }
        }
        rho
    }
}

/// Named states appearing in the Ψ6+ construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RefState {
    Psi6Plus,
    Ghz6Plus,
    W3,
    W3Bar,
    /// `(|HV⟩ + |VH⟩)/√2`
    Psi2Plus,
    /// Four-qubit singlet `(|HHVV⟩+|VVHH⟩)/√3 − (|HV⟩+|VH⟩)(|HV⟩+|VH⟩)/(2√3)`.
    Psi4Minus,
}

pub fn reference_state(name: RefState) -> QubitKet {
    let one = Complex64::ONE;
    let built = match name {
        RefState::Ghz6Plus => QubitKet::superpose(&[(one, "HHHVVV"), (one, "VVVHHH")]),
        RefState::W3 => QubitKet::superpose(&[(one, "HHV"), (one, "HVH"), (one, "VHH")]),
        RefState::W3Bar => Ok(reference_state(RefState::W3).bit_flip()),
        RefState::Psi2Plus => QubitKet::superpose(&[(one, "HV"), (one, "VH")]),
        RefState::Psi6Plus => {
            let ghz = reference_state(RefState::Ghz6Plus);
            let w = reference_state(RefState::W3);
            let wb = reference_state(RefState::W3Bar);
            let mixed = wb.tensor(&w).amps + w.tensor(&wb).amps;
            let amps = ghz.amps * c(std::f64::consts::FRAC_1_SQRT_2, 0.0) + mixed * c(0.5, 0.0);
            QubitKet::new(6, amps.data.into())
        }
        RefState::Psi4Minus => {
            let half = c(-0.5, 0.0);
            QubitKet::superpose(&[
                (one, "HHVV"),
                (one, "VVHH"),
                (half, "HVHV"),
                (half, "HVVH"),
                (half, "VHHV"),
                (half, "VHVH"),
            ])
        }
    };
    built.expect("reference states are normalized")
}

/// `p |ψ⟩⟨ψ| + (1 − p) 1/2^n`.
pub fn add_white_noise(ket: &QubitKet, p: f64) -> Result<DensityOperator> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("noise parameter p = {p} outside [0, 1]")));
    }
    let dim = ket.dim();
    let matrix = ket.density().matrix * c(p, 0.0)
        + DMatrix::identity(dim, dim) * c((1.0 - p) / dim as f64, 0.0);
    Ok(DensityOperator { n: ket.n, matrix })
}

/// One analyzer setting per qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingVector(pub Vec<AnalyzerSetting>);

impl SettingVector {
    pub fn uniform(setting: AnalyzerSetting, n: usize) -> Self {
        Self(vec![setting; n])
    }

    pub fn named(basis: NamedBasis, n: usize) -> Self {
        Self::uniform(AnalyzerSetting::Named(basis), n)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Outcome label: per-qubit letters of each analyzer (`H`/`V`, `D`/`A`,
    /// `L`/`R`, or `+`/`-` for custom settings).
    pub fn outcome_label(&self, index: usize) -> String {
        let n = self.len();
        self.0
            .iter()
            .enumerate()
            .map(|(q, s)| {
                let (plus, minus) = s.letters();
                if index >> (n - 1 - q) & 1 == 0 {
                    plus
                } else {
                    minus
                }
            })
            .collect()
    }

    /// Unitaries mapping each analyzer's (plus, minus) pair to (|H⟩, |V⟩).
    fn rotations(&self) -> Vec<Matrix2<Complex64>> {
        self.0
            .iter()
            .map(|s| {
                let b = analyzer_basis(s);
                Matrix2::new(b.plus[0].conj(), b.plus[1].conj(), b.minus[0].conj(), b.minus[1].conj())
            })
            .collect()
    }
}

impl fmt::Display for SettingVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Probabilities of every outcome string of the product measurement, in
/// basis-index order (outcome bit 0 is the analyzer's first vector).
pub fn outcome_distribution<S: QuantumState + ?Sized>(state: &S, settings: &SettingVector) -> Result<Vec<f64>> {
    if settings.len() != state.n_qubits() {
        return Err(Error::usage(format!(
            "{} settings for {} qubits",
            settings.len(),
            state.n_qubits()
        )));
    }
    Ok(state.rotated_populations(&settings.rotations()))
}

/// `+1` for an even number of second outcomes, `-1` otherwise.
pub fn parity(index: usize) -> f64 {
    if index.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Expectation of the product of the local `±1` observables.
pub fn correlation<S: QuantumState + ?Sized>(state: &S, settings: &SettingVector) -> Result<f64> {
    let dist = outcome_distribution(state, settings)?;
    Ok(dist.iter().enumerate().map(|(k, p)| parity(k) * p).sum())
}

/// Result of conditioning on a measurement outcome. `state` is `None` when
/// the outcome has (numerically) zero probability.
#[derive(Clone, Debug)]
pub struct Conditioned {
    pub state: Option<QubitKet>,
    pub probability: f64,
}

impl Conditioned {
    pub fn is_null(&self) -> bool {
        self.state.is_none()
    }
}

/// Projects qubit `position` onto `outcome` and returns the renormalized
/// state of the remaining qubits.
pub fn project_qubit(ket: &QubitKet, position: usize, outcome: &Vector2<Complex64>) -> Result<Conditioned> {
    if position >= ket.n {
        return Err(Error::usage(format!("qubit {position} out of range for {} qubits", ket.n)));
    }
    if (outcome.norm() - 1.0).abs() > NORM_TOL {
        return Err(Error::domain("projection outcome is not normalized"));
    }
    let n = ket.n;
    let low_bits = n - 1 - position;
    let low_mask = (1usize << low_bits) - 1;
    let rest: Vec<Complex64> = (0..1usize << (n - 1))
        .map(|r| {
            let hi = r >> low_bits;
            let lo = r & low_mask;
            let k0 = hi << (low_bits + 1) | lo;
            let k1 = k0 | 1 << low_bits;
            outcome[0].conj() * ket.amps[k0] + outcome[1].conj() * ket.amps[k1]
        })
        .collect();
    let probability: f64 = rest.iter().map(|a| a.norm_sqr()).sum();
    if probability < NULL_PROBABILITY {
        return Ok(Conditioned { state: None, probability: 0.0 });
    }
    let state = QubitKet::from_unnormalized(n - 1, rest)?;
    Ok(Conditioned { state: Some(state), probability })
}

/// `⟨target|ρ|target⟩`.
pub fn fidelity(rho: &DensityOperator, target: &QubitKet) -> Result<f64> {
    if rho.n != target.n {
        return Err(Error::usage(format!("{}-qubit state vs {}-qubit target", rho.n, target.n)));
    }
    let v = &rho.matrix * &target.amps;
    Ok(target.amps.dotc(&v).re.clamp(0.0, 1.0))
}

/// White-noise visibility estimated as the mean absolute correlation in the
/// three mutually unbiased bases.
pub fn estimate_p_from_correlations(corr_z: f64, corr_x: f64, corr_y: f64) -> Result<f64> {
    for v in [corr_z, corr_x, corr_y] {
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("correlation {v} outside [-1, 1]")));
        }
    }
    Ok((corr_z.abs() + corr_x.abs() + corr_y.abs()) / 3.0)
}

fn check_len(n: usize, len: usize) -> Result<()> {
    if n >= usize::BITS as usize || len != 1usize << n {
        return Err(Error::usage(format!("{len} amplitudes do not describe {n} qubits")));
    }
    Ok(())
}

pub(crate) fn is_hermitian(m: &DMatrix<Complex64>, tol: f64) -> bool {
    m.is_square() && (0..m.nrows()).all(|i| (i..m.ncols()).all(|j| (m[(i, j)] - m[(j, i)].conj()).norm() <= tol))
}

pub(crate) fn apply_to_vector(v: &mut [Complex64], n: usize, qubit: usize, u: &Matrix2<Complex64>) {
    let bit = 1 << (n - 1 - qubit);
    for k in (0..v.len()).filter(|k| k & bit == 0) {
        let (a0, a1) = (v[k], v[k | bit]);
        v[k] = u[(0, 0)] * a0 + u[(0, 1)] * a1;
        v[k | bit] = u[(1, 0)] * a0 + u[(1, 1)] * a1;
    }
}

/// `m ← U m U†` with `U` acting on one qubit.
fn conjugate_local(m: &mut DMatrix<Complex64>, n: usize, qubit: usize, u: &Matrix2<Complex64>) {
    let dim = m.nrows();
    for j in 0..dim {
        let mut col: Vec<Complex64> = m.column(j).iter().copied().collect();
        apply_to_vector(&mut col, n, qubit, u);
        m.set_column(j, &DVector::from_vec(col));
    }
    let uc = u.map(|z| z.conj());
    for i in 0..dim {
        let mut row: Vec<Complex64> = m.row(i).iter().copied().collect();
        apply_to_vector(&mut row, n, qubit, &uc);
        for (j, z) in row.into_iter().enumerate() {
            m[(i, j)] = z;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn psi6() -> QubitKet {
        reference_state(RefState::Psi6Plus)
    }

    fn named(b: NamedBasis) -> SettingVector {
        SettingVector::named(b, 6)
    }

    #[test]
    fn labels_round_trip() {
        assert_eq!(basis_label(0b000111, 6), "HHHVVV");
        assert_eq!(parse_basis_label("VVVHHH").unwrap(), 0b111000);
        assert!(parse_basis_label("HXH").is_err());
    }

    #[test]
    fn ghz_amplitudes() {
        let ghz = reference_state(RefState::Ghz6Plus);
        let support = ghz.support(1e-12);
        assert_eq!(support.len(), 2);
        assert_abs_diff_eq!(ghz.amplitude("HHHVVV").unwrap().re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(ghz.amplitude("VVVHHH").unwrap().re, FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn psi6_has_twenty_components() {
        // brute-force expansion: weight of every 3H3V string from the W⊗W̄ products
        let psi = psi6();
        let support = psi.support(1e-12);
        assert_eq!(support.len(), 20);
        for (k, a) in support {
            assert_eq!(k.count_ones(), 3);
            let expected = if k == 0b000111 || k == 0b111000 { 0.5 } else { 1.0 / 6.0 };
            assert_abs_diff_eq!(a.re, expected, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn w3_normalized_with_three_terms() {
        let w = reference_state(RefState::W3);
        assert_abs_diff_eq!(w.inner(&w).re, 1.0, epsilon = 1e-15);
        assert_eq!(w.support(1e-12).len(), 3);
    }

    #[test]
    fn white_noise_limits() {
        let psi = psi6();
        let pure = add_white_noise(&psi, 1.0).unwrap();
        assert_abs_diff_eq!(fidelity(&pure, &psi).unwrap(), 1.0, epsilon = 1e-12);
        let mixed = add_white_noise(&psi, 0.0).unwrap();
        for e in mixed.eigenvalues() {
            assert_abs_diff_eq!(e, 1.0 / 64.0, epsilon = 1e-12);
        }
        assert!(add_white_noise(&psi, 1.2).is_err());
        assert!(add_white_noise(&psi, -0.1).is_err());
    }

    #[test]
    fn density_validation() {
        let dim = 4;
        let bad_trace = DMatrix::<Complex64>::identity(dim, dim);
        assert!(DensityOperator::new(2, bad_trace).is_err());
        let mut not_psd = DMatrix::<Complex64>::zeros(dim, dim);
        not_psd[(0, 0)] = c(1.5, 0.0);
        not_psd[(1, 1)] = c(-0.5, 0.0);
        assert!(DensityOperator::new(2, not_psd).is_err());
        let mut non_herm = DMatrix::<Complex64>::identity(dim, dim) * c(0.25, 0.0);
        non_herm[(0, 1)] = c(0.1, 0.0);
        assert!(DensityOperator::new(2, non_herm).is_err());
        assert!(DensityOperator::new(2, psi6().density().matrix).is_err());
    }

    #[test]
    fn hv_distribution_of_psi6() {
        let dist = outcome_distribution(&psi6(), &named(NamedBasis::HV)).unwrap();
        for (k, p) in dist.iter().enumerate() {
            let expected = match k {
                0b000111 | 0b111000 => 0.25,
                k if k.count_ones() == 3 => 1.0 / 36.0,
                _ => 0.0,
            };
            assert_abs_diff_eq!(*p, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn mixed_state_is_uniform_in_any_basis() {
        let rho = DensityOperator::maximally_mixed(6);
        let settings = SettingVector(vec![
            AnalyzerSetting::WavePlates { hwp: 0.3, qwp: 1.1 },
            AnalyzerSetting::Named(NamedBasis::LR),
            AnalyzerSetting::Named(NamedBasis::DA),
            AnalyzerSetting::Bloch([0.2, -0.4, 0.5]),
            AnalyzerSetting::Named(NamedBasis::HV),
            AnalyzerSetting::WavePlates { hwp: -0.7, qwp: 0.2 },
        ]);
        for p in outcome_distribution(&rho, &settings).unwrap() {
            assert_abs_diff_eq!(p, 1.0 / 64.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(correlation(&rho, &settings).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pure_and_density_routes_agree() {
        let psi = psi6();
        let rho = psi.density();
        let settings = SettingVector(vec![
            AnalyzerSetting::WavePlates { hwp: 0.3, qwp: 1.1 },
            AnalyzerSetting::Named(NamedBasis::LR),
            AnalyzerSetting::Named(NamedBasis::DA),
            AnalyzerSetting::Bloch([0.2, -0.4, 0.5]),
            AnalyzerSetting::Named(NamedBasis::HV),
            AnalyzerSetting::WavePlates { hwp: -0.7, qwp: 0.2 },
        ]);
        let a = outcome_distribution(&psi, &settings).unwrap();
        let b = outcome_distribution(&rho, &settings).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(a.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn perfect_correlations() {
        let psi = psi6();
        assert_abs_diff_eq!(correlation(&psi, &named(NamedBasis::HV)).unwrap(), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(correlation(&psi, &named(NamedBasis::DA)).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(correlation(&psi, &named(NamedBasis::LR)).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn noisy_correlation_scales_with_p() {
        let rho = add_white_noise(&psi6(), 0.859).unwrap();
        assert_abs_diff_eq!(correlation(&rho, &named(NamedBasis::HV)).unwrap(), -0.859, epsilon = 1e-12);
        assert_abs_diff_eq!(correlation(&rho, &named(NamedBasis::LR)).unwrap(), 0.859, epsilon = 1e-12);
    }

    #[test]
    fn setting_length_mismatch() {
        assert!(outcome_distribution(&psi6(), &SettingVector::named(NamedBasis::HV, 5)).is_err());
    }

    #[test]
    fn projection_null_result() {
        let hv = QubitKet::basis("HV").unwrap();
        let v = Vector2::new(Complex64::ZERO, Complex64::ONE);
        let out = project_qubit(&hv, 0, &v).unwrap();
        assert!(out.is_null());
        assert_eq!(out.probability, 0.0);
        assert!(project_qubit(&hv, 2, &v).is_err());
    }

    #[test]
    fn projection_probabilities_sum_to_one() {
        let psi = psi6();
        let d = Vector2::new(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0));
        let a = Vector2::new(c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0));
        for q in 0..6 {
            let pd = project_qubit(&psi, q, &d).unwrap().probability;
            let pa = project_qubit(&psi, q, &a).unwrap().probability;
            assert_abs_diff_eq!(pd + pa, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn fidelity_values() {
        let psi = psi6();
        let rho = add_white_noise(&psi, 0.859).unwrap();
        assert_abs_diff_eq!(fidelity(&rho, &psi).unwrap(), 0.859 + 0.141 / 64.0, epsilon = 1e-12);
        let mixed = DensityOperator::maximally_mixed(6);
        assert_abs_diff_eq!(fidelity(&mixed, &reference_state(RefState::Ghz6Plus)).unwrap(), 1.0 / 64.0, epsilon = 1e-12);
        assert!(fidelity(&mixed, &reference_state(RefState::W3)).is_err());
    }

    #[test]
    fn p_estimate() {
        assert_abs_diff_eq!(estimate_p_from_correlations(-0.895, 0.863, 0.820).unwrap(), 0.8593333333333334, epsilon = 1e-12);
        assert_eq!(estimate_p_from_correlations(-1.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(estimate_p_from_correlations(0.0, 0.0, 0.0).unwrap(), 0.0);
        assert!(estimate_p_from_correlations(1.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn permutation_and_canonical_gauge() {
        let k = QubitKet::basis("HHV").unwrap();
        assert_eq!(k.permute(&[2, 0, 1]).unwrap(), QubitKet::basis("VHH").unwrap());
        assert!(k.permute(&[0, 0, 1]).is_err());
        let phased = psi6().scale(Complex64::from_polar(1.0, 2.1));
        let fixed = phased.canonical_gauge();
        assert_abs_diff_eq!(fixed.amplitude("HHHVVV").unwrap().re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(fixed.amplitude("HHHVVV").unwrap().im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn reduced_qubit_routes_agree() {
        let psi = psi6();
        let rho = psi.density();
        for q in 0..6 {
            let a = psi.reduced_qubit(q);
            let b = rho.reduced_qubit(q);
            assert!((a - b).norm() < 1e-12);
            assert_abs_diff_eq!(a[(0, 0)].re, 0.5, epsilon = 1e-12);
        }
    }
}
