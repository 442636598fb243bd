//! Bosonic Fock-space polynomials and the down-conversion emission series.
//!
//! A [`FockPolynomial`] stores the coefficients of monomials
//! `Π (m†)^{n_m} |0⟩` keyed by the occupation vector `n`. Because creation
//! operators commute, multiplying by a creation operator only increments an
//! occupation, so network substitution is pure polynomial algebra. The
//! factorials appear in exactly one place, the norm:
//!
//! ```text
//! ‖ψ‖² = Σ_n |c_n|² Π_m n_m!
//! ```
//!
//! and the orthonormal Fock amplitude of a term is `c_n · √(Π n_m!)`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::optics::LinearNetwork;
use crate::qstate::{Conditioned, QubitKet, NULL_PROBABILITY};
use crate::{Complex64, Error, Result, COLLECT_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

/// Label of a spatial mode (`a0`, `b0`, `a`…`f`, or an internal port).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpatialMode(String);

impl SpatialMode {
    pub fn new(label: &str) -> Self {
        Self(label.to_owned())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SpatialMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpticalMode {
    pub spatial: SpatialMode,
    pub polarization: Polarization,
}

impl OpticalMode {
    pub fn new(spatial: &str, polarization: Polarization) -> Self {
        Self { spatial: SpatialMode::new(spatial), polarization }
    }
}

impl fmt::Display for OpticalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.spatial, self.polarization)
    }
}

impl std::str::FromStr for OpticalMode {
    type Err = Error;

    /// `"a0H"` → spatial `a0`, polarization `H`.
    fn from_str(s: &str) -> Result<Self> {
        let (spatial, pol) = s.split_at(s.len().saturating_sub(1));
        let polarization = match pol {
            "H" => Polarization::H,
            "V" => Polarization::V,
            _ => return Err(Error::usage(format!("mode {s:?} must end in H or V"))),
        };
        if spatial.is_empty() {
            return Err(Error::usage(format!("mode {s:?} has no spatial label")));
        }
        Ok(OpticalMode::new(spatial, polarization))
    }
}

/// Ordered list of distinct optical modes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeRegister(Vec<OpticalMode>);

impl ModeRegister {
    pub fn new(modes: Vec<OpticalMode>) -> Result<Self> {
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(Error::usage(format!("mode {m} appears twice in register")));
            }
        }
        Ok(Self(modes))
    }

    /// `[s₀H, s₀V, s₁H, s₁V, …]`.
    pub fn polarized(spatial: &[&str]) -> Result<Self> {
        Self::new(
            spatial
                .iter()
                .flat_map(|s| [OpticalMode::new(s, Polarization::H), OpticalMode::new(s, Polarization::V)])
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn modes(&self) -> &[OpticalMode] {
        &self.0
    }

    pub fn index_of(&self, mode: &OpticalMode) -> Option<usize> {
        self.0.iter().position(|m| m == mode)
    }
}

/// Occupation vector over a [`ModeRegister`].
pub type Occupation = Vec<u8>;

/// `Σ_n c_n Π (m†)^{n_m} |0⟩` over a fixed register.
#[derive(Clone, Debug, PartialEq)]
pub struct FockPolynomial {
    register: ModeRegister,
    terms: BTreeMap<Occupation, Complex64>,
}

impl FockPolynomial {
    pub fn zero(register: ModeRegister) -> Self {
        Self { register, terms: BTreeMap::new() }
    }

    pub fn vacuum(register: ModeRegister) -> Self {
        let occ = vec![0; register.len()];
        Self { register, terms: BTreeMap::from([(occ, Complex64::ONE)]) }
    }

    /// Collects `terms`, summing duplicates and dropping exact zeros.
    pub fn from_terms(register: ModeRegister, terms: impl IntoIterator<Item = (Occupation, Complex64)>) -> Result<Self> {
        let mut out = Self::zero(register);
        for (occ, amp) in terms {
            if occ.len() != out.register.len() {
                return Err(Error::usage(format!(
                    "occupation of length {} on a {}-mode register",
                    occ.len(),
                    out.register.len()
                )));
            }
            *out.terms.entry(occ).or_default() += amp;
        }
        out.terms.retain(|_, a| a.norm() > 0.0);
        Ok(out)
    }

    pub fn register(&self) -> &ModeRegister {
        &self.register
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, occ: &[u8]) -> Complex64 {
        self.terms.get(occ).copied().unwrap_or_default()
    }

    /// `Σ |c_n|² Π n_m!`.
    pub fn norm_sqr(&self) -> f64 {
        self.terms.iter().map(|(occ, a)| a.norm_sqr() * factorial_weight(occ)).sum()
    }

    /// Amplitude on the orthonormal Fock state `|n⟩`.
    pub fn fock_amplitude(&self, occ: &[u8]) -> Complex64 {
        self.coefficient(occ) * factorial_weight(occ).sqrt()
    }

    /// Distinct total photon numbers present.
    pub fn photon_numbers(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.terms.keys().map(|o| total(o)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn add(&self, other: &FockPolynomial) -> Result<FockPolynomial> {
        if self.register != other.register {
            return Err(Error::usage("cannot add polynomials on different registers"));
        }
        Self::from_terms(
            self.register.clone(),
            self.terms.iter().chain(other.terms.iter()).map(|(o, a)| (o.clone(), *a)),
        )
    }

    pub fn scale(&self, factor: Complex64) -> FockPolynomial {
        let terms = self.terms.iter().map(|(o, a)| (o.clone(), a * factor)).filter(|(_, a)| a.norm() > 0.0).collect();
        FockPolynomial { register: self.register.clone(), terms }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let doc = FockJson {
            modes: self.register.modes().iter().map(|m| m.to_string()).collect(),
            terms: self
                .terms
                .iter()
                .map(|(occ, a)| TermJson { occ: occ.clone(), re: a.re, im: a.im })
                .collect(),
        };
        serde_json::to_value(doc).expect("plain data serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let doc: FockJson = serde_json::from_value(value.clone())?;
        let modes = doc.modes.iter().map(|m| m.parse()).collect::<Result<Vec<OpticalMode>>>()?;
        let register = ModeRegister::new(modes)?;
        Self::from_terms(register, doc.terms.into_iter().map(|t| (t.occ, Complex64::new(t.re, t.im))))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FockJson {
    modes: Vec<String>,
    terms: Vec<TermJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermJson {
    occ: Vec<u8>,
    re: f64,
    im: f64,
}

fn total(occ: &[u8]) -> u32 {
    occ.iter().map(|&n| n as u32).sum()
}

fn factorial_weight(occ: &[u8]) -> f64 {
    occ.iter().map(|&n| (1..=n as u32).map(f64::from).product::<f64>()).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Type-II down-conversion source feeding modes `a0` and `b0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PdcSource {
    alpha: Complex64,
    relative_phase: f64,
}

impl PdcSource {
    /// `relative_phase` is reduced into `[0, 2π)`. Fails when `|α| ≥ 1`.
    pub fn new(alpha: Complex64, relative_phase: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !relative_phase.is_finite() {
            return Err(Error::domain("relative phase must be finite"));
        }
        Ok(Self { alpha, relative_phase: relative_phase.rem_euclid(std::f64::consts::TAU) })
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn relative_phase(&self) -> f64 {
        self.relative_phase
    }

    /// `[a0H, a0V, b0H, b0V]`.
    pub fn input_register() -> ModeRegister {
        ModeRegister::polarized(&["a0", "b0"]).expect("distinct modes")
    }
}

fn check_alpha(alpha: Complex64) -> Result<()> {
    if !(alpha.norm() < 1.0) {
        return Err(Error::domain(format!("|alpha| = {} >= 1: state not normalizable", alpha.norm())));
    }
    Ok(())
}

/// `C = 1/√(Σ (1+n)|α|^{2n}) = 1 − |α|²`.
pub fn normalization_constant(alpha: Complex64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(1.0 - alpha.norm_sqr())
}

/// Probability of emitting exactly `n` pairs, `C²(1+n)|α|^{2n}`, for
/// `n = 0..=max_order`.
pub fn pair_number_distribution(source: &PdcSource, max_order: usize) -> Result<Vec<f64>> {
    let c2 = normalization_constant(source.alpha)?.powi(2);
    let x = source.alpha.norm_sqr();
    Ok((0..=max_order)
        .scan(1.0, |pow, n| {
            let p = c2 * (1.0 + n as f64) * *pow;
            *pow *= x;
            Some(p)
        })
        .collect())
}

/// Order-`n` term of the emission series,
/// `(−iα)ⁿ/n! · (a0H† b0V† + e^{iφ} a0V† b0H†)ⁿ |0⟩` (without the factor `C`).
pub fn pdc_term(source: &PdcSource, order: u32) -> FockPolynomial {
    let register = PdcSource::input_register();
    let n = order;
    let prefactor = (Complex64::new(0.0, -1.0) * source.alpha).powu(n) / (1..=n).map(f64::from).product::<f64>();
    // k factors of the first product, n-k of the second
    let terms = (0..=n).map(|k| {
        let m = (n - k) as u8;
        let k8 = k as u8;
        let phase = Complex64::from_polar(1.0, source.relative_phase * f64::from(n - k));
        (vec![k8, m, m, k8], prefactor * binomial(n, k) * phase)
    });
    FockPolynomial::from_terms(register, terms).expect("register length matches")
}

/// Substitutes every input creation operator by its image under `network`.
pub fn apply_network(state: &FockPolynomial, network: &LinearNetwork) -> Result<FockPolynomial> {
    if state.register() != network.input() {
        return Err(Error::usage("state register does not match the network input register"));
    }
    let m = network.matrix();
    let n_out = network.output().len();
    // sparse columns: input mode -> [(output mode, coefficient)]
    let columns: Vec<Vec<(usize, Complex64)>> = (0..m.ncols())
        .map(|i| (0..n_out).filter_map(|j| Some((j, m[(j, i)])).filter(|(_, z)| z.norm() > 0.0)).collect())
        .collect();

    let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
    for (occ, amp) in state.terms() {
        let mut partial: BTreeMap<Occupation, Complex64> = BTreeMap::from([(vec![0u8; n_out], *amp)]);
        for (i, &count) in occ.iter().enumerate() {
            for _ in 0..count {
                let mut next: BTreeMap<Occupation, Complex64> = BTreeMap::new();
                for (o, a) in &partial {
                    for &(j, z) in &columns[i] {
                        let mut o2 = o.clone();
                        o2[j] += 1;
                        *next.entry(o2).or_default() += a * z;
                    }
                }
                partial = next;
            }
        }
        for (o, a) in partial {
            *out.entry(o).or_default() += a;
        }
    }
    let largest = out.values().map(|a| a.norm()).fold(0.0, f64::max);
    out.retain(|_, a| a.norm() > COLLECT_TOL * largest);
    Ok(FockPolynomial { register: network.output().clone(), terms: out })
}

/// Post-selected qubit state together with the fraction of the input norm
/// that survived the selection.
#[derive(Clone, Debug)]
pub struct PostSelection {
    pub ket: Option<QubitKet>,
    pub success_probability: f64,
}

impl PostSelection {
    pub fn is_null(&self) -> bool {
        self.ket.is_none()
    }
}

impl From<PostSelection> for Conditioned {
    fn from(p: PostSelection) -> Self {
        Conditioned { state: p.ket, probability: p.success_probability }
    }
}

/// Keeps terms with exactly one photon in each listed spatial mode and none
/// elsewhere, encoding `H → 0`, `V → 1` in list order. The ket is
/// renormalized and put in canonical gauge; `success_probability` is the kept
/// weight divided by `‖state‖²`.
pub fn postselect_one_per_spatial_mode(state: &FockPolynomial, spatial_modes: &[&str]) -> Result<PostSelection> {
    postselect_filtered(state, spatial_modes, |_| true)
}

/// Like [`postselect_one_per_spatial_mode`], additionally discarding qubit
/// outcomes (basis indices) for which `accept` is false.
pub fn postselect_filtered(
    state: &FockPolynomial,
    spatial_modes: &[&str],
    accept: impl Fn(usize) -> bool,
) -> Result<PostSelection> {
    let register = state.register();
    let mut slots = Vec::with_capacity(spatial_modes.len());
    for s in spatial_modes {
        let h = register.index_of(&OpticalMode::new(s, Polarization::H));
        let v = register.index_of(&OpticalMode::new(s, Polarization::V));
        match (h, v) {
            (Some(h), Some(v)) => slots.push((h, v)),
            _ => return Err(Error::usage(format!("register lacks H/V modes for spatial mode {s:?}"))),
        }
    }
    let n = slots.len();
    let mut amps = vec![Complex64::ZERO; 1 << n];
    'terms: for (occ, amp) in state.terms() {
        if total(occ) as usize != n {
            continue;
        }
        let mut index = 0usize;
        for &(h, v) in &slots {
            index <<= 1;
            match (occ[h], occ[v]) {
                (1, 0) => {}
                (0, 1) => index |= 1,
                _ => continue 'terms,
            }
        }
        if accept(index) {
            // one photon per mode: factorial weight is 1
            amps[index] += amp;
        }
    }
    let kept: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let total_norm = state.norm_sqr();
    let success_probability = if total_norm > 0.0 { (kept / total_norm).min(1.0) } else { 0.0 };
    if success_probability < NULL_PROBABILITY {
        return Ok(PostSelection { ket: None, success_probability: 0.0 });
    }
    let ket = QubitKet::from_unnormalized(n, amps)?.canonical_gauge();
    Ok(PostSelection { ket: Some(ket), success_probability })
}

/// Order-`order` emission pushed through `network` and post-selected on one
/// photon in each of `detector_modes`.
pub fn derive_postselected(
    source: &PdcSource,
    order: u32,
    network: &LinearNetwork,
    detector_modes: &[&str],
) -> Result<PostSelection> {
    let out = apply_network(&pdc_term(source, order), network)?;
    postselect_one_per_spatial_mode(&out, detector_modes)
}
