//! Pauli strings and real-weighted sums of them.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::qstate::{is_hermitian, Monomial, QuantumState};
use crate::{Complex64, Error, Result};

/// Coefficients at or below this magnitude are not stored.
pub const COEFF_TOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn from_letter(ch: char) -> Option<Self> {
        match ch.to_ascii_uppercase() {
            'I' | '1' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn matrix(self) -> Matrix2<Complex64> {
        let (flips, p0) = self.act(0);
        let (_, p1) = self.act(1);
        let (r0, r1) = if flips { (1, 0) } else { (0, 1) };
        let mut m = Matrix2::zeros();
        m[(r0, 0)] = p0;
        m[(r1, 1)] = p1;
        m
    }

    /// `(flips, phase)` with `σ|bit⟩ = phase |bit ⊕ flips⟩`.
    fn act(self, bit: usize) -> (bool, Complex64) {
        match (self, bit) {
            (Pauli::I, _) => (false, Complex64::ONE),
            (Pauli::X, _) => (true, Complex64::ONE),
            (Pauli::Y, 0) => (true, Complex64::I),
            (Pauli::Y, _) => (true, -Complex64::I),
            (Pauli::Z, 0) => (false, Complex64::ONE),
            (Pauli::Z, _) => (false, -Complex64::ONE),
        }
    }
}

/// Tensor product of single-qubit Paulis; letter 0 acts on qubit 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliWord(Vec<Pauli>);

impl PauliWord {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self(letters)
    }

    pub fn identity(n: usize) -> Self {
        Self(vec![Pauli::I; n])
    }

    /// `σ^{⊗n}`.
    pub fn uniform(p: Pauli, n: usize) -> Self {
        Self(vec![p; n])
    }

    /// All `4^n` words in lexicographic order (`I < X < Y < Z`).
    pub fn all(n: usize) -> impl Iterator<Item = PauliWord> {
        (0..1usize << (2 * n)).map(move |code| {
            PauliWord((0..n).map(|q| Pauli::ALL[code >> (2 * (n - 1 - q)) & 3]).collect())
        })
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.0
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    /// The shared non-identity letter, if all non-identity letters agree.
    pub fn single_type(&self) -> Option<Pauli> {
        let mut kinds = self.0.iter().copied().filter(|&p| p != Pauli::I);
        let first = kinds.next()?;
        kinds.all(|p| p == first).then_some(first)
    }

    /// Qubits carrying a non-identity letter.
    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &p)| p != Pauli::I).map(|(q, _)| q).collect()
    }

    pub fn monomial(&self) -> Monomial {
        let mut flip = 0usize;
        let mut phase = vec![Complex64::ONE];
        for p in &self.0 {
            let (f, p0) = p.act(0);
            let (_, p1) = p.act(1);
            flip = flip << 1 | f as usize;
            phase = phase.iter().flat_map(|&z| [z * p0, z * p1]).collect();
        }
        Monomial { flip, phase }
    }

    /// Dense matrix of the word.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let m = self.monomial();
        let dim = m.phase.len();
        let mut out = DMatrix::zeros(dim, dim);
        for k in 0..dim {
            out[(k ^ m.flip, k)] = m.phase[k];
        }
        out
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|p| write!(f, "{}", p.letter()))
    }
}

impl FromStr for PauliWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|ch| Pauli::from_letter(ch).ok_or_else(|| Error::usage(format!("bad Pauli letter {ch:?} in {s:?}"))))
            .collect::<Result<Vec<_>>>()
            .map(PauliWord)
    }
}

/// Order used for text output: identity first, then by weight, then lexicographic.
fn display_order(a: &PauliWord, b: &PauliWord) -> Ordering {
    a.weight().cmp(&b.weight()).then_with(|| a.cmp(b))
}

/// `Σ_s c_s σ_s` with real coefficients.
#[derive(Clone, Debug)]
pub struct PauliObservable {
    n: usize,
    terms: BTreeMap<PauliWord, f64>,
    // monomial form of `terms`, built on first evaluation
    compiled: OnceLock<Vec<(Monomial, f64)>>,
}

impl PartialEq for PauliObservable {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.terms == other.terms
    }
}

impl PauliObservable {
    pub fn new(n: usize) -> Self {
        Self { n, terms: BTreeMap::new(), compiled: OnceLock::new() }
    }

    /// Sums duplicate words and drops coefficients below [`COEFF_TOL`].
    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (PauliWord, f64)>) -> Result<Self> {
        let mut obs = Self::new(n);
        for (w, c) in terms {
            if w.len() != n {
                return Err(Error::usage(format!("word {w} does not act on {n} qubits")));
            }
            *obs.terms.entry(w).or_default() += c;
        }
        obs.terms.retain(|_, c| c.abs() > COEFF_TOL);
        Ok(obs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, word: &PauliWord) -> f64 {
        self.terms.get(word).copied().unwrap_or(0.0)
    }

    pub fn identity_coefficient(&self) -> f64 {
        self.coefficient(&PauliWord::identity(self.n))
    }

    /// Terms in display order (identity first, then by weight).
    pub fn terms(&self) -> Vec<(&PauliWord, f64)> {
        let mut v: Vec<_> = self.terms.iter().map(|(w, c)| (w, *c)).collect();
        v.sort_by(|a, b| display_order(a.0, b.0));
        v
    }

    pub fn words(&self) -> impl Iterator<Item = &PauliWord> {
        self.terms.keys()
    }

    /// Replaces (or removes, for 0) the coefficient of `word`.
    pub fn with_coefficient(mut self, word: PauliWord, c: f64) -> Self {
        self.compiled = OnceLock::new();
        if c.abs() > COEFF_TOL {
            self.terms.insert(word, c);
        } else {
            self.terms.remove(&word);
        }
        self
    }

    /// Keeps only the terms for which `keep` holds.
    pub fn filtered(&self, keep: impl Fn(&PauliWord) -> bool) -> Self {
        Self {
            n: self.n,
            terms: self.terms.iter().filter(|(w, _)| keep(w)).map(|(w, c)| (w.clone(), *c)).collect(),
            compiled: OnceLock::new(),
        }
    }

    fn compiled(&self) -> &[(Monomial, f64)] {
        self.compiled.get_or_init(|| self.terms.iter().map(|(w, c)| (w.monomial(), *c)).collect())
    }

    /// `Σ_s c_s σ_s` as a dense matrix.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n;
        let mut out = DMatrix::zeros(dim, dim);
        for (m, c) in self.compiled() {
            for k in 0..dim {
                out[(k ^ m.flip, k)] += m.phase[k] * *c;
            }
        }
        out
    }

    /// Text form: one `"coeff  WORD"` line per term, display order.
    /// Coefficients are rounded to 15 decimal places.
    pub fn to_text(&self) -> String {
        self.terms()
            .into_iter()
            .map(|(w, c)| {
                let rounded = (c * 1e15).round() / 1e15;
                format!("{rounded}  {w}\n")
            })
            .collect()
    }

    /// Parses the text form. Blank lines and lines starting with `#` are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut n = None;
        let mut terms = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse { line: i + 1, msg };
            let mut parts = line.split_whitespace();
            let (Some(coeff), Some(word), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err(format!("expected \"coeff  WORD\", got {line:?}")));
            };
            let coeff: f64 = coeff.replace('\u{2212}', "-").parse().map_err(|_| err(format!("bad coefficient {coeff:?}")))?;
            let word: PauliWord = word.parse().map_err(|e: Error| err(e.to_string()))?;
            match n {
                None => n = Some(word.len()),
                Some(n) if n != word.len() => return Err(err(format!("word {word} has length {}, expected {n}", word.len()))),
                _ => {}
            }
            terms.push((word, coeff));
        }
        let n = n.ok_or(Error::Parse { line: 0, msg: "no terms".into() })?;
        Self::from_terms(n, terms)
    }
}

/// `c_s = Tr(M σ_s)/2ⁿ` for all `4ⁿ` strings.
pub fn pauli_decompose(operator: &DMatrix<Complex64>) -> Result<PauliObservable> {
    let dim = operator.nrows();
    if !dim.is_power_of_two() || operator.ncols() != dim {
        return Err(Error::usage(format!("operator of shape {}x{} is not a qubit operator", dim, operator.ncols())));
    }
    if !is_hermitian(operator, 1e-10) {
        return Err(Error::domain("operator is not Hermitian"));
    }
    let n = dim.trailing_zeros() as usize;
    let terms = PauliWord::all(n).map(|w| {
        let m = w.monomial();
        let tr: Complex64 = (0..dim).map(|k| m.phase[k] * operator[(k, k ^ m.flip)]).sum();
        (w, tr.re / dim as f64)
    });
    PauliObservable::from_terms(n, terms)
}

/// `Σ_s c_s Tr(ρ σ_s)`.
pub fn expectation<S: QuantumState + ?Sized>(obs: &PauliObservable, state: &S) -> Result<f64> {
    if state.n_qubits() != obs.n {
        return Err(Error::usage(format!("{}-qubit observable on a {}-qubit state", obs.n, state.n_qubits())));
    }
    Ok(obs.compiled().iter().map(|(m, c)| c * state.monomial_trace(m).re).sum())
}
