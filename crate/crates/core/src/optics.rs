//! Linear-optical networks and polarization analyzers.
//!
//! A [`LinearNetwork`] maps each input creation operator to a linear
//! combination of output creation operators: column `i` of the matrix holds
//! the coefficients of input mode `i` on the output register. Beam splitters
//! use the symmetric convention: transmission `1/√2`, reflection `i/√2`,
//! identical for `H` and `V`.
//!
//! Wave plates follow the fast-axis-angle convention:
//! `HWP(θ) = R(θ) diag(1, −1) R(−θ)` and `QWP(θ) = R(θ) diag(1, i) R(−θ)`,
//! with `R(θ)` the real rotation by `θ`. An analyzer with a half-wave plate
//! followed by a quarter-wave plate projects onto `U†|H⟩` and `U†|V⟩`
//! where `U = QWP(qwp) · HWP(hwp)`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::fock::{ModeRegister, OpticalMode, SpatialMode};
#[cfg(test)]
use crate::fock::Polarization;
use crate::qstate::c;
use crate::{Complex64, Error, Result};

const ISOMETRY_TOL: f64 = 1e-12;

/// Isometry from input optical modes to output optical modes.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearNetwork {
    input: ModeRegister,
    output: ModeRegister,
    matrix: DMatrix<Complex64>,
}

impl LinearNetwork {
    /// Validates shape and column orthonormality.
    pub fn new(input: ModeRegister, output: ModeRegister, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != output.len() || matrix.ncols() != input.len() {
            return Err(Error::usage(format!(
                "matrix is {}x{}, registers are {} outputs x {} inputs",
                matrix.nrows(),
                matrix.ncols(),
                output.len(),
                input.len()
            )));
        }
        let gram = matrix.adjoint() * &matrix;
        let dev = (gram - DMatrix::identity(input.len(), input.len())).camax();
        if dev > ISOMETRY_TOL {
            return Err(Error::domain(format!("network is not an isometry (deviation {dev:e})")));
        }
        Ok(Self { input, output, matrix })
    }

    pub fn identity(register: ModeRegister) -> Self {
        let n = register.len();
        Self { input: register.clone(), output: register, matrix: DMatrix::identity(n, n) }
    }

    pub fn input(&self) -> &ModeRegister {
        &self.input
    }

    pub fn output(&self) -> &ModeRegister {
        &self.output
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Coefficient of output mode `out` in the image of input mode `inp`.
    pub fn coefficient(&self, inp: &OpticalMode, out: &OpticalMode) -> Option<Complex64> {
        Some(self.matrix[(self.output.index_of(out)?, self.input.index_of(inp)?)])
    }

    /// `next ∘ self`. `next` must take this network's output register.
    pub fn then(&self, next: &LinearNetwork) -> Result<LinearNetwork> {
        if next.input != self.output {
            return Err(Error::usage("cascaded network registers do not match"));
        }
        Ok(LinearNetwork {
            input: self.input.clone(),
            output: next.output.clone(),
            matrix: &next.matrix * &self.matrix,
        })
    }

    /// Largest deviation of `M†M` from the identity.
    pub fn isometry_error(&self) -> f64 {
        let n = self.input.len();
        (self.matrix.adjoint() * &self.matrix - DMatrix::identity(n, n)).camax()
    }

    pub fn from_layout(layout: &NetworkLayout) -> Result<Self> {
        layout.build()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        NetworkLayout::from_json(text)?.build()
    }
}

/// A 50-50 beam splitter acting identically on both polarizations.
pub fn fifty_fifty_splitter(in_a: &str, in_b: &str, out_a: &str, out_b: &str) -> Result<LinearNetwork> {
    let names = [in_a, in_b];
    if in_a == in_b || out_a == out_b {
        return Err(Error::usage(format!("splitter ports must be distinct: {names:?} -> [{out_a}, {out_b}]")));
    }
    let input = ModeRegister::polarized(&[in_a, in_b])?;
    let output = ModeRegister::polarized(&[out_a, out_b])?;
    let t = c(FRAC_1_SQRT_2, 0.0);
    let r = c(0.0, FRAC_1_SQRT_2);
    let z = Complex64::ZERO;
    // order: [a_H, a_V, b_H, b_V]
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        t, z, r, z,
        z, t, z, r,
        r, z, t, z,
        z, r, z, t,
    ]);
    LinearNetwork::new(input, output, m)
}

/// One element of a JSON network layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    /// `"splitter"` or `"phase"`.
    #[serde(rename = "type")]
    pub kind: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

/// Declarative network: spatial input modes, an ordered element list, and
/// the spatial output modes. Splitter inputs that are not currently carrying
/// a mode are vacuum ports. A `phase` element moves one spatial mode to a
/// (possibly renamed) output, multiplying `H` by `exp(i·h)` and `V` by
/// `exp(i·v)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkLayout {
    #[serde(default)]
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub elements: Vec<ElementSpec>,
}

impl NetworkLayout {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn build(&self) -> Result<LinearNetwork> {
        let input = ModeRegister::polarized(&self.inputs.iter().map(String::as_str).collect::<Vec<_>>())?;
        // live spatial mode -> rows (H, V) of coefficients over the input register
        let mut live: Vec<(String, [Vec<Complex64>; 2])> = Vec::new();
        for (i, name) in self.inputs.iter().enumerate() {
            let mut h = vec![Complex64::ZERO; input.len()];
            let mut v = h.clone();
            h[2 * i] = Complex64::ONE;
            v[2 * i + 1] = Complex64::ONE;
            live.push((name.clone(), [h, v]));
        }
        let zero_rows = || [vec![Complex64::ZERO; input.len()], vec![Complex64::ZERO; input.len()]];

        for (idx, el) in self.elements.iter().enumerate() {
            let ctx = |msg: String| Error::usage(format!("element {idx} ({}): {msg}", el.kind));
            match el.kind.as_str() {
                "splitter" => {
                    if el.inputs.len() != 2 || el.outputs.len() != 2 {
                        return Err(ctx("needs two inputs and two outputs".into()));
                    }
                    if el.inputs[0] == el.inputs[1] || el.outputs[0] == el.outputs[1] {
                        return Err(ctx("duplicate ports".into()));
                    }
                    if let Some(k) = el.params.keys().next() {
                        return Err(ctx(format!("unknown parameter {k:?}")));
                    }
                    let a = take_live(&mut live, &el.inputs[0]).unwrap_or_else(zero_rows);
                    let b = take_live(&mut live, &el.inputs[1]).unwrap_or_else(zero_rows);
                    check_free(&live, &el.outputs).map_err(ctx)?;
                    let t = c(FRAC_1_SQRT_2, 0.0);
                    let r = c(0.0, FRAC_1_SQRT_2);
                    let mix = |x: &[Complex64], y: &[Complex64], wx: Complex64, wy: Complex64| {
                        x.iter().zip(y).map(|(p, q)| wx * p + wy * q).collect::<Vec<_>>()
                    };
                    let out_a = [mix(&a[0], &b[0], t, r), mix(&a[1], &b[1], t, r)];
                    let out_b = [mix(&a[0], &b[0], r, t), mix(&a[1], &b[1], r, t)];
                    live.push((el.outputs[0].clone(), out_a));
                    live.push((el.outputs[1].clone(), out_b));
                }
                "phase" => {
                    if el.inputs.len() != 1 || el.outputs.len() != 1 {
                        return Err(ctx("needs one input and one output".into()));
                    }
                    if let Some(k) = el.params.keys().find(|k| *k != "h" && *k != "v") {
                        return Err(ctx(format!("unknown parameter {k:?}")));
                    }
                    let rows = take_live(&mut live, &el.inputs[0])
                        .ok_or_else(|| ctx(format!("mode {:?} carries no light", el.inputs[0])))?;
                    check_free(&live, &el.outputs).map_err(ctx)?;
                    let ph = Complex64::from_polar(1.0, *el.params.get("h").unwrap_or(&0.0));
                    let pv = Complex64::from_polar(1.0, *el.params.get("v").unwrap_or(&0.0));
                    let [h, v] = rows;
                    live.push((
                        el.outputs[0].clone(),
                        [h.into_iter().map(|z| z * ph).collect(), v.into_iter().map(|z| z * pv).collect()],
                    ));
                }
                other => return Err(ctx(format!("unknown element type {other:?}"))),
            }
        }

        let mut live_names: Vec<&str> = live.iter().map(|(n, _)| n.as_str()).collect();
        let mut declared: Vec<&str> = self.outputs.iter().map(String::as_str).collect();
        live_names.sort_unstable();
        declared.sort_unstable();
        if live_names != declared {
            return Err(Error::usage(format!(
                "declared outputs {declared:?} but the layout ends with modes {live_names:?}"
            )));
        }
        let output = ModeRegister::polarized(&self.outputs.iter().map(String::as_str).collect::<Vec<_>>())?;
        let mut m = DMatrix::zeros(output.len(), input.len());
        for (k, name) in self.outputs.iter().enumerate() {
            let (_, rows) = live.iter().find(|(n, _)| n == name).expect("checked above");
            for (p, row) in rows.iter().enumerate() {
                for (col, z) in row.iter().enumerate() {
                    m[(2 * k + p, col)] = *z;
                }
            }
        }
        LinearNetwork::new(input, output, m)
    }
}

fn take_live(live: &mut Vec<(String, [Vec<Complex64>; 2])>, name: &str) -> Option<[Vec<Complex64>; 2]> {
    let pos = live.iter().position(|(n, _)| n == name)?;
    Some(live.remove(pos).1)
}

fn check_free(live: &[(String, [Vec<Complex64>; 2])], outputs: &[String]) -> std::result::Result<(), String> {
    match outputs.iter().find(|o| live.iter().any(|(n, _)| n == *o)) {
        Some(o) => Err(format!("output {o:?} is already carrying light")),
        None => Ok(()),
    }
}

/// Built-in layouts shipped with the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetworkPreset {
    /// `a0 → (a, b, c)`, `b0 → (d, e, f)` via two cascaded splitters per arm.
    Experiment,
    /// `a0 → (a, b)`, `b0 → (c, d)`: one splitter per arm.
    FourMode,
    /// `a0 → a`, `b0 → b` unchanged.
    Pair,
}

impl NetworkPreset {
    /// Name accepted by `FromStr`.
    pub fn name(self) -> &'static str {
        match self {
            NetworkPreset::Experiment => "experiment",
            NetworkPreset::FourMode => "four-mode",
            NetworkPreset::Pair => "pair",
        }
    }

    pub fn layout_json(self) -> &'static str {
        match self {
            NetworkPreset::Experiment => include_str!("../configs/experiment_network.json"),
            NetworkPreset::FourMode => include_str!("../configs/four_mode_network.json"),
            NetworkPreset::Pair => include_str!("../configs/pair_network.json"),
        }
    }

    pub fn layout(self) -> NetworkLayout {
        NetworkLayout::from_json(self.layout_json()).expect("shipped layout parses")
    }

    pub fn network(self) -> LinearNetwork {
        self.layout().build().expect("shipped layout builds")
    }

    /// Spatial modes detected after this network, in qubit order.
    pub fn detector_modes(self) -> Vec<SpatialMode> {
        self.layout().outputs.iter().map(|s| SpatialMode::new(s)).collect()
    }
}

impl FromStr for NetworkPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "experiment" | "six-mode" => Ok(NetworkPreset::Experiment),
            "four-mode" => Ok(NetworkPreset::FourMode),
            "pair" => Ok(NetworkPreset::Pair),
            other => Err(Error::usage(format!("unknown network {other:?} (experiment, four-mode, pair)"))),
        }
    }
}

/// The six-output network: each arm passes two cascaded 50-50 splitters;
/// the first splitter's transmitted port is detected directly and its
/// reflected port feeds the second splitter. Compensation plates on every
/// output default to zero phase.
pub fn experiment_network() -> LinearNetwork {
    NetworkPreset::Experiment.network()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NamedBasis {
    /// σz eigenbasis `{H, V}`.
    HV,
    /// σx eigenbasis `{D, A}`, `|D/A⟩ = (|H⟩ ± |V⟩)/√2`.
    DA,
    /// σy eigenbasis `{L, R}`, `|L/R⟩ = (|H⟩ ± i|V⟩)/√2`.
    LR,
}

impl NamedBasis {
    pub const ALL: [NamedBasis; 3] = [NamedBasis::HV, NamedBasis::DA, NamedBasis::LR];

    pub fn letters(self) -> (char, char) {
        match self {
            NamedBasis::HV => ('H', 'V'),
            NamedBasis::DA => ('D', 'A'),
            NamedBasis::LR => ('L', 'R'),
        }
    }

    /// The Pauli letter measured by this basis.
    pub fn pauli(self) -> char {
        match self {
            NamedBasis::HV => 'Z',
            NamedBasis::DA => 'X',
            NamedBasis::LR => 'Y',
        }
    }
}

impl FromStr for NamedBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "HV" | "Z" => Ok(NamedBasis::HV),
            "DA" | "X" => Ok(NamedBasis::DA),
            "LR" | "Y" => Ok(NamedBasis::LR),
            _ => Err(Error::usage(format!("unknown basis {s:?} (HV, DA, LR)"))),
        }
    }
}

/// A polarization analyzer configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AnalyzerSetting {
    Named(NamedBasis),
    /// Plate angles in radians.
    WavePlates { hwp: f64, qwp: f64 },
    /// Bloch direction of the first outcome; normalized on use.
    Bloch([f64; 3]),
}

impl AnalyzerSetting {
    pub fn letters(&self) -> (char, char) {
        match self {
            AnalyzerSetting::Named(b) => b.letters(),
            _ => ('+', '-'),
        }
    }
}

impl fmt::Display for AnalyzerSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyzerSetting::Named(b) => write!(f, "{b:?}"),
            AnalyzerSetting::WavePlates { hwp, qwp } => write!(f, "wp:{hwp}:{qwp}"),
            AnalyzerSetting::Bloch([x, y, z]) => write!(f, "bloch:{x}:{y}:{z}"),
        }
    }
}

impl FromStr for AnalyzerSetting {
    type Err = Error;

    /// `HV`, `DA`, `LR`, `wp:<hwp>:<qwp>` or `bloch:<x>:<y>:<z>`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let nums = |xs: &[&str]| -> Result<Vec<f64>> {
            xs.iter()
                .map(|x| x.parse::<f64>().map_err(|_| Error::usage(format!("bad number {x:?} in setting {s:?}"))))
                .collect()
        };
        match parts.as_slice() {
            [name] => Ok(AnalyzerSetting::Named(name.parse()?)),
            ["wp", rest @ ..] if rest.len() == 2 => {
                let v = nums(rest)?;
                Ok(AnalyzerSetting::WavePlates { hwp: v[0], qwp: v[1] })
            }
            ["bloch", rest @ ..] if rest.len() == 3 => {
                let v = nums(rest)?;
                if v.iter().map(|x| x * x).sum::<f64>() < 1e-24 {
                    return Err(Error::usage(format!("zero Bloch vector in {s:?}")));
                }
                Ok(AnalyzerSetting::Bloch([v[0], v[1], v[2]]))
            }
            _ => Err(Error::usage(format!("cannot parse analyzer setting {s:?}"))),
        }
    }
}

/// Orthonormal measurement pair. `plus` is the `+1` outcome.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyzerBasis {
    pub plus: Vector2<Complex64>,
    pub minus: Vector2<Complex64>,
}

impl AnalyzerBasis {
    pub fn projector(&self, minus: bool) -> Matrix2<Complex64> {
        let v = if minus { self.minus } else { self.plus };
        v * v.adjoint()
    }

    /// `P₊ − P₋`.
    pub fn observable(&self) -> Matrix2<Complex64> {
        self.projector(false) - self.projector(true)
    }
}

pub fn rotation(theta: f64) -> Matrix2<Complex64> {
    let (s, co) = theta.sin_cos();
    Matrix2::new(c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0))
}

pub fn half_wave_plate(theta: f64) -> Matrix2<Complex64> {
    rotation(theta) * Matrix2::new(Complex64::ONE, Complex64::ZERO, Complex64::ZERO, c(-1.0, 0.0)) * rotation(-theta)
}

pub fn quarter_wave_plate(theta: f64) -> Matrix2<Complex64> {
    rotation(theta) * Matrix2::new(Complex64::ONE, Complex64::ZERO, Complex64::ZERO, Complex64::I) * rotation(-theta)
}

pub fn analyzer_basis(setting: &AnalyzerSetting) -> AnalyzerBasis {
    let s = FRAC_1_SQRT_2;
    match setting {
        AnalyzerSetting::Named(NamedBasis::HV) => AnalyzerBasis {
            plus: Vector2::new(Complex64::ONE, Complex64::ZERO),
            minus: Vector2::new(Complex64::ZERO, Complex64::ONE),
        },
        AnalyzerSetting::Named(NamedBasis::DA) => AnalyzerBasis {
            plus: Vector2::new(c(s, 0.0), c(s, 0.0)),
            minus: Vector2::new(c(s, 0.0), c(-s, 0.0)),
        },
        AnalyzerSetting::Named(NamedBasis::LR) => AnalyzerBasis {
            plus: Vector2::new(c(s, 0.0), c(0.0, s)),
            minus: Vector2::new(c(s, 0.0), c(0.0, -s)),
        },
        AnalyzerSetting::WavePlates { hwp, qwp } => {
            let u = quarter_wave_plate(*qwp) * half_wave_plate(*hwp);
            let ud = u.adjoint();
            AnalyzerBasis { plus: ud.column(0).into(), minus: ud.column(1).into() }
        }
        AnalyzerSetting::Bloch([x, y, z]) => {
            let r = (x * x + y * y + z * z).sqrt();
            let theta = (z / r).clamp(-1.0, 1.0).acos();
            let phi = y.atan2(*x);
            let (sh, ch) = (theta / 2.0).sin_cos();
            AnalyzerBasis {
                plus: Vector2::new(c(ch, 0.0), Complex64::from_polar(sh, phi)),
                minus: Vector2::new(Complex64::from_polar(-sh, -phi), c(ch, 0.0)),
            }
        }
    }
}
