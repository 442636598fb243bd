//! Simulated sixfold-coincidence acquisition and the estimators applied to
//! the resulting count tables.
//!
//! Standard errors follow a multinomial model conditioned on the number of
//! events in a table. For correlations this coincides with treating every
//! bin as an independent Poisson count (the delta method gives
//! `(1 − E²)/N` either way); only per-bin probabilities differ between the
//! two models.

use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::Serialize;

use crate::optics::{AnalyzerSetting, NamedBasis};
use crate::qstate::{basis_label, estimate_p_from_correlations, outcome_distribution, parity, parse_basis_label, QuantumState, SettingVector};
use crate::witness::{Pauli, PauliObservable};
use crate::{Error, Result};

/// Sixfold coincidence rate of the experiment, per hour.
pub const EXPERIMENT_RATE_PER_HOUR: f64 = 3.4;
/// Acquisition time per setting, in hours.
pub const EXPERIMENT_HOURS_PER_SETTING: f64 = 94.0;

/// How many events a simulated run records.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EventBudget {
    Fixed(u64),
    /// `N ~ Poisson(duration · rate)`.
    Poisson { duration_hours: f64, rate_per_hour: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountTable {
    pub setting: SettingVector,
    pub counts: Vec<u64>,
    pub duration_hours: Option<f64>,
    pub rate_per_hour: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub standard_error: f64,
    pub sample_size: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ErrorModel {
    #[default]
    Multinomial,
    PoissonPerBin,
}

/// Multinomial draw by sequential conditional binomials.
fn multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = n;
    let mut mass_left = 1.0f64;
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k + 1 == probs.len() {
            counts[k] = remaining;
            break;
        }
        let q = if mass_left > 0.0 { (p / mass_left).clamp(0.0, 1.0) } else { 1.0 };
        let draw = Binomial::new(remaining, q).map_err(|e| Error::domain(format!("binomial({remaining}, {q}): {e}")))?;
        counts[k] = draw.sample(rng);
        remaining -= counts[k];
        mass_left -= p;
    }
    Ok(counts)
}

/// Draws a count table for `state` measured with `setting`.
pub fn sample_counts<S: QuantumState + ?Sized>(
    state: &S,
    setting: &SettingVector,
    budget: EventBudget,
    seed: u64,
) -> Result<CountTable> {
    let dist = outcome_distribution(state, setting)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, duration, rate) = match budget {
        EventBudget::Fixed(n) => (n, None, None),
        EventBudget::Poisson { duration_hours, rate_per_hour } => {
            if !(duration_hours >= 0.0 && rate_per_hour >= 0.0) || !(duration_hours * rate_per_hour).is_finite() {
                return Err(Error::domain(format!("duration {duration_hours} h and rate {rate_per_hour}/h must be non-negative")));
            }
            let mean = duration_hours * rate_per_hour;
            let n = if mean == 0.0 {
                0
            } else {
                Poisson::new(mean).map_err(|e| Error::domain(format!("Poisson({mean}): {e}")))?.sample(&mut rng) as u64
            };
            (n, Some(duration_hours), Some(rate_per_hour))
        }
    };
    Ok(CountTable { setting: setting.clone(), counts: multinomial(n, &dist, &mut rng)?, duration_hours: duration, rate_per_hour: rate, seed: Some(seed) })
}

impl CountTable {
    pub fn n_qubits(&self) -> usize {
        self.setting.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn require_events(&self) -> Result<f64> {
        match self.total() {
            0 => Err(Error::domain("count table has no events")),
            n => Ok(n as f64),
        }
    }

    /// Metadata line followed by one `label,count` row per outcome, labels
    /// in H/V form (bit 0 is the first analyzer outcome).
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let mut out = format!(
            "#setting={};events={};duration_hours={};rate_per_hour={};seed={}\n",
            self.setting,
            self.total(),
            opt(self.duration_hours.map(|v| v.to_string())),
            opt(self.rate_per_hour.map(|v| v.to_string())),
            opt(self.seed.map(|v| v.to_string())),
        );
        for (k, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{},{c}", basis_label(k, self.n_qubits()));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse { line, msg };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty count table".into()))?;
        let meta = header.trim().strip_prefix('#').ok_or_else(|| err(1, "missing #setting=... header".into()))?;

        let (mut setting, mut events, mut duration, mut rate, mut seed) = (None, None, None, None, None);
        for field in meta.split(';') {
            let (key, value) = field.split_once('=').ok_or_else(|| err(1, format!("bad header field {field:?}")))?;
            let value = value.trim();
            let num = |v: &str| v.parse::<f64>().map_err(|_| err(1, format!("bad number {v:?} for {key}")));
            match key.trim() {
                "setting" => {
                    let parts = value
                        .split_whitespace()
                        .map(|s| s.parse::<AnalyzerSetting>())
                        .collect::<Result<Vec<_>>>()
                        .map_err(|e| err(1, e.to_string()))?;
                    setting = Some(SettingVector(parts));
                }
                "events" if !value.is_empty() => events = Some(value.parse::<u64>().map_err(|_| err(1, format!("bad event count {value:?}")))?),
                "duration_hours" if !value.is_empty() => duration = Some(num(value)?),
                "rate_per_hour" if !value.is_empty() => rate = Some(num(value)?),
                "seed" if !value.is_empty() => seed = Some(value.parse::<u64>().map_err(|_| err(1, format!("bad seed {value:?}")))?),
                "events" | "duration_hours" | "rate_per_hour" | "seed" => {}
                other => return Err(err(1, format!("unknown header field {other:?}"))),
            }
        }
        let setting = setting.ok_or_else(|| err(1, "header lacks setting=".into()))?;
        let n = setting.len();
        if n == 0 || n > 16 {
            return Err(err(1, format!("unsupported number of qubits {n}")));
        }
        let mut counts = vec![None; 1 << n];
        let mut last_line = 1;
        for (i, line) in lines {
            last_line = i + 1;
            let (label, count) = line.trim().split_once(',').ok_or_else(|| err(i + 1, format!("expected label,count; got {line:?}")))?;
            let label = label.trim();
            if label.len() != n {
                return Err(err(i + 1, format!("label {label:?} is not {n} letters")));
            }
            let k = parse_basis_label(label).map_err(|e| err(i + 1, e.to_string()))?;
            let c: u64 = count.trim().parse().map_err(|_| err(i + 1, format!("bad count {:?}", count.trim())))?;
            if counts[k].replace(c).is_some() {
                return Err(err(i + 1, format!("duplicate label {label}")));
            }
        }
        let counts = counts
            .into_iter()
            .enumerate()
            .map(|(k, c)| c.ok_or_else(|| err(last_line, format!("missing row for {}", basis_label(k, n)))))
            .collect::<Result<Vec<_>>>()?;
        let table = CountTable { setting, counts, duration_hours: duration, rate_per_hour: rate, seed };
        if let Some(e) = events {
            if e != table.total() {
                return Err(err(1, format!("header says {e} events but rows sum to {}", table.total())));
            }
        }
        Ok(table)
    }
}

/// `E = Σ parity·counts / N` with SE `√((1 − E²)/N)`.
pub fn estimate_correlation(table: &CountTable) -> Result<Estimate> {
    let n = table.require_events()?;
    let value = table.counts.iter().enumerate().map(|(k, &c)| parity(k) * c as f64).sum::<f64>() / n;
    Ok(Estimate { value, standard_error: ((1.0 - value * value).max(0.0) / n).sqrt(), sample_size: table.total() })
}

/// Relative frequencies with per-bin standard errors.
pub fn estimate_probabilities(table: &CountTable, model: ErrorModel) -> Result<Vec<Estimate>> {
    let n = table.require_events()?;
    Ok(table
        .counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            let standard_error = match model {
                ErrorModel::Multinomial => (p * (1.0 - p) / n).sqrt(),
                ErrorModel::PoissonPerBin => (c as f64).sqrt() / n,
            };
            Estimate { value: p, standard_error, sample_size: table.total() }
        })
        .collect())
}

fn check_noise_inputs(measured: &[Estimate], p_hat: f64, ideal: &[f64]) -> Result<()> {
    if measured.len() != ideal.len() {
        return Err(Error::usage(format!("{} measured correlations vs {} ideal values", measured.len(), ideal.len())));
    }
    if !(0.0..1.0).contains(&p_hat) {
        return Err(Error::domain(format!("p̂ = {p_hat} outside [0, 1)")));
    }
    Ok(())
}

/// Correlation carried by the noise component alone:
/// `(E_i − p̂·ideal_i)/(1 − p̂)`. Zero under the white-noise hypothesis.
pub fn noise_residual_correlation(measured: &[Estimate], p_hat: f64, ideal: &[f64]) -> Result<Vec<f64>> {
    check_noise_inputs(measured, p_hat, ideal)?;
    Ok(measured.iter().zip(ideal).map(|(e, i)| (e.value - p_hat * i) / (1.0 - p_hat)).collect())
}

/// Unnormalized deviation `E_i − p̂·ideal_i`, the noise term's share of the
/// measured correlation.
pub fn noise_contribution(measured: &[Estimate], p_hat: f64, ideal: &[f64]) -> Result<Vec<f64>> {
    check_noise_inputs(measured, p_hat, ideal)?;
    Ok(measured.iter().zip(ideal).map(|(e, i)| e.value - p_hat * i).collect())
}

/// `p̂` as the mean absolute correlation over the three bases; SE by
/// independent propagation.
pub fn estimate_visibility(z: &Estimate, x: &Estimate, y: &Estimate) -> Result<Estimate> {
    let value = estimate_p_from_correlations(z.value, x.value, y.value)?;
    let se = (z.standard_error.powi(2) + x.standard_error.powi(2) + y.standard_error.powi(2)).sqrt() / 3.0;
    Ok(Estimate { value, standard_error: se, sample_size: z.sample_size + x.sample_size + y.sample_size })
}

/// Fidelity of `ρ(p̂)` with its pure target on `n` qubits:
/// `p̂ + (1 − p̂)/2ⁿ`.
pub fn fidelity_from_visibility(p: &Estimate, n: usize) -> Estimate {
    let d = (1u64 << n) as f64;
    Estimate { value: p.value + (1.0 - p.value) / d, standard_error: (1.0 - 1.0 / d) * p.standard_error, sample_size: p.sample_size }
}

/// `Σ E_i²` with SE `√Σ (2 E_i σ_i)²`.
pub fn indicator_from_estimates(estimates: &[Estimate]) -> Estimate {
    Estimate {
        value: estimates.iter().map(|e| e.value * e.value).sum(),
        standard_error: estimates.iter().map(|e| (2.0 * e.value * e.standard_error).powi(2)).sum::<f64>().sqrt(),
        sample_size: estimates.iter().map(|e| e.sample_size).sum(),
    }
}

fn named_pauli(setting: &AnalyzerSetting) -> Option<Pauli> {
    match setting {
        AnalyzerSetting::Named(NamedBasis::HV) => Some(Pauli::Z),
        AnalyzerSetting::Named(NamedBasis::DA) => Some(Pauli::X),
        AnalyzerSetting::Named(NamedBasis::LR) => Some(Pauli::Y),
        _ => None,
    }
}

/// Estimates `⟨W⟩` from count tables taken with named analyzers.
///
/// Every non-identity word is evaluated on the first table whose analyzers
/// measure the word's letter on each qubit of its support. Within one table
/// the assigned words form a per-event score whose sample mean and variance
/// give that table's contribution; tables are independent, so variances add.
pub fn witness_from_counts(obs: &PauliObservable, tables: &[CountTable]) -> Result<Estimate> {
    let n = obs.n();
    if let Some(t) = tables.iter().find(|t| t.n_qubits() != n) {
        return Err(Error::usage(format!("{}-qubit table for a {n}-qubit witness", t.n_qubits())));
    }
    let letters: Vec<Vec<Option<Pauli>>> = tables.iter().map(|t| t.setting.0.iter().map(named_pauli).collect()).collect();
    let mut assigned: Vec<Vec<(usize, f64)>> = vec![Vec::new(); tables.len()];
    for (word, c) in obs.terms() {
        if word.is_identity() {
            continue;
        }
        let support = word.support();
        let mask = support.iter().fold(0usize, |m, &q| m | 1 << (n - 1 - q));
        let table = letters
            .iter()
            .position(|l| support.iter().all(|&q| l[q] == Some(word.letters()[q])))
            .ok_or_else(|| Error::usage(format!("no count table measures {word}")))?;
        assigned[table].push((mask, c));
    }

    let mut value = obs.identity_coefficient();
    let mut variance = 0.0;
    let mut sample_size = 0;
    for (table, words) in tables.iter().zip(&assigned) {
        if words.is_empty() {
            continue;
        }
        let n_events = table.require_events()?;
        let score = |k: usize| words.iter().map(|&(mask, c)| c * parity(k & mask)).sum::<f64>();
        let (mut s1, mut s2) = (0.0, 0.0);
        for (k, &count) in table.counts.iter().enumerate().filter(|(_, &c)| c > 0) {
            let g = score(k);
            s1 += count as f64 * g;
            s2 += count as f64 * g * g;
        }
        let mean = s1 / n_events;
        let sample_var = if n_events > 1.0 { ((s2 - n_events * mean * mean) / (n_events - 1.0)).max(0.0) } else { 0.0 };
        value += mean;
        variance += sample_var / n_events;
        sample_size += table.total();
    }
    Ok(Estimate { value, standard_error: variance.sqrt(), sample_size })
}

/// Three uniform-basis tables (HV, DA, LR order) for one state.
pub fn sample_three_bases<S: QuantumState + ?Sized>(state: &S, budget: EventBudget, seed: u64) -> Result<[CountTable; 3]> {
    let n = state.n_qubits();
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |b| sample_counts(state, &SettingVector::named(b, n), budget, seeds.random());
    Ok([draw(NamedBasis::HV)?, draw(NamedBasis::DA)?, draw(NamedBasis::LR)?])
}
