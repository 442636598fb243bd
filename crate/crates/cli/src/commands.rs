use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};

use psi6::fock::{apply_network, derive_postselected, pdc_term, PdcSource};
use psi6::montecarlo::{
    estimate_correlation, estimate_probabilities, estimate_visibility, fidelity_from_visibility, indicator_from_estimates,
    noise_contribution, noise_residual_correlation, sample_counts, witness_from_counts, CountTable, ErrorModel, Estimate,
    EventBudget, EXPERIMENT_HOURS_PER_SETTING, EXPERIMENT_RATE_PER_HOUR,
};
use psi6::optics::{analyzer_basis, half_wave_plate, quarter_wave_plate, rotation, AnalyzerSetting, NamedBasis, NetworkPreset};
use psi6::qstate::{
    add_white_noise, correlation, fidelity, outcome_distribution, project_qubit, reference_state, DensityOperator,
    QubitKet, RefState, SettingVector,
};
use psi6::teleclone::{derive_correction_table, ProtocolLayout};
use psi6::witness::{
    expectation, indicator_norm, max_overlap_witness, reduce_witness, white_noise_tolerance, CorrelationTensor,
    IndicatorVerdict, PauliObservable, WitnessReport, PSI6_OVERLAP_BOUND, PSI6_REDUCED_IDENTITY,
};
use psi6::Complex64;

use crate::config::{pick, RunConfig};
use crate::render::{bar_chart_svg, emit, json, Bar};
use crate::{CliError, DeriveArgs, Format, HistogramArgs, ProjectArgs, ReportArgs, SamplingArgs, SimulateArgs, TelecloneArgs, WitnessArgs};

/// Fidelity below `1 − DERIVE_TOL` fails `derive`.
const DERIVE_TOL: f64 = 1e-9;
const DEFAULT_ALPHA: f64 = 0.1;
const BASIS_KEYS: [(NamedBasis, &str); 3] = [(NamedBasis::HV, "z"), (NamedBasis::DA, "x"), (NamedBasis::LR, "y")];
const IDEAL_CORRELATIONS: [f64; 3] = [-1.0, 1.0, 1.0];

pub struct Context<'a> {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub config: &'a RunConfig,
}

impl Context<'_> {
    fn format(&self, default: Format, allowed: &[Format], command: &str) -> Result<Format, CliError> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(CliError::Usage(format!("{command} does not support --format {f:?}")))
        }
    }

    fn emit(&self, content: &str) -> Result<(), CliError> {
        emit(self.out.as_deref(), content)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn visibility(flag: Option<f64>, config: Option<f64>) -> Result<f64, CliError> {
    let p = pick(flag, config).unwrap_or(1.0);
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("p = {p} outside [0, 1]")));
    }
    Ok(p)
}

fn psi6() -> QubitKet {
    reference_state(RefState::Psi6Plus)
}

fn budget(args: &SamplingArgs, config: &RunConfig) -> Result<EventBudget, CliError> {
    if let Some(n) = pick(args.events, config.events) {
        return Ok(EventBudget::Fixed(n));
    }
    let duration_hours = pick(args.duration, config.duration_hours).unwrap_or(EXPERIMENT_HOURS_PER_SETTING);
    let rate_per_hour = pick(args.rate, config.rate_per_hour).unwrap_or(EXPERIMENT_RATE_PER_HOUR);
    if !(duration_hours >= 0.0 && rate_per_hour >= 0.0) {
        return Err(invalid("duration and rate must be non-negative"));
    }
    Ok(EventBudget::Poisson { duration_hours, rate_per_hour })
}

// ---------------------------------------------------------------- derive

fn reference_for(order: u32, preset: NetworkPreset) -> Option<(&'static str, RefState)> {
    match (order, preset) {
        (3, NetworkPreset::Experiment) => Some(("psi6+", RefState::Psi6Plus)),
        (2, NetworkPreset::FourMode) => Some(("psi4-", RefState::Psi4Minus)),
        (1, NetworkPreset::Pair) => Some(("psi2+", RefState::Psi2Plus)),
        _ => None,
    }
}

/// Smallest `|⟨ψ|U^{⊗n}|ψ⟩|²` over a fixed grid of single-qubit unitaries.
fn collective_invariance(ket: &QubitKet) -> Value {
    let angles = [0.0, 0.37, 0.91, 1.63];
    let mut min: f64 = 1.0;
    let mut samples = 0;
    for a in angles {
        for b in angles {
            for c in angles {
                let u = rotation(a) * quarter_wave_plate(b) * half_wave_plate(c);
                min = min.min(ket.overlap(&ket.apply_all(&u)));
                samples += 1;
            }
        }
    }
    json!({ "unitaries": samples, "min_overlap": min })
}

pub fn derive(ctx: &Context, args: &DeriveArgs) -> Result<(), CliError> {
    let cfg = ctx.config;
    let order = pick(args.order, cfg.order).unwrap_or(3);
    let preset: NetworkPreset = pick(args.network.clone(), cfg.network.clone()).as_deref().unwrap_or("experiment").parse()?;
    let alpha = pick(args.alpha, cfg.alpha).unwrap_or(DEFAULT_ALPHA);
    // the singlet-type four-photon state needs the opposite emission phase
    let default_phase = if preset == NetworkPreset::FourMode { std::f64::consts::PI } else { 0.0 };
    let phase = pick(args.phase, cfg.phase).unwrap_or(default_phase);
    let format = ctx.format(Format::Json, &[Format::Json, Format::Text], "derive")?;

    let source = PdcSource::new(Complex64::new(alpha, 0.0), phase)?;
    let modes: Vec<String> = preset.detector_modes().iter().map(|m| m.as_str().to_string()).collect();
    let mode_refs: Vec<&str> = modes.iter().map(String::as_str).collect();
    let network = preset.network();
    let selected = derive_postselected(&source, order, &network, &mode_refs)?;
    if let Some(path) = &args.fock_dump {
        let evolved = apply_network(&pdc_term(&source, order), &network)?;
        emit(Some(path), &json(&evolved.to_json())?)?;
    }

    let reference = reference_for(order, preset);
    let fid = match (&selected.ket, reference) {
        (Some(k), Some((_, r))) => Some(k.overlap(&reference_state(r))),
        (None, Some(_)) => Some(0.0),
        _ => None,
    };
    let invariance = match (&selected.ket, preset) {
        (Some(k), NetworkPreset::FourMode) => Some(collective_invariance(k)),
        _ => None,
    };
    let doc = json!({
        "order": order,
        "network": preset.name(),
        "detector_modes": modes,
        "alpha": alpha,
        "relative_phase": source.relative_phase(),
        "success_probability": selected.success_probability,
        "reference": reference.map(|(name, _)| name),
        "fidelity": fid,
        "collective_invariance": invariance,
        "state": selected.ket.as_ref().map(QubitKet::to_json),
    });
    let content = match format {
        Format::Text => match &selected.ket {
            Some(k) => format!("{k}\n"),
            None => "null\n".to_string(),
        },
        _ => json(&doc)?,
    };
    ctx.emit(&content)?;
    match fid {
        Some(f) => eprintln!("fidelity {f:.6}  success probability {:.6}", selected.success_probability),
        None => eprintln!("success probability {:.6}", selected.success_probability),
    }
    if let Some(f) = fid {
        if f < 1.0 - DERIVE_TOL {
            return Err(CliError::Check(format!("fidelity {f} with {} below 1 - {DERIVE_TOL:e}", reference.unwrap().0)));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- histogram

#[derive(Serialize)]
struct BinDoc {
    label: String,
    probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    standard_error: Option<f64>,
}

#[derive(Serialize)]
struct HistogramDoc {
    setting: String,
    mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    events: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    correlation: Value,
    bins: Vec<BinDoc>,
}

fn render_histogram(doc: &HistogramDoc, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => json(doc),
        Format::Svg => {
            let title = match doc.p {
                Some(p) => format!("{} ({}, p = {p})", doc.setting, doc.mode),
                None => format!("{} ({})", doc.setting, doc.mode),
            };
            let bars: Vec<Bar> =
                doc.bins.iter().map(|b| Bar { label: &b.label, value: b.probability, error: b.standard_error }).collect();
            Ok(bar_chart_svg(&title, &bars))
        }
        _ => {
            let mut s = String::new();
            if doc.mode == "analytic" {
                s.push_str("label,probability\n");
                for b in &doc.bins {
                    s.push_str(&format!("{},{}\n", b.label, b.probability));
                }
            } else {
                s.push_str("label,count,probability,standard_error\n");
                for b in &doc.bins {
                    s.push_str(&format!(
                        "{},{},{},{}\n",
                        b.label,
                        b.count.unwrap_or(0),
                        b.probability,
                        b.standard_error.unwrap_or(0.0)
                    ));
                }
            }
            Ok(s)
        }
    }
}

fn sampled_doc(table: &CountTable, p: Option<f64>) -> Result<HistogramDoc, CliError> {
    let probs = if table.total() > 0 {
        estimate_probabilities(table, ErrorModel::Multinomial)?
    } else {
        vec![Estimate { value: 0.0, standard_error: 0.0, sample_size: 0 }; table.counts.len()]
    };
    let corr = if table.total() > 0 { serde_json::to_value(estimate_correlation(table)?).unwrap() } else { Value::Null };
    Ok(HistogramDoc {
        setting: table.setting.to_string(),
        mode: "sampled",
        p,
        events: Some(table.total()),
        seed: table.seed,
        correlation: corr,
        bins: probs
            .iter()
            .enumerate()
            .map(|(k, e)| BinDoc {
                label: table.setting.outcome_label(k),
                probability: e.value,
                count: Some(table.counts[k]),
                standard_error: Some(e.standard_error),
            })
            .collect(),
    })
}

pub fn histogram(ctx: &Context, args: &HistogramArgs) -> Result<(), CliError> {
    let cfg = ctx.config;
    let format = ctx.format(Format::Csv, &[Format::Csv, Format::Json, Format::Svg], "histogram")?;
    if let Some(path) = args.counts.clone().or_else(|| cfg.counts.as_ref().and_then(|c| c.first().cloned())) {
        let table = read_table(&path)?;
        return ctx.emit(&render_histogram(&sampled_doc(&table, None)?, format)?);
    }
    let basis: NamedBasis = pick(args.basis.clone(), cfg.basis.clone()).as_deref().unwrap_or("HV").parse()?;
    let p = visibility(args.p, cfg.p)?;
    let mode = pick(args.mode.clone(), cfg.mode.clone()).unwrap_or_else(|| "analytic".into());
    let setting = SettingVector::named(basis, 6);
    let rho = add_white_noise(&psi6(), p)?;
    let doc = match mode.as_str() {
        "analytic" => {
            let dist = outcome_distribution(&rho, &setting)?;
            HistogramDoc {
                setting: setting.to_string(),
                mode: "analytic",
                p: Some(p),
                events: None,
                seed: None,
                correlation: json!({ "value": correlation(&rho, &setting)? }),
                bins: dist
                    .iter()
                    .enumerate()
                    .map(|(k, &pr)| BinDoc { label: setting.outcome_label(k), probability: pr, count: None, standard_error: None })
                    .collect(),
            }
        }
        "sampled" => {
            let table = sample_counts(&rho, &setting, budget(&args.sampling, cfg)?, ctx.seed)?;
            sampled_doc(&table, Some(p))?
        }
        other => return Err(usage(format!("unknown mode {other:?} (analytic, sampled)"))),
    };
    ctx.emit(&render_histogram(&doc, format)?)
}

// ---------------------------------------------------------------- project

fn qubit_index(arg: &str) -> Result<usize, CliError> {
    const MODES: &str = "abcdef";
    if let Some(i) = MODES.find(arg.to_ascii_lowercase().as_str()).filter(|_| arg.len() == 1) {
        return Ok(i);
    }
    match arg.parse::<usize>() {
        Ok(i) if i < 6 => Ok(i),
        _ => Err(usage(format!("qubit {arg:?} is not a mode letter a-f or index 0-5"))),
    }
}

/// Polarization letter to (basis, is-second-outcome).
fn outcome_letter(letter: &str) -> Result<(NamedBasis, bool), CliError> {
    match letter.to_ascii_uppercase().as_str() {
        "H" => Ok((NamedBasis::HV, false)),
        "V" => Ok((NamedBasis::HV, true)),
        "D" => Ok((NamedBasis::DA, false)),
        "A" => Ok((NamedBasis::DA, true)),
        "L" => Ok((NamedBasis::LR, false)),
        "R" => Ok((NamedBasis::LR, true)),
        _ => Err(usage(format!("outcome {letter:?} is not one of H, V, D, A, L, R"))),
    }
}

pub fn project(ctx: &Context, args: &ProjectArgs) -> Result<(), CliError> {
    let cfg = ctx.config;
    let format = ctx.format(Format::Json, &[Format::Csv, Format::Json, Format::Svg], "project")?;
    let qubit_arg = pick(args.qubit.clone(), cfg.qubit.clone()).unwrap_or_else(|| "b".into());
    let qubit = qubit_index(&qubit_arg)?;
    let letter = pick(args.outcome.clone(), cfg.outcome.clone()).unwrap_or_else(|| "H".into());
    let (basis, second) = outcome_letter(&letter)?;
    let show: NamedBasis = pick(args.basis.clone(), cfg.basis.clone()).as_deref().unwrap_or("HV").parse()?;

    let ab = analyzer_basis(&AnalyzerSetting::Named(basis));
    let vector = if second { ab.minus } else { ab.plus };
    let conditioned = project_qubit(&psi6(), qubit, &vector)?;
    let Some(state) = conditioned.state else {
        return Err(CliError::Check(format!("outcome {letter} on qubit {qubit} has zero probability")));
    };
    let setting = SettingVector::named(show, 5);
    let dist = outcome_distribution(&state, &setting)?;
    let bins: Vec<BinDoc> = dist
        .iter()
        .enumerate()
        .map(|(k, &p)| BinDoc { label: setting.outcome_label(k), probability: p, count: None, standard_error: None })
        .collect();
    let content = match format {
        Format::Json => json(&json!({
            "qubit": qubit,
            "outcome": letter.to_ascii_uppercase(),
            "probability": conditioned.probability,
            "state": state.to_json(),
            "setting": setting.to_string(),
            "bins": bins,
        }))?,
        _ => render_histogram(
            &HistogramDoc {
                setting: setting.to_string(),
                mode: "analytic",
                p: None,
                events: None,
                seed: None,
                correlation: Value::Null,
                bins,
            },
            format,
        )?,
    };
    eprintln!("probability {:.6}", conditioned.probability);
    ctx.emit(&content)
}

// ---------------------------------------------------------------- report

#[derive(Serialize)]
struct Quantity {
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    standard_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sample_size: Option<u64>,
}

impl From<Estimate> for Quantity {
    fn from(e: Estimate) -> Self {
        Quantity { value: e.value, standard_error: Some(e.standard_error), sample_size: Some(e.sample_size) }
    }
}

impl Quantity {
    fn exact(value: f64) -> Self {
        Quantity { value, standard_error: None, sample_size: None }
    }
}

#[derive(Serialize)]
struct IndicatorDoc {
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    standard_error: Option<f64>,
    verdict: IndicatorVerdict,
}

#[derive(Serialize)]
struct WitnessDoc {
    #[serde(flatten)]
    report: WitnessReport,
    evaluated_on: &'static str,
}

#[derive(Serialize)]
struct NoiseDoc {
    residual_correlation: Vec<f64>,
    noise_contribution: Vec<f64>,
}

#[derive(Serialize)]
struct ReportDoc {
    source: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    significance_k: f64,
    correlations: serde_json::Map<String, Value>,
    visibility: Quantity,
    fidelity: Quantity,
    witnesses: serde_json::Map<String, Value>,
    indicator: serde_json::Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise: Option<NoiseDoc>,
}

fn indicator_doc(e: &Estimate, k: f64) -> IndicatorDoc {
    let verdict =
        if e.value - k * e.standard_error > 1.0 { IndicatorVerdict::NotFullySeparable } else { IndicatorVerdict::Inconclusive };
    IndicatorDoc { value: e.value, standard_error: Some(e.standard_error), verdict }
}

fn read_table(path: &PathBuf) -> Result<CountTable, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    CountTable::from_csv(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn uniform_basis(table: &CountTable) -> Option<NamedBasis> {
    let first = table.setting.0.first()?;
    match first {
        AnalyzerSetting::Named(b) if table.setting.0.iter().all(|s| s == first) => Some(*b),
        _ => None,
    }
}

pub fn report(ctx: &Context, args: &ReportArgs) -> Result<(), CliError> {
    let cfg = ctx.config;
    ctx.format(Format::Json, &[Format::Json], "report")?;
    let k = pick(args.k, cfg.k).unwrap_or(0.0);
    if !(k >= 0.0) {
        return Err(invalid("k must be non-negative"));
    }
    let target = psi6();
    let wmax = max_overlap_witness(&target, PSI6_OVERLAP_BOUND)?;
    let w = reduce_witness(&wmax, PSI6_REDUCED_IDENTITY)?;
    let counts = if args.counts.is_empty() { cfg.counts.clone().unwrap_or_default() } else { args.counts.clone() };

    let doc = if counts.is_empty() {
        let p = visibility(args.p, cfg.p)?;
        let rho = add_white_noise(&target, p)?;
        let mut correlations = serde_json::Map::new();
        for (b, key) in BASIS_KEYS {
            correlations.insert(key.into(), to_value(&Quantity::exact(correlation(&rho, &SettingVector::named(b, 6))?)));
        }
        let mut witnesses = serde_json::Map::new();
        for (name, obs) in [("max_overlap", &wmax), ("reduced", &w)] {
            let report = WitnessReport::new(obs, &target, expectation(obs, &rho)?, None, k)?;
            witnesses.insert(name.into(), to_value(&WitnessDoc { report, evaluated_on: "white_noise_model" }));
        }
        let diag = ["zzzzzz", "xxxxxx", "yyyyyy"];
        let tensor = CorrelationTensor::from_state(&rho, &diag.map(String::from))?;
        let mut indicator = serde_json::Map::new();
        for (key, subset) in subsets(&diag) {
            let r = indicator_norm(&tensor, &subset)?;
            indicator.insert(key, to_value(&IndicatorDoc { value: r.value, standard_error: None, verdict: r.verdict }));
        }
        ReportDoc {
            source: "analytic",
            p: Some(p),
            significance_k: k,
            correlations,
            visibility: Quantity::exact(p),
            fidelity: Quantity::exact(fidelity(&rho, &target)?),
            witnesses,
            indicator,
            noise: None,
        }
    } else {
        let tables = counts.iter().map(read_table).collect::<Result<Vec<_>, _>>()?;
        let mut by_basis: [Option<&CountTable>; 3] = [None; 3];
        for (t, path) in tables.iter().zip(&counts) {
            let b = uniform_basis(t)
                .ok_or_else(|| invalid(format!("{}: setting {} is not one named basis on every qubit", path.display(), t.setting)))?;
            let slot = &mut by_basis[BASIS_KEYS.iter().position(|(x, _)| *x == b).unwrap()];
            if slot.replace(t).is_some() {
                return Err(invalid(format!("two count tables for basis {b:?}")));
            }
            if t.n_qubits() != 6 {
                return Err(invalid(format!("{}: expected 6 qubits", path.display())));
            }
        }
        let [Some(z), Some(x), Some(y)] = by_basis else {
            return Err(usage("report needs count tables for HV, DA and LR"));
        };
        let est = [estimate_correlation(z)?, estimate_correlation(x)?, estimate_correlation(y)?];
        let mut correlations = serde_json::Map::new();
        for ((_, key), e) in BASIS_KEYS.iter().zip(est) {
            correlations.insert((*key).into(), to_value(&Quantity::from(e)));
        }
        let p_hat = estimate_visibility(&est[0], &est[1], &est[2])?;
        let fid = fidelity_from_visibility(&p_hat, 6);

        let sampled_w = witness_from_counts(&w, &[z.clone(), x.clone(), y.clone()])?;
        let model: DensityOperator = add_white_noise(&target, p_hat.value.clamp(0.0, 1.0))?;
        let mut witnesses = serde_json::Map::new();
        witnesses.insert(
            "max_overlap".into(),
            to_value(&WitnessDoc {
                report: WitnessReport::new(&wmax, &target, expectation(&wmax, &model)?, None, k)?,
                evaluated_on: "white_noise_model",
            }),
        );
        witnesses.insert(
            "reduced".into(),
            to_value(&WitnessDoc {
                report: WitnessReport::new(&w, &target, sampled_w.value, Some(sampled_w.standard_error), k)?,
                evaluated_on: "counts",
            }),
        );
        let mut indicator = serde_json::Map::new();
        for (key, idx) in [("zxy", vec![0, 1, 2]), ("zx", vec![0, 1]), ("zy", vec![0, 2]), ("xy", vec![1, 2])] {
            let picked: Vec<Estimate> = idx.iter().map(|&i| est[i]).collect();
            indicator.insert(key.into(), to_value(&indicator_doc(&indicator_from_estimates(&picked), k)));
        }
        let noise = if p_hat.value < 1.0 {
            Some(NoiseDoc {
                residual_correlation: noise_residual_correlation(&est, p_hat.value, &IDEAL_CORRELATIONS)?,
                noise_contribution: noise_contribution(&est, p_hat.value, &IDEAL_CORRELATIONS)?,
            })
        } else {
            None
        };
        ReportDoc {
            source: "counts",
            p: None,
            significance_k: k,
            correlations,
            visibility: p_hat.into(),
            fidelity: fid.into(),
            witnesses,
            indicator,
            noise,
        }
    };
    ctx.emit(&json(&doc)?)
}

/// The three-basis set plus every pair, keyed by basis letters.
fn subsets<'a>(diag: &[&'a str; 3]) -> Vec<(String, Vec<&'a str>)> {
    vec![
        ("zxy".into(), diag.to_vec()),
        ("zx".into(), vec![diag[0], diag[1]]),
        ("zy".into(), vec![diag[0], diag[2]]),
        ("xy".into(), vec![diag[1], diag[2]]),
    ]
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

// ---------------------------------------------------------------- witness

pub fn witness(ctx: &Context, args: &WitnessArgs) -> Result<(), CliError> {
    let cfg = ctx.config;
    let format = ctx.format(Format::Text, &[Format::Text, Format::Json], "witness")?;
    let which = pick(args.witness.clone(), cfg.witness.clone()).unwrap_or_else(|| "reduced".into());
    let bound = pick(args.bound, cfg.bound).unwrap_or(PSI6_OVERLAP_BOUND);
    let target = psi6();
    let full = max_overlap_witness(&target, bound).map_err(|e| invalid(e.to_string()))?;
    let (obs, identity): (PauliObservable, Option<f64>) = match which.as_str() {
        "max-overlap" => (full, None),
        "reduced" => {
            let c = pick(args.identity_constant, cfg.identity_constant).unwrap_or(PSI6_REDUCED_IDENTITY);
            (reduce_witness(&full, c).map_err(|e| invalid(e.to_string()))?, Some(c))
        }
        other => return Err(usage(format!("unknown witness {other:?} (reduced, max-overlap)"))),
    };
    let on_target = expectation(&obs, &target)?;
    let tolerance = white_noise_tolerance(&obs, &target).ok();
    let content = match format {
        Format::Json => json(&json!({
            "witness": which,
            "n": obs.n(),
            "overlap_bound": bound,
            "identity_constant": identity,
            "expectation_on_target": on_target,
            "noise_tolerance": tolerance,
            "terms": obs.terms().iter().map(|(w, c)| json!({ "word": w.to_string(), "coefficient": c })).collect::<Vec<_>>(),
        }))?,
        _ => obs.to_text(),
    };
    eprintln!(
        "{} terms; expectation on target {on_target:.6}; noise tolerance {}",
        obs.len(),
        tolerance.map_or("none (target not detected)".to_string(), |t| format!("{t:.6}"))
    );
    ctx.emit(&content)
}

// ---------------------------------------------------------------- teleclone

fn parse_input(arg: &str) -> Result<QubitKet, CliError> {
    let vector = if arg.contains(':') {
        let setting: AnalyzerSetting = arg.parse()?;
        analyzer_basis(&setting).plus
    } else {
        let (basis, second) = outcome_letter(arg)?;
        let b = analyzer_basis(&AnalyzerSetting::Named(basis));
        if second {
            b.minus
        } else {
            b.plus
        }
    };
    Ok(QubitKet::new(1, vec![vector[0], vector[1]])?)
}

pub fn teleclone(ctx: &Context, args: &TelecloneArgs) -> Result<(), CliError> {
    let cfg = ctx.config;
    ctx.format(Format::Json, &[Format::Json], "teleclone")?;
    let input = parse_input(&pick(args.input.clone(), cfg.input.clone()).unwrap_or_else(|| "H".into()))?;
    let receivers = pick(args.receivers.clone(), cfg.receivers.clone()).unwrap_or_else(|| vec![4, 5, 6]);
    let receivers: [usize; 3] =
        receivers.try_into().map_err(|r: Vec<usize>| usage(format!("need exactly three receivers, got {}", r.len())))?;
    let layout = ProtocolLayout::with_receivers(receivers)?;
    let table = derive_correction_table(&layout)?;
    let report = psi6::teleclone::report(&input, &layout, &table)?;
    ctx.emit(&json(&report)?)
}

// ---------------------------------------------------------------- simulate

pub fn simulate(ctx: &Context, args: &SimulateArgs) -> Result<(), CliError> {
    let cfg = ctx.config;
    let format = ctx.format(Format::Csv, &[Format::Csv, Format::Json], "simulate")?;
    let p = visibility(args.p, cfg.p)?;
    let names = pick(args.bases.clone(), cfg.bases.clone()).unwrap_or_else(|| vec!["HV".into(), "DA".into(), "LR".into()]);
    let bases = names.iter().map(|s| s.parse::<NamedBasis>()).collect::<Result<Vec<_>, _>>()?;
    let budget = budget(&args.sampling, cfg)?;
    let rho = add_white_noise(&psi6(), p)?;
    // basis i uses seed + i
    let tables = bases
        .iter()
        .enumerate()
        .map(|(i, &b)| sample_counts(&rho, &SettingVector::named(b, 6), budget, ctx.seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>, _>>()?;

    match format {
        Format::Json => {
            let docs: Vec<Value> = tables
                .iter()
                .map(|t| {
                    let corr = if t.total() > 0 { serde_json::to_value(estimate_correlation(t)?).unwrap() } else { Value::Null };
                    Ok(json!({
                        "setting": t.setting.to_string(),
                        "seed": t.seed,
                        "events": t.total(),
                        "correlation": corr,
                        "counts": (0..t.counts.len()).map(|k| json!({ "label": t.setting.outcome_label(k), "count": t.counts[k] })).collect::<Vec<_>>(),
                    }))
                })
                .collect::<Result<_, CliError>>()?;
            ctx.emit(&json(&json!({ "p": p, "seed": ctx.seed, "tables": docs }))?)
        }
        _ => match &ctx.out {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| invalid(format!("cannot create {}: {e}", dir.display())))?;
                for (t, b) in tables.iter().zip(&bases) {
                    let path = dir.join(format!("counts_{b:?}.csv"));
                    emit(Some(&path), &t.to_csv())?;
                    eprintln!("{}: {} events", path.display(), t.total());
                }
                Ok(())
            }
            None => {
                for t in &tables {
                    print!("{}", t.to_csv());
                }
                Ok(())
            }
        },
    }
}
