use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const TOL: f64 = 1e-9;

fn psi6(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psi6")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let out = psi6(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas")
}

fn assert_schema(name: &str, doc: &Value) {
    let text = std::fs::read_to_string(schema_dir().join(format!("{name}.schema.json"))).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{name}: {errors:#?}");
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&psi6(&["--help"])), 0);
    assert_eq!(code(&psi6(&["no-such-command"])), 1);
    assert_eq!(code(&psi6(&["histogram", "--basis", "QQ"])), 1);
    assert_eq!(code(&psi6(&["histogram", "--mode", "nonsense"])), 1);
    assert_eq!(code(&psi6(&["histogram", "--p", "1.5"])), 2);
    assert_eq!(code(&psi6(&["derive", "--alpha", "1.5"])), 2);
    assert_eq!(code(&psi6(&["report", "--counts", "/nonexistent/counts.csv"])), 2);
    // wrong phase gives a different four-photon state
    assert_eq!(code(&psi6(&["derive", "--order", "2", "--network", "four-mode", "--phase", "0"])), 3);
    assert_eq!(code(&psi6(&["witness", "--format", "svg"])), 1);
}

#[test]
fn derive_default_is_psi6_with_order_three_success_probability() {
    let d = ok_json(&["derive"]);
    assert_schema("derive", &d);
    assert_eq!(d["order"], 3);
    assert_eq!(d["network"], "experiment");
    assert_eq!(d["reference"], "psi6+");
    assert!((f(&d["fidelity"]) - 1.0).abs() < TOL);
    assert!((f(&d["success_probability"]) - 9.0 / 256.0).abs() < TOL);
    let nonzero = d["state"]["amplitudes"].as_array().unwrap().iter().filter(|a| f(&a["re"]).abs() > 1e-12 || f(&a["im"]).abs() > 1e-12).count();
    assert_eq!(nonzero, 20);
}

#[test]
fn derive_other_presets() {
    let d = ok_json(&["derive", "--order", "2", "--network", "four-mode"]);
    assert_schema("derive", &d);
    assert_eq!(d["reference"], "psi4-");
    assert!((f(&d["fidelity"]) - 1.0).abs() < TOL);
    assert!((f(&d["relative_phase"]) - std::f64::consts::PI).abs() < TOL);
    assert!(f(&d["collective_invariance"]["min_overlap"]) > 1.0 - TOL);

    let d = ok_json(&["derive", "--order", "1", "--network", "pair"]);
    assert_schema("derive", &d);
    assert_eq!(d["reference"], "psi2+");
    assert!((f(&d["fidelity"]) - 1.0).abs() < TOL);

    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("fock.json");
    ok_json(&["derive", "--order", "1", "--network", "pair", "--fock-dump", dump.to_str().unwrap()]);
    let fock: Value = serde_json::from_str(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    assert!(fock["modes"].as_array().is_some_and(|m| !m.is_empty()));
    assert!(!fock["terms"].as_array().unwrap().is_empty());

    let text = stdout(&psi6(&["derive", "--format", "text"]));
    assert!(text.contains("HHHVVV"), "{text}");
}

#[test]
fn analytic_histogram_sums_to_one() {
    let d = ok_json(&["histogram", "--basis", "DA", "--p", "0.5", "--format", "json"]);
    assert_schema("histogram", &d);
    let bins = d["bins"].as_array().unwrap();
    assert_eq!(bins.len(), 64);
    assert_eq!(bins[0]["label"], "DDDDDD");
    let total: f64 = bins.iter().map(|b| f(&b["probability"])).sum();
    assert!((total - 1.0).abs() < TOL);
    assert!((f(&d["correlation"]["value"]) - 0.5).abs() < TOL);

    let csv = stdout(&psi6(&["histogram"]));
    assert!(csv.starts_with("label,probability\nHHHHHH,0\n"), "{csv}");
    assert_eq!(csv.lines().count(), 65);
    let svg = stdout(&psi6(&["histogram", "--format", "svg"]));
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn seeded_histogram_is_byte_identical() {
    let args = ["histogram", "--basis", "HV", "--p", "0.859", "--mode", "sampled", "--events", "320", "--seed", "7"];
    let first = stdout(&psi6(&args));
    assert_eq!(first, stdout(&psi6(&args)));
    assert_ne!(first, stdout(&psi6(&[&args[..9], &["8"]].concat())));

    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/histogram_hv_p0859_n320_seed7.csv");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden.parent().unwrap()).unwrap();
        std::fs::write(&golden, &first).unwrap();
    }
    assert_eq!(first, std::fs::read_to_string(&golden).unwrap());
    let counts: u64 = first.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(counts, 320);
}

#[test]
fn analytic_report_pure_state() {
    let r = ok_json(&["report", "--p", "1"]);
    assert_schema("report", &r);
    let c = &r["correlations"];
    assert!((f(&c["z"]["value"]) + 1.0).abs() < TOL);
    assert!((f(&c["x"]["value"]) - 1.0).abs() < TOL);
    assert!((f(&c["y"]["value"]) - 1.0).abs() < TOL);
    assert!((f(&r["fidelity"]["value"]) - 1.0).abs() < TOL);
    assert!((f(&r["witnesses"]["max_overlap"]["expectation"]) + 1.0 / 3.0).abs() < TOL);
    assert!((f(&r["witnesses"]["reduced"]["expectation"]) + 1.0 / 18.0).abs() < TOL);
    assert_eq!(r["witnesses"]["reduced"]["verdict"], "entangled");
    assert!((f(&r["indicator"]["zxy"]["value"]) - 3.0).abs() < TOL);
    assert!((f(&r["indicator"]["zx"]["value"]) - 2.0).abs() < TOL);
    assert!(r.get("noise").is_none());
}

#[test]
fn analytic_report_experimental_visibility() {
    let r = ok_json(&["report", "--p", "0.859"]);
    assert_schema("report", &r);
    // F = p + (1 - p)/64
    assert!((f(&r["fidelity"]["value"]) - (0.859 + 0.141 / 64.0)).abs() < TOL);
    assert!((f(&r["fidelity"]["value"]) - 0.861).abs() < 5e-4);
    assert!((f(&r["indicator"]["zxy"]["value"]) - 3.0 * 0.859 * 0.859).abs() < TOL);
    assert!((f(&r["indicator"]["zxy"]["value"]) - 2.214).abs() < 1e-3);
    assert_eq!(r["indicator"]["zxy"]["verdict"], "not_fully_separable");
    assert_eq!(r["witnesses"]["max_overlap"]["verdict"], "entangled");
}

#[test]
fn analytic_report_fully_mixed() {
    let r = ok_json(&["report", "--p", "0"]);
    assert_schema("report", &r);
    for w in ["max_overlap", "reduced"] {
        assert_eq!(r["witnesses"][w]["verdict"], "inconclusive");
    }
    for key in ["zxy", "zx", "zy", "xy"] {
        assert_eq!(r["indicator"][key]["verdict"], "inconclusive");
    }
    assert!((f(&r["fidelity"]["value"]) - 1.0 / 64.0).abs() < TOL);
}

#[test]
fn simulate_then_report_from_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = psi6(&["simulate", "--p", "0.859", "--events", "400", "--seed", "3", "--out", d]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let files: Vec<String> = ["LR", "HV", "DA"].iter().map(|b| format!("{d}/counts_{b}.csv")).collect();
    let mut args = vec!["report", "--k", "1", "--counts"];
    args.extend(files.iter().map(String::as_str));
    let r = ok_json(&args);
    assert_schema("report", &r);
    assert_eq!(r["source"], "counts");
    assert_eq!(r["correlations"]["z"]["sample_size"], 400);
    let se = f(&r["correlations"]["x"]["standard_error"]);
    let e = f(&r["correlations"]["x"]["value"]);
    assert!((se - ((1.0 - e * e) / 400.0).sqrt()).abs() < TOL);
    assert!((f(&r["visibility"]["value"]) - 0.859).abs() < 0.1);
    assert_eq!(r["witnesses"]["max_overlap"]["evaluated_on"], "white_noise_model");
    assert_eq!(r["witnesses"]["reduced"]["evaluated_on"], "counts");
    assert!(r["noise"]["residual_correlation"].as_array().unwrap().len() == 3);

    let s = ok_json(&["simulate", "--p", "0.859", "--events", "50", "--format", "json"]);
    assert_schema("simulate", &s);
    assert_eq!(s["tables"].as_array().unwrap().len(), 3);
    assert_eq!(s["tables"][1]["seed"], 8);
}

#[test]
fn report_rejects_malformed_counts_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let out = psi6(&["simulate", "--events", "10", "--bases", "HV", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let good = std::fs::read_to_string(dir.path().join("counts_HV.csv")).unwrap();
    let mut lines: Vec<&str> = good.lines().collect();
    lines[5] = "HHHHVV,not-a-number";
    std::fs::write(&path, lines.join("\n")).unwrap();
    let out = psi6(&["histogram", "--counts", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 6"), "{err}");

    let out = psi6(&["report", "--counts", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn project_and_witness_outputs() {
    let p = ok_json(&["project", "--qubit", "a", "--outcome", "H"]);
    assert_schema("project", &p);
    assert!((f(&p["probability"]) - 0.5).abs() < TOL);
    let total: f64 = p["bins"].as_array().unwrap().iter().map(|b| f(&b["probability"])).sum();
    assert!((total - 1.0).abs() < TOL);

    let w = ok_json(&["witness", "--format", "json"]);
    assert_schema("witness", &w);
    assert_eq!(w["terms"].as_array().unwrap().len(), 94);
    assert!((f(&w["expectation_on_target"]) + 1.0 / 18.0).abs() < TOL);
    assert!((f(&w["noise_tolerance"]) - 32.0 / 213.0).abs() < TOL);

    let w = ok_json(&["witness", "--witness", "max-overlap", "--format", "json"]);
    assert_schema("witness", &w);
    assert!((f(&w["noise_tolerance"]) - 64.0 / 189.0).abs() < TOL);

    let text = stdout(&psi6(&["witness"]));
    assert_eq!(text.lines().count(), 94);
    let golden = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/golden/reduced_witness.txt")).unwrap();
    assert_eq!(text, golden);
}

#[test]
fn teleclone_reports_optimal_fidelity() {
    for input in ["H", "D", "R", "bloch:0.6:0:-0.8"] {
        let t = ok_json(&["teleclone", "--input", input]);
        assert_schema("teleclone", &t);
        assert_eq!(t["uniform_corrections"], true);
        for o in t["outcomes"].as_array().unwrap() {
            assert!((f(&o["probability"]) - 0.25).abs() < TOL);
            for fid in o["fidelities"].as_array().unwrap() {
                assert!((f(fid) - 7.0 / 9.0).abs() < TOL, "{input}: {o}");
            }
        }
    }
    let t = ok_json(&["teleclone", "--receivers", "2,3,4"]);
    assert_schema("teleclone", &t);
    assert_eq!(t["layout"]["port"], 1);
    assert_eq!(code(&psi6(&["teleclone", "--receivers", "4,5"])), 1);
}

#[test]
fn config_file_supplies_defaults_and_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let doc = serde_json::json!({ "p": 0.5, "format": "json", "basis": "LR", "seed": 11 });
    assert_schema("run_config", &doc);
    std::fs::write(&cfg, doc.to_string()).unwrap();
    let h = ok_json(&["histogram", "--config", cfg.to_str().unwrap()]);
    assert_eq!(h["setting"], "LR LR LR LR LR LR");
    assert!((f(&h["correlation"]["value"]) - 0.5).abs() < TOL);
    // flag wins over config
    let h = ok_json(&["histogram", "--config", cfg.to_str().unwrap(), "--p", "1"]);
    assert!((f(&h["correlation"]["value"]) - 1.0).abs() < TOL);

    std::fs::write(&cfg, r#"{ "p": 0.5, "visibilty": 0.9 }"#).unwrap();
    assert_eq!(code(&psi6(&["histogram", "--config", cfg.to_str().unwrap()])), 2);
    std::fs::write(&cfg, r#"{ "p": 2.0 }"#).unwrap();
    assert_eq!(code(&psi6(&["histogram", "--config", cfg.to_str().unwrap()])), 2);
}
