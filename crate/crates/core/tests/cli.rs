use std::path::{Path, PathBuf};
use std::process::Command as Process;

use serde_json::Value;
use tempfile::TempDir;
use weightlab::cli::{parse_command, run, Command, Format, ProbeKind};

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn bin(args: &[&str]) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_weightlab")).args(args).output().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn parses_examples() {
    let spec = parse_command(["conditions", "--weight", "w.json", "--p", "2"]).unwrap();
    match spec.command {
        Command::Conditions { weight, p, .. } => {
            assert_eq!(weight, PathBuf::from("w.json"));
            assert_eq!(p, 2.0);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(spec.format, Format::Json);

    let spec = parse_command(["apply", "--weight", "w.json", "--input", "f.json", "--n-out", "64"]).unwrap();
    assert!(matches!(spec.command, Command::Apply { n_out: 64, .. }));

    let spec = parse_command(["probe", "tilde-hat", "--weight", "w.json", "--format", "csv"]).unwrap();
    assert!(matches!(spec.command, Command::Probe { kind: ProbeKind::TildeHat, .. }));
    assert_eq!(spec.format, Format::Csv);
}

#[test]
fn usage_errors_name_the_flag() {
    let e = parse_command(["conditions", "--weight", "w.json", "--p", "0.5"]).unwrap_err();
    assert!(e.to_string().contains("--p"), "{e}");
    let e = parse_command(["conditions", "--weight", "w.json", "--p", "2", "--bogus"]).unwrap_err();
    assert!(e.to_string().contains("--bogus"), "{e}");
    assert!(parse_command(["apply", "--weight", "w.json", "--input", "f.json", "--n-out", "x"]).is_err());
    assert!(parse_command(["frobnicate"]).is_err());

    let out = bin(&["conditions", "--weight", "w.json", "--p", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--p"));
}

#[test]
fn analyze_constant_weight() {
    let dir = TempDir::new().unwrap();
    let w = write(&dir, "w.json", r#"{"kind":"constant"}"#);
    let spec = parse_command(["analyze", "--weight", arg(&w), "--grid-depth", "40"]).unwrap();
    let out = run(&spec).unwrap();
    assert_eq!(out.status, 0);
    let v: Value = serde_json::from_str(&out.report).unwrap();
    assert_eq!(v["weight"]["kind"], "constant");
    assert_eq!(v["params"]["grid_depth"], 40);
    let dhat = v["reports"].as_array().unwrap().iter().find(|r| r["name"] == "dhat_profile").unwrap();
    let samples = dhat["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 41);
    for s in samples {
        assert!((s["value"].as_f64().unwrap() - 2.0).abs() < 1e-9, "{s}");
    }
    assert_eq!(dhat["verdict"], "FiniteEvidence");
}

#[test]
fn reports_carry_provenance() {
    let dir = TempDir::new().unwrap();
    let w = write(&dir, "w.json", r#"{"kind":"standard","beta":1.0}"#);
    let f = write(&dir, "f.json", r#"{"coeffs":[1.0,0.5]}"#);
    let spec = parse_command(["apply", "--weight", arg(&w), "--input", arg(&f), "--n-out", "4"]).unwrap();
    let v: Value = serde_json::from_str(&run(&spec).unwrap().report).unwrap();
    assert_eq!(v["weight"]["beta"], 1.0);
    assert_eq!(v["params"]["n_out"], 4);
    assert_eq!(v["input"]["coeffs"][1], 0.5);
    assert_eq!(v["output"]["coeffs"].as_array().unwrap().len(), 4);

    let spec = parse_command(["conditions", "--weight", arg(&w), "--p", "2", "--grid-depth", "24", "--format", "csv"])
        .unwrap();
    let csv = run(&spec).unwrap().report;
    assert!(csv.starts_with("functional,param,value,running_sup\n"));
}

#[test]
fn io_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.json");
    let out = bin(&["analyze", "--weight", arg(&missing)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));

    let bad = write(&dir, "bad.json", "{\"kind\": \"standard\",\n \"beta\": }");
    let out = bin(&["analyze", "--weight", arg(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json") && err.contains("line 2"), "{err}");
}

#[test]
fn binary_output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let w = write(&dir, "w.json", r#"{"kind":"standard","beta":0.5}"#);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let status =
            bin(&["probe", "two-path", "--weight", arg(&w), "--seed", "42", "--count", "10", "--output", arg(out)]);
        assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    }
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert_eq!(a, b);
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["params"]["seed"], 42);
    assert_eq!(v["results"][0]["weight"]["beta"], 0.5);
}

#[test]
fn noncompactness_probe_passes() {
    let dir = TempDir::new().unwrap();
    let w = write(&dir, "w.json", r#"{"kind":"standard","beta":1.0}"#);
    let spec = parse_command(["probe", "noncompactness", "--weight", arg(&w), "--p", "2"]).unwrap();
    let out = run(&spec).unwrap();
    assert_eq!(out.status, 0);
    let v: Value = serde_json::from_str(&out.report).unwrap();
    assert_eq!(v["results"][0]["pass"], true);
    assert_eq!(v["results"][0]["outcome"], "pass");
}

#[test]
fn probe_without_weight_is_rejected() {
    let spec = parse_command(["probe", "equivalence"]).unwrap();
    assert!(run(&spec).is_err());
    let spec = parse_command(["probe", "lacunary", "--p", "0.5", "--format", "text"]).unwrap();
    let out = run(&spec).unwrap();
    assert!(out.report.starts_with("lacunary"));
}
