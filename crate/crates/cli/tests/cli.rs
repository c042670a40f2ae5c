use std::path::{Path, PathBuf};
use std::process::Command;

use rho_cli::{run_with_io, EXIT_CAPACITY, EXIT_INPUT, EXIT_OK};
use rho_core::dilation::{build_shift_unitary_rho_dilation, scaled_nilpotent};
use rho_core::repro::ExperimentReport;
use rho_core::{ComplexMatrix, OperatorTuple};
use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("rho-radii").chain(args.iter().copied());
    let code = run_with_io(argv, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, x: &T) -> String {
    let path: PathBuf = dir.join(name);
    std::fs::write(&path, serde_json::to_string(x).unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("wall_time_s");
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(xs) => xs.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn error_kind(r: &Run) -> String {
    let v: Value = serde_json::from_str(r.stderr.trim()).expect("error JSON on stderr");
    assert!(v["message"].is_string());
    v["error"].as_str().unwrap().to_owned()
}

#[test]
fn radius_of_identity_at_two() {
    let dir = TempDir::new().unwrap();
    let eye = write_json(dir.path(), "eye3.json", &ComplexMatrix::identity(3));
    let r = cli(&["radius", "--rho", "2", "--input", &eye]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    let (lo, hi) = (v["lo"].as_f64().unwrap(), v["hi"].as_f64().unwrap());
    assert!(lo <= 1.0 + 1e-9 && hi >= 1.0 - 1e-9 && hi - lo <= 1e-6);
}

#[test]
fn nilpotent_contraction_is_member() {
    let dir = TempDir::new().unwrap();
    let n = write_json(dir.path(), "nilpotent01.json", &scaled_nilpotent(1.0));
    let r = cli(&["membership", "--rho", "1", "--input", &n]);
    assert_eq!(r.code, EXIT_OK);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["decision"], "In");
    assert!(v["margin"].as_f64().unwrap() >= -1e-9);

    let r = cli(&["numrad", "--input", &n]);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert!((v["numerical_radius"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn tuple_input_is_accepted() {
    let dir = TempDir::new().unwrap();
    let pair = OperatorTuple::new(vec![ComplexMatrix::identity(2), ComplexMatrix::zeros(2, 2)]).unwrap();
    let p = write_json(dir.path(), "pair.json", &pair);
    let r = cli(&["membership", "--rho", "2", "--input", &p, "--budget", "8"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["decision"], "In");
}

#[test]
fn reproduction_aliases_and_determinism() {
    let a = cli(&["repro", "--name", "thm51", "--rho", "2"]);
    assert_eq!(a.code, EXIT_OK, "{}", a.stderr);
    let b = cli(&["repro", "--name", "non-similarity", "--rho", "2"]);
    let mut va: Value = serde_json::from_str(&a.stdout).unwrap();
    let mut vb: Value = serde_json::from_str(&b.stdout).unwrap();
    strip_timing(&mut va);
    strip_timing(&mut vb);
    assert_eq!(serde_json::to_string(&va).unwrap(), serde_json::to_string(&vb).unwrap());
    let report: ExperimentReport = serde_json::from_str(&a.stdout).unwrap();
    assert!(report.passed);

    let s = cli(&["repro", "--name", "thm53", "--rho", "2"]);
    assert_eq!(s.code, EXIT_OK, "{}", s.stderr);
}

#[test]
fn seeded_reports_repeat() {
    let args = ["repro", "--name", "von-neumann", "--rho", "1.5", "--trials", "20", "--seed", "3"];
    let mut a: Value = serde_json::from_str(&cli(&args).stdout).unwrap();
    let mut b: Value = serde_json::from_str(&cli(&args).stdout).unwrap();
    strip_timing(&mut a);
    strip_timing(&mut b);
    assert_eq!(a, b);
    assert_eq!(a["parameters"]["seed"], 3);
}

#[test]
fn output_file_is_written() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("report.json");
    let r = cli(&["repro", "--name", "scalar-boundary", "--output", path.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.stdout.is_empty());
    let report: ExperimentReport = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report.name, "scalar-boundary");
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn dilation_verification() {
    let dir = TempDir::new().unwrap();
    let (big, e) = build_shift_unitary_rho_dilation(2.0, 8).unwrap();
    let small = OperatorTuple::single(scaled_nilpotent(2.0)).unwrap();
    let s = write_json(dir.path(), "small.json", &small);
    let b = write_json(dir.path(), "big.json", &big);
    let e = write_json(dir.path(), "e.json", &e);
    let base = ["verify-dilation", "--small", &s, "--big", &b, "--embedding", &e, "--rho", "2"];
    let r = cli(&[&base[..], &["--mode", "sym", "--nmax", "6"]].concat());
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["mode"], "symmetrized");

    let r = cli(&[&base[..], &["--mode", "uniform", "--nmax", "7"]].concat());
    assert_eq!(r.code, EXIT_CAPACITY);
    assert_eq!(error_kind(&r), "capacity");
}

#[test]
fn sweep_formats() {
    let dir = TempDir::new().unwrap();
    let n = write_json(dir.path(), "n.json", &scaled_nilpotent(1.0));
    let r = cli(&["sweep", "--rho-from", "0.5", "--rho-to", "2", "--steps", "4", "--input", &n]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let lines: Vec<&str> = r.stdout.lines().collect();
    assert_eq!(lines[0], "rho,w_lo,w_hi");
    assert_eq!(lines.len(), 5);
    for line in &lines[1..] {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[1] - 1.0 / f[0]).abs() < 1e-4);
    }
    let r = cli(&["sweep", "--rho-from", "1", "--rho-to", "2", "--steps", "2", "--input", &n, "--format", "json"]);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    let r = cli(&["sweep", "--rho-from", "1", "--rho-to", "2", "--steps", "1", "--input", &n]);
    assert_eq!(r.code, EXIT_INPUT);
}

#[test]
fn bad_input_exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"rows":2,"cols":2,"data":[[1,0]]}"#).unwrap();
    let r = cli(&["radius", "--rho", "1", "--input", bad.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_INPUT);
    assert_eq!(error_kind(&r), "input");

    let r = cli(&["radius", "--rho", "1", "--input", "missing.json", "--frobnicate"]);
    assert_eq!(r.code, EXIT_INPUT);
    assert_eq!(error_kind(&r), "usage");

    let r = cli(&["repro", "--name", "thm51", "--rho", "2", "--eps", "0.5"]);
    assert_eq!(r.code, EXIT_INPUT);
    assert_eq!(error_kind(&r), "parameter");

    let r = cli(&["repro", "--name", "thm53", "--trials", "3"]);
    assert_eq!(r.code, EXIT_INPUT);

    let r = cli(&["repro", "--name", "no-such-thing"]);
    assert_eq!(r.code, EXIT_INPUT);
}

#[test]
fn help_goes_to_stdout() {
    let r = cli(&["--help"]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.stdout.contains("membership"));
    assert!(r.stderr.is_empty());
}

#[test]
fn binary_honours_thread_variable() {
    let exe = env!("CARGO_BIN_EXE_rho-radii");
    let args = ["repro", "--name", "radius-properties", "--seeds", "1", "--dims", "2", "--rhos", "1,2"];
    let one = Command::new(exe).args(args).env("RHO_RADII_THREADS", "1").output().unwrap();
    let two = Command::new(exe).args(args).env("RHO_RADII_THREADS", "2").output().unwrap();
    assert_eq!(one.status.code(), Some(0), "{}", String::from_utf8_lossy(&one.stderr));
    let mut a: Value = serde_json::from_slice(&one.stdout).unwrap();
    let mut b: Value = serde_json::from_slice(&two.stdout).unwrap();
    strip_timing(&mut a);
    strip_timing(&mut b);
    assert_eq!(a, b);

    let bad = Command::new(exe).args(args).env("RHO_RADII_THREADS", "many").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
