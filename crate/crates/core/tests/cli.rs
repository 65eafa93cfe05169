use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_orthotropic"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn exponents_reports_lambda() {
    let o = run(&["exponents", "--p", "2.5,2.5,2.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("λ = 4 "), "{}", stdout(&o));
}

#[test]
fn exponents_rejects_bad_entry_by_position() {
    let o = run(&["exponents", "--p", "0.5,2"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("entry 1") && err.contains("0.5"), "{err}");
}

#[test]
fn exponents_embedding_verdict() {
    let o = run(&["exponents", "--p", "2,2,3", "--sigma", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("q^1 ≥ p_N") && out.contains("verdict: true"), "{out}");
    // unsorted input is sorted before the recursion
    let o = run(&["exponents", "--p", "3,2,2", "--sigma", "2"]);
    assert!(stdout(&o).contains("verdict: true"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["exponents"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let o = run(&["simulate", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cannot read"));
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("zero_datum.toml"))
        .unwrap()
        .replace("r0 = 0.1", "r0 = 0.1\nwidth = 2");
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, text).unwrap();
    let o = run(&["simulate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("width"), "{}", stderr(&o));
}

#[test]
fn selfsim_reference_case() {
    let o = run(&["selfsim", "--p", "3", "--beta", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("a = 0.0625, b = 1, δ = 0.046875"), "{out}");
    assert!(out.contains("all checks: PASS"));
}

#[test]
fn selfsim_regime_error() {
    let o = run(&["selfsim", "--p", "2", "--beta", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("p = 2 must exceed 2"));
}

#[test]
fn selfsim_long_extension_keeps_energy_growing() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "selfsim",
        "--p",
        "3",
        "--beta",
        "1",
        "--smax",
        "10",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS energy identity and growth"));
    let csv = std::fs::read_to_string(dir.path().join("selfsim_trajectory.csv")).unwrap();
    assert!(csv.starts_with("s,U,V,E\n"));
}

#[test]
fn sobolev_without_trials() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "verify-sobolev",
        "--p",
        "1.5,2.5",
        "--trials",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("no samples"));
    let csv = std::fs::read_to_string(dir.path().join("sobolev_ratios.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("trial,seed,"));
}

#[test]
fn sobolev_small_run_has_no_violations() {
    let o = run(&["verify-sobolev", "--p", "1.5,2.5", "--trials", "50", "--cells", "32"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("violations: 0"));
}

#[test]
fn simulate_zero_datum_is_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate",
        fixture("zero_datum.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("trivial run"));
    let csv = std::fs::read_to_string(dir.path().join("zero_datum_series.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,mass,l1,l2,linf,R_1"));
    for line in lines {
        assert!(line.split(',').skip(1).all(|v| v.parse::<f64>().unwrap() == 0.0), "{line}");
    }
}

#[test]
fn simulate_boundary_hit_is_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate",
        fixture("boundary_hit.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("aborted at t = "), "{err}");
}

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn simulate_is_reproducible_byte_for_byte() {
    for name in ["small_2d.toml", "small_3d.toml"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        for d in [&a, &b] {
            let o = run(&[
                "--no-timestamp",
                "simulate",
                fixture(name).to_str().unwrap(),
                "--out",
                d.path().to_str().unwrap(),
            ]);
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        }
        let (fa, fb) = (files_in(a.path()), files_in(b.path()));
        assert!(fa.len() >= 3, "{name}: {:?}", fa.iter().map(|f| &f.0).collect::<Vec<_>>());
        assert_eq!(fa, fb, "{name}");
    }
}

#[test]
fn timestamp_line_is_the_only_difference() {
    let with = stdout(&run(&["exponents", "--p", "2.2,2.5,2.8"]));
    let without = stdout(&run(&["--no-timestamp", "exponents", "--p", "2.2,2.5,2.8"]));
    let stripped: Vec<&str> = with.lines().filter(|l| !l.starts_with("# generated")).collect();
    assert_eq!(stripped, without.lines().collect::<Vec<_>>());
    assert_ne!(with, without);
}

#[test]
fn simulate_writes_requested_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "--no-timestamp",
        "simulate",
        fixture("small_3d.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--svg",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let names: Vec<String> = files_in(dir.path()).into_iter().map(|f| f.0).collect();
    for expected in [
        "small_3d_series.csv",
        "small_3d_snap000.bin",
        "small_3d_snap000.txt",
        "small_3d_radii.svg",
        "simulate_report.txt",
    ] {
        assert!(names.iter().any(|n| n == expected), "{expected} missing from {names:?}");
    }
}

#[test]
fn report_passes() {
    let o = run(&["--no-timestamp", "report"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("overall: PASS"));
    assert!(!stdout(&o).contains("FAIL"));
}
