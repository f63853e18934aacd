use std::path::Path;
use std::process::{Command, Output};

const SINE5: &str = r#"{"family":"sine","L":5.0,"sigma":0.45}"#;

fn run(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_circle-rds"));
    cmd.args(args).env_remove("CIRCLE_RDS_OUT");
    if let Some(dir) = env_out {
        cmd.env("CIRCLE_RDS_OUT", dir);
    }
    cmd.output().unwrap()
}

fn diagnostic(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("diagnostic on stderr");
    serde_json::from_str(line).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn certify_nine_passes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out =
        run(&["certify", "--out", d, "--map", r#"{"family":"sine","L":9.0}"#, "--sigma", "0.4", "--R", "3"], None);
    assert_eq!(out.status.code(), Some(0));
    let rep = json(&dir.path().join("report.json"));
    assert_eq!(rep["pass"], true);
    assert!(rep["V"].as_f64().unwrap() > 0.0);
    let cert = json(&dir.path().join("sine_certificate.json"));
    assert_eq!(cert["closed_form_pass"], true);
    assert_eq!(cert["agree"], true);
    assert!(dir.path().join("certify.meta.json").exists());
}

#[test]
fn small_noise_is_reported_as_a_failed_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(&["certify", "--out", d, "--map", SINE5, "--sigma", "0.2", "--R", "3"], None);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&dir.path().join("report.json"))["pass"], false);
}

#[test]
fn overlapping_arcs_exit_two_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out =
        run(&["horseshoe", "--out", d, "--map", SINE5, "--I0", "0.1,0.3", "--I1", "0.2,0.4", "--seeds", "0..2"], None);
    assert_eq!(out.status.code(), Some(2));
    let diag = diagnostic(&out);
    assert_eq!(diag["status"], "error");
    assert_eq!(diag["exit_code"], 2);
}

#[test]
fn malformed_input_exits_two() {
    assert_eq!(run(&["frobnicate"], None).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--map", r#"{"family":"cubic"}"#], None).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--map", SINE5, "--sigma", "0.7"], None).status.code(), Some(2));
    assert_eq!(run(&["certify", "--map", SINE5, "--R", "1.5"], None).status.code(), Some(2));
    let missing = run(&["replay", "/nonexistent/simulate.meta.json"], None);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(diagnostic(&missing)["exit_code"], 2);
}

#[test]
fn horizon_too_short_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(
        &[
            "horseshoe",
            "--out",
            d,
            "--map",
            SINE5,
            "--I0",
            "0.1,0.1001",
            "--I1",
            "0.6,0.6001",
            "--seeds",
            "0",
            "--kappa",
            "1.3",
            "--n-max",
            "1",
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(diagnostic(&out)["kind"], "Timeout");
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let d = dir.path().to_str().unwrap();
        let out = run(&["simulate", "--out", d, "--map", SINE5, "--seed", "9", "--n", "500", "--emit-plots"], None);
        assert_eq!(out.status.code(), Some(0));
    }
    for name in ["orbit.csv", "orbit.dat", "simulate.meta.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name}");
    }
    let csv = std::fs::read_to_string(a.path().join("orbit.csv")).unwrap();
    assert_eq!(csv.lines().count(), 502);
}

#[test]
fn output_directory_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--map", SINE5, "--n", "10"], Some(dir.path()));
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("orbit.csv").exists());
    let status: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(status["status"], "ok");
}

#[test]
fn replay_reproduces_lyapunov_with_more_threads() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let da = a.path().to_str().unwrap();
    let out = run(&["lyapunov", "--out", da, "--threads", "1", "--map", SINE5, "--seeds", "0..8", "--n", "2000"], None);
    assert_eq!(out.status.code(), Some(0));
    let side = a.path().join("lyapunov.meta.json");
    let out = run(&["replay", "--out", b.path().to_str().unwrap(), "--threads", "3", side.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    for name in ["lyapunov.csv", "lyapunov.json"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
    }
}
