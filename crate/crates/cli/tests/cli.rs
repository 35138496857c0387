use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mflq_cli::{EXAMPLE_ALM, EXAMPLE_LIFTED};
use mflq_core::io::{multinoise_to_json, parse_alm, parse_problem, problem_to_json, AnyProblem};
use mflq_core::{lift_to_multinoise, AlmProblem, BaseProblem, Matrix, ProblemSpec, ScalarNoise};
use serde_json::Value;
use tempfile::TempDir;

fn mflq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mflq")).args(args).output().expect("binary runs")
}

fn mflq_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mflq"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn small_problem() -> ProblemSpec {
    let mut base = BaseProblem::zeros(2, 1, 1);
    for k in 0..2 {
        base.a[k] = Matrix::from_element(1, 1, 1.0);
        base.b[k] = Matrix::from_element(1, 1, 0.5);
        base.f[k] = Matrix::from_element(1, 1, 0.9);
        base.r[k] = Matrix::from_element(1, 1, 1.0);
    }
    base.q[2] = Matrix::from_element(1, 1, 1.0);
    let mut noise = ScalarNoise::zeros(2, 1, 1);
    noise.c[0] = Matrix::from_element(1, 1, 0.2);
    noise.g[1] = Matrix::from_element(1, 1, 0.3);
    noise.rho = 0.5;
    ProblemSpec::new(base, noise).unwrap()
}

#[test]
fn bundled_data_matches_the_example() {
    let alm = parse_alm(EXAMPLE_ALM).unwrap();
    assert_eq!(alm, AlmProblem::three_period_example());
    let AnyProblem::Multi(lifted) = parse_problem(EXAMPLE_LIFTED).unwrap().value else {
        panic!("lifted file should use the vector-noise schema");
    };
    assert_eq!(lifted, lift_to_multinoise(&alm));
    assert_eq!(std::fs::read_to_string(data("three_period_alm.json")).unwrap(), EXAMPLE_ALM);
}

#[test]
fn example_is_deterministic() {
    let a = mflq(&["example"]);
    let b = mflq(&["example"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("0.125 E[zeta_x] - 0.216 E[zeta_y]"));
}

#[test]
fn solve_bundled_lifted_problem() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let o = mflq(&["solve", &data("three_period_alm_lifted.json"), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["input_sha256"].as_str().unwrap().len(), 64);
    let sx: Vec<f64> = (0..4).map(|k| r["riccati"]["Sx"][k][0][0].as_f64().unwrap()).collect();
    for (v, want) in sx.iter().zip([0.0133, 0.0540, 0.2260, 1.0]) {
        assert!((v - want).abs() < 1e-4);
    }
}

#[test]
fn solve_with_p_form() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", &problem_to_json(&small_problem()));
    let out = dir.path().join("r.json");
    let o = mflq(&["solve", s(&p), "--p-form", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&out);
    assert!(r["equivalence_residual"].as_f64().unwrap() < 1e-12);
    assert!(r["p_form"]["Lxo"].is_array());
    assert_eq!(r["gains"].as_array().unwrap().len(), 2);

    let m = write(&dir, "m.json", &multinoise_to_json(&small_problem().to_multinoise()));
    assert_eq!(mflq(&["solve", s(&m), "--p-form"]).status.code(), Some(2));
}

#[test]
fn malformed_json_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "bad.json", "{\n  \"horizon\": 2,\n  oops\n}");
    let o = mflq(&["solve", s(&p)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 3"), "{err}");
    assert_eq!(mflq(&["solve", "/nonexistent/problem.json"]).status.code(), Some(1));
    assert_eq!(mflq(&["solve"]).status.code(), Some(1));
}

#[test]
fn zero_control_weight_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let mut spec = small_problem();
    spec.base.r[1] = Matrix::zeros(1, 1);
    let p = write(&dir, "p.json", &problem_to_json(&spec));
    let out = dir.path().join("r.json");
    let o = mflq(&["solve", s(&p), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let r = report(&out);
    let v = &r["validation"]["violations"];
    assert!(v
        .as_array()
        .unwrap()
        .iter()
        .any(|x| x["condition"] == "R_positive" && x["k"] == 1));
}

#[test]
fn overflowing_dynamics_are_numerical_errors() {
    let dir = TempDir::new().unwrap();
    let mut spec = small_problem();
    for k in 0..2 {
        spec.base.a[k] = Matrix::from_element(1, 1, 1e200);
    }
    let p = write(&dir, "p.json", &problem_to_json(&spec));
    let o = mflq(&["simulate", s(&p), "--paths", "10", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", &problem_to_json(&small_problem()));
    let (a, b, c) = (dir.path().join("a.json"), dir.path().join("b.json"), dir.path().join("c.json"));
    let args = |out: &Path| vec!["simulate".to_string(), s(&p).into(), "--paths".into(), "5000".into(), "--seed".into(), "9".into(), "--out".into(), s(out).into()];
    let run = |out: &Path, threads: &str| {
        let a: Vec<String> = args(out);
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        mflq_env(&a, "MFLQ_THREADS", threads)
    };
    assert_eq!(run(&a, "1").status.code(), Some(0));
    assert_eq!(run(&b, "1").status.code(), Some(0));
    assert_eq!(run(&c, "3").status.code(), Some(0));
    let ra = std::fs::read(&a).unwrap();
    assert_eq!(ra, std::fs::read(&b).unwrap());
    assert_eq!(ra, std::fs::read(&c).unwrap());
    let r = report(&a);
    assert!(r["z_score"].as_f64().unwrap().abs() < 4.0);
    assert!(r.get("timings").is_none());
    assert_eq!(run(&a, "zero").status.code(), Some(2));
}

#[test]
fn simulate_argument_errors() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", &problem_to_json(&small_problem()));
    assert_eq!(mflq(&["simulate", s(&p), "--paths", "1", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(mflq(&["simulate", s(&p), "--paths", "10", "--ci"]).status.code(), Some(2));
    let o = mflq(&["simulate", s(&p), "--paths", "10", "--sampler", "rademacher", "--population-coupling", "--timings"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn alm_bundled_file() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let o = mflq(&["alm", &data("three_period_alm.json"), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&out);
    let ox2: Vec<f64> = r["riccati"]["gains"][2]["ox"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for (v, want) in ox2.iter().zip([-0.0300, -0.0429, -0.0730]) {
        assert!((v - want).abs() < 1e-4);
    }
    assert!((r["optimal_value"].as_f64().unwrap() - 0.0530).abs() < 1e-4);
}

#[test]
fn alm_zero_terminal_weight() {
    let dir = TempDir::new().unwrap();
    let mut alm = AlmProblem::three_period_example();
    alm.q_n = 0.0;
    alm.q_bar_n = 0.0;
    let p = write(&dir, "alm.json", &mflq_core::io::alm_to_json(&alm));
    let out = dir.path().join("r.json");
    assert_eq!(mflq(&["alm", s(&p), "--out", s(&out)]).status.code(), Some(0));
    let r = report(&out);
    for g in r["riccati"]["gains"].as_array().unwrap() {
        for key in ["ox", "ox_bar", "oy", "oy_bar"] {
            assert!(g[key].as_array().unwrap().iter().all(|v| v.as_f64() == Some(0.0)));
        }
    }
}

#[test]
fn alm_from_constant_returns() {
    let dir = TempDir::new().unwrap();
    let csv = write(&dir, "r.csv", "excess\n0.05\n0.05\n0.05\n0.05\n0.05\n0.05\n");
    let out = dir.path().join("r.json");
    let o = mflq(&["alm", "--returns", s(&csv), "--horizon", "3", "--moments", "per-step", "--q-bar-n", "-0.5", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["source"], "returns");
    assert_eq!(r["estimated_moments"]["cov_excess"][0][0][0].as_f64(), Some(0.0));
    assert!((r["estimated_moments"]["mean_excess"][2][0].as_f64().unwrap() - 0.05).abs() < 1e-15);

    let bad = write(&dir, "bad.csv", "0.1,0.2\n0.1,x\n");
    assert_eq!(mflq(&["alm", "--returns", s(&bad)]).status.code(), Some(1));
}

#[test]
fn verify_empty_and_injected_failure() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let o = mflq(&["verify", "--instances", "0", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(&out)["failures"].as_array().unwrap().len(), 0);

    let o = mflq(&["verify", "--instances", "5", "--seed", "3", "--pxy-boundary", "neg-q", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(4));
    let r = report(&out);
    let failures = r["failures"].as_array().unwrap();
    assert!(!failures.is_empty());
    assert!(failures.iter().all(|f| f["check"] == "equivalence"));
    // the serialized instance replays through the solver
    let replay = serde_json::to_string(&failures[0]["replay"]).unwrap();
    assert!(parse_problem(&replay).is_ok());

    assert_eq!(mflq(&["verify", "--max-dims", "4,4,8"]).status.code(), Some(2));
}

#[test]
fn verify_default_battery_passes() {
    let o = mflq(&["verify", "--instances", "20", "--seed", "11"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}
