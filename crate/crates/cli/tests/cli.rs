use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_merorenorm")).args(args).output().expect("spawn merorenorm")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

#[test]
fn germ_examples() {
    let v = json(&run(&["germ", "1/(l1)"]));
    assert_eq!(v["singular"], serde_json::json!(["(1)/((l1))"]));
    assert_eq!(v["holomorphic"], "0");

    let v = json(&run(&["germ", "(l1+l2)/l1"]));
    assert_eq!(v["holomorphic"], "1");
    assert_eq!(v["singular"].as_array().unwrap().len(), 1);

    let v = json(&run(&["germ", "l1"]));
    assert_eq!(v["holomorphic"], "1*l1");
    assert!(v["singular"].as_array().unwrap().is_empty());
}

#[test]
fn renorm_boundary_value_of_even_bump() {
    let cfg = config("renorm_linear.toml");
    let v = json(&run(&["--config", cfg.to_str().unwrap(), "renorm"]));
    let (re, im) = (v["value"][0].as_f64().unwrap(), v["value"][1].as_f64().unwrap());
    // the principal value vanishes and phi(0) = 1
    assert!(re.abs() < 1e-8 && (im + std::f64::consts::PI).abs() < 1e-8, "{re} {im}");
}

#[test]
fn same_seed_gives_identical_bytes() {
    let cfg = config("qft_triangle.toml");
    let a = run(&["--config", cfg.to_str().unwrap(), "qft"]);
    let b = run(&["--config", cfg.to_str().unwrap(), "qft"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["--config", cfg.to_str().unwrap(), "--seed", "12", "qft"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn cache_is_transparent() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap();
    for name in ["renorm_linear.toml", "qft_pair_regularized.toml"] {
        let cfg = config(name);
        let cfg = cfg.to_str().unwrap();
        let cmd = if name.starts_with("renorm") { "renorm" } else { "qft" };
        let plain = run(&["--config", cfg, cmd]);
        let first = run(&["--config", cfg, "--cache-dir", cache, cmd]);
        let second = run(&["--config", cfg, "--cache-dir", cache, cmd]);
        assert!(plain.status.success());
        assert_eq!(plain.stdout, first.stdout, "{name}");
        assert_eq!(first.stdout, second.stdout, "{name}");
    }
    let entries = std::fs::read_dir(dir.path()).unwrap().filter_map(Result::ok).collect::<Vec<_>>();
    assert_eq!(entries.len(), 2);
    assert!(entries.iter().all(|e| e.file_name().to_string_lossy().ends_with(".json")));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("germ.json");
    let out = run(&["germ", "1/(l1*l2)", "--out", path.to_str().unwrap()]);
    assert!(out.status.success() && out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["holomorphic"], "0");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["check", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["germ", "1/(l1^2+l2^2)"]).status.code(), Some(2));
    assert_eq!(run(&["renorm"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[renorm]\ntargets = \"minus one\"\n").unwrap();
    assert_eq!(run(&["--config", bad.to_str().unwrap(), "renorm"]).status.code(), Some(2));
    std::fs::write(&bad, "unknown_section = 1\n").unwrap();
    assert_eq!(run(&["--config", bad.to_str().unwrap(), "germ", "l1"]).status.code(), Some(2));
}

#[test]
fn compute_errors_exit_with_one() {
    // on-cone exponents below the integrability threshold on the line
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("low.toml");
    std::fs::write(
        &cfg,
        r#"
[qft]
spacetime = 1
lambdas = [[0.4, 0.0], [0.4, 0.0]]
amplitude = { vertices = 3, edges = [{ i = 1, j = 2, mult = 1 }, { i = 2, j = 3, mult = 1 }] }
phi = { vertices = [
    { factors = [{ poly = [1.0], center = 0.0, half_width = 1.0 }] },
    { factors = [{ poly = [1.0], center = 0.0, half_width = 1.0 }] },
    { factors = [{ poly = [1.0], center = 0.0, half_width = 1.0 }] },
] }
"#,
    )
    .unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "qft"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn polar_batch_passes() {
    let cfg = config("polar.toml");
    let v = json(&run(&["--config", cfg.to_str().unwrap(), "polar"]));
    assert_eq!(v["admissible"], 2000);
    assert_eq!(v["nonzero_sum_failures"], 0);
}

#[test]
fn check_suites_pass() {
    for suite in ["germ", "synge", "feynman", "renorm", "polarization", "covariance", "holomorphy"] {
        let v = json(&run(&["check", suite]));
        assert_eq!(v["pass"], true, "{suite}: {v}");
    }
}
