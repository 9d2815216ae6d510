use std::path::{Path, PathBuf};
use std::process::Command;

use polarsym_core::io::{parse_gf1, read_gf1};
use polarsym_core::rearrange::schwarz_symmetrize;
use serde_json::Value;

fn polarsym(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_polarsym"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const BUMPS: &str = "GF1 dim=1 M=7 L=3.5\n0 1 0 0 1 0 0\n";
const RADIAL: &str = "GF1 dim=1 M=7 L=3.5\n0 1 3 5 3 1 0\n";

const PRESET: &str = r#"
[grid]
dim = 1
cells = 101
extent = 12.0

[problem]
p = 2.0
integrands = ["power:p=2"]
coupling = "powerpair:m=1,p=2,sigma=1,beta=0,tau=0,mu=1"
constraints = ["power:p=2,c=1"]

[flow]
max_iters = 400
jitter = 0.05
"#;

#[test]
fn symmetrize_delegates_to_core() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "u.gf1", BUMPS);
    let (code, stdout, _) = polarsym(dir.path(), &["symmetrize", "--input", "u.gf1", "--out", "s.gf1"]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("symmetrize:"));
    let expected = schwarz_symmetrize(&parse_gf1(BUMPS).unwrap());
    assert_eq!(read_gf1(dir.path().join("s.gf1")).unwrap(), expected);
}

#[test]
fn radial_input_passes_polya_szego_with_zero_residual() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "u.gf1", RADIAL);
    let args = ["verify", "polya-szego", "--input", "u.gf1", "--integrand", "power:p=2", "--report", "r.json"];
    let (code, _, _) = polarsym(dir.path(), &args);
    assert_eq!(code, 0);
    let r = json(&dir.path().join("r.json"));
    assert_eq!(r["result"]["residual"].as_f64(), Some(0.0));
    assert_eq!(r["result"]["pass"], Value::Bool(true));
}

#[test]
fn failing_verdict_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "u.gf1", BUMPS);
    let (code, stdout, _) = polarsym(dir.path(), &["verify", "polarization", "--input", "u.gf1", "--normal", "1"]);
    assert_eq!(code, 2, "{stdout}");
    assert!(stdout.contains("FAIL"));
}

#[test]
fn usage_and_input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.gf1", "GF1 dim=1 M=4 L=1\n0 0 0 0\n");
    write(dir.path(), "u.gf1", BUMPS);
    let cases: [&[&str]; 4] = [
        &["symmetrize", "--input", "u.gf1", "--out", "s.gf1", "--bogus"],
        &["frobnicate"],
        &["symmetrize", "--input", "bad.gf1", "--out", "s.gf1"],
        &["--budget-cells", "10", "iterate", "--input", "u.gf1", "--steps", "50"],
    ];
    let mut messages = Vec::new();
    for args in cases {
        let (code, _, stderr) = polarsym(dir.path(), args);
        assert_eq!(code, 1, "{args:?}: {stderr}");
        assert!(!stderr.trim().is_empty());
        messages.push(stderr);
    }
    assert!(messages[3].contains("budget"));
}

#[test]
fn divergent_regime_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PRESET
        .replace("sigma=1,beta=0,tau=0,mu=1", "sigma=5,beta=0,tau=0,mu=100")
        .replace("jitter = 0.05", "divergence_floor = -100.0");
    write(dir.path(), "d.toml", &cfg);
    let (code, stdout, _) = polarsym(dir.path(), &["minimize", "--config", "d.toml"]);
    assert_eq!(code, 3, "{stdout}");
}

#[test]
fn minimize_writes_one_file_per_component() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PRESET
        .replace("m=1,", "m=2,")
        .replace(r#"["power:p=2"]"#, r#"["power:p=2", "power:p=2"]"#)
        .replace(r#"["power:p=2,c=1"]"#, r#"["power:p=2,c=1", "power:p=2,c=1"]"#)
        .replace("max_iters = 400", "max_iters = 20");
    write(dir.path(), "two.toml", &cfg);
    let (code, stdout, stderr) = polarsym(dir.path(), &["minimize", "--config", "two.toml", "--out", "sol.gf1"]);
    assert!(code == 0 || code == 1, "{stdout}{stderr}");
    assert!(dir.path().join("sol_0.gf1").exists());
    assert!(dir.path().join("sol_1.gf1").exists());
}

fn replay_is_identical(dir: &Path, args: &[&str]) {
    let mut first: Vec<&str> = args.to_vec();
    first.extend(["--threads", "4", "--report", "a.json"]);
    let (code, _, stderr) = polarsym(dir, &first);
    assert!(dir.join("a.json").exists(), "{stderr}");
    let (replayed, _, stderr) = polarsym(dir, &["replay", "--manifest", "a.json", "--threads", "1", "--report", "b.json"]);
    assert_eq!(replayed, code, "{stderr}");
    let a = std::fs::read(dir.join("a.json")).unwrap();
    let b = std::fs::read(dir.join("b.json")).unwrap();
    assert!(a == b, "replay of {args:?} differs");
}

#[test]
fn replay_reproduces_reports_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "u.gf1", BUMPS);
    write(dir.path(), "p.toml", PRESET);
    replay_is_identical(dir.path(), &["--seed", "7", "iterate", "--input", "u.gf1", "--strategy", "random", "--steps", "6"]);
    replay_is_identical(dir.path(), &["--seed", "3", "audit", "integrand", "--integrand", "convex:p=3"]);
    replay_is_identical(dir.path(), &["--seed", "11", "minimize", "--config", "p.toml"]);
}

#[test]
fn timing_lives_outside_the_report() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "u.gf1", RADIAL);
    let args = ["decay", "--input", "u.gf1", "--report", "r.json", "--timing", "t.json"];
    assert_eq!(polarsym(dir.path(), &args).0, 0);
    let r = json(&dir.path().join("r.json"));
    assert!(!r["manifest"]["argv"].as_array().unwrap().iter().any(|a| a == "--timing"));
    assert!(json(&dir.path().join("t.json"))["wall_seconds"].as_f64().unwrap() >= 0.0);
}
