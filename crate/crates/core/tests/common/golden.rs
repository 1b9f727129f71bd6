//! Runs the `bvp` binary on the shipped scenarios and compares the outputs
//! with the files under `tests/golden`. Set `BVP_UPDATE_GOLDEN=1` to
//! regenerate them.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

pub const REL_TOL: f64 = 1e-9;
pub const ABS_TOL: f64 = 1e-12;

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn scenario_path(name: &str) -> PathBuf {
    manifest_dir().join("scenarios").join(format!("{name}.json"))
}

/// `(scenario, command)` pairs with golden outputs.
pub fn golden_runs() -> Vec<(&'static str, &'static str)> {
    let mut runs = Vec::new();
    for s in ["dirichlet_sin", "oscillator", "periodic", "resonant", "system_multipoint"] {
        runs.push((s, "solve"));
    }
    runs.push(("dirichlet_sin", "norms"));
    for s in [
        "family_rhs",
        "family_coefficient",
        "family_boundary",
        "family_violates_0",
        "family_violates_I",
        "family_violates_II",
    ] {
        runs.push((s, "check"));
        runs.push((s, "analyze"));
    }
    runs
}

pub struct Run {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn bvp(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_bvp"))
        .args(args)
        .env("BVP_LOG_LEVEL", "error")
        .output()
        .expect("bvp binary runs");
    Run {
        status: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

/// Runs `command` on `scenario` into `out` and returns the written files,
/// sorted by name.
pub fn run_into(scenario: &str, command: &str, out: &Path) -> Vec<PathBuf> {
    let path = scenario_path(scenario);
    let run = bvp(&[command, "--scenario", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(run.status, 0, "{scenario} {command}: {}", run.stderr);
    let mut files: Vec<PathBuf> = run.stdout.lines().map(PathBuf::from).collect();
    files.sort();
    files
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= ABS_TOL + REL_TOL * a.abs().max(b.abs())
}

fn compare_json(path: &str, a: &Value, b: &Value, diffs: &mut Vec<String>) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            if !close(x, y) {
                diffs.push(format!("{path}: {x:e} vs {y:e}"));
            }
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            for (i, (u, v)) in x.iter().zip(y).enumerate() {
                compare_json(&format!("{path}[{i}]"), u, v, diffs);
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            let kx: Vec<_> = x.keys().collect();
            let ky: Vec<_> = y.keys().collect();
            if kx != ky {
                diffs.push(format!("{path}: keys {kx:?} vs {ky:?}"));
                return;
            }
            for (k, u) in x {
                compare_json(&format!("{path}.{k}"), u, &y[k], diffs);
            }
        }
        _ if a == b => {}
        _ => diffs.push(format!("{path}: {a} vs {b}")),
    }
}

fn compare_csv(actual: &str, expected: &str, diffs: &mut Vec<String>) {
    let (mut la, mut le) = (actual.lines(), expected.lines());
    let (ha, he) = (la.next(), le.next());
    if ha != he {
        diffs.push(format!("header {ha:?} vs {he:?}"));
        return;
    }
    let (ra, re): (Vec<_>, Vec<_>) = (la.collect(), le.collect());
    if ra.len() != re.len() {
        diffs.push(format!("{} rows vs {}", ra.len(), re.len()));
        return;
    }
    for (i, (x, y)) in ra.iter().zip(&re).enumerate() {
        let (cx, cy): (Vec<_>, Vec<_>) = (x.split(',').collect(), y.split(',').collect());
        if cx.len() != cy.len() {
            diffs.push(format!("row {i}: {} cells vs {}", cx.len(), cy.len()));
            continue;
        }
        for (j, (u, v)) in cx.iter().zip(&cy).enumerate() {
            let same = match (u.parse::<f64>(), v.parse::<f64>()) {
                (Ok(p), Ok(q)) => close(p, q),
                _ => u == v,
            };
            if !same {
                diffs.push(format!("row {i} col {j}: {u} vs {v}"));
            }
        }
    }
}

/// Differences between an output file and its golden counterpart; empty
/// when they agree.
pub fn compare_file(actual: &Path, expected: &Path) -> Vec<String> {
    let a = fs::read_to_string(actual).unwrap();
    let e = match fs::read_to_string(expected) {
        Ok(e) => e,
        Err(_) => return vec![format!("missing golden file {}", expected.display())],
    };
    let mut diffs = Vec::new();
    if actual.extension().is_some_and(|x| x == "csv") {
        compare_csv(&a, &e, &mut diffs);
    } else {
        let (va, ve): (Value, Value) = (serde_json::from_str(&a).unwrap(), serde_json::from_str(&e).unwrap());
        compare_json("$", &va, &ve, &mut diffs);
    }
    diffs
}

pub fn golden_dir(scenario: &str, command: &str) -> PathBuf {
    manifest_dir().join("tests").join("golden").join(scenario).join(command)
}

pub fn updating() -> bool {
    std::env::var("BVP_UPDATE_GOLDEN").is_ok_and(|v| v == "1")
}

/// Runs every golden pair twice. Returns, per pair, the differences against
/// the golden files and whether the two runs were byte-identical.
pub fn check_all() -> Vec<(String, Vec<String>, bool)> {
    let mut out = Vec::new();
    for (scenario, command) in golden_runs() {
        let first = tempfile::tempdir().unwrap();
        let second = tempfile::tempdir().unwrap();
        let files = run_into(scenario, command, first.path());
        let again = run_into(scenario, command, second.path());
        let mut identical = files.len() == again.len();
        let mut diffs = Vec::new();
        let dir = golden_dir(scenario, command);
        if updating() {
            fs::create_dir_all(&dir).unwrap();
        }
        for (f, g) in files.iter().zip(&again) {
            identical &= fs::read(f).unwrap() == fs::read(g).unwrap();
            let name = f.file_name().unwrap();
            if updating() {
                fs::copy(f, dir.join(name)).unwrap();
            }
            diffs.extend(compare_file(f, &dir.join(name)).into_iter().map(|d| format!("{}: {d}", name.to_string_lossy())));
        }
        out.push((format!("{scenario} {command}"), diffs, identical));
    }
    out
}
