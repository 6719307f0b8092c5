use std::path::Path;
use std::process::Command;

fn lab(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_sle-gff-lab")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn tmp(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("sle-gff-lab-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn passing_suite_exits_zero_with_json() {
    let (code, out, _) = lab(&["verify", "pfident-exponents"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["pass"], true);
    for c in v["checks"].as_array().unwrap() {
        assert!(c["residual"].as_f64().unwrap() < 1e-12);
        for key in ["name", "lhs", "rhs", "tolerance", "pass"] {
            assert!(c.get(key).is_some());
        }
    }
}

#[test]
fn fixed_grid_with_seed_and_manifest() {
    let dir = tmp("det");
    let d = dir.to_str().unwrap();
    let (code, _, _) = lab(&["verify", "det-factorization", "--grid", "12x12", "--seed", "7", "--out", d]);
    assert_eq!(code, 0);
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 7);
    assert_eq!(m["config"]["grid"], "12x12");
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert!(dir.join("report.json").exists());
}

#[test]
fn failing_suite_exits_one() {
    let (code, out, _) = lab(&["verify", "semicircle"]);
    assert_eq!(code, 1);
    assert!(out.contains("\"pass\": false"));
}

#[test]
fn usage_errors_exit_two() {
    let (code, _, err) = lab(&["verify", "unknown-name"]);
    assert_eq!(code, 2);
    assert!(err.contains("usage"));
    assert_eq!(lab(&["verify", "temperley", "--no-such-key", "1"]).0, 2);
    assert_eq!(lab(&["verify", "temperley", "--seed", "abc"]).0, 2);
    assert_eq!(lab(&["experiment", "nope"]).0, 2);
    assert_eq!(lab(&["frobnicate"]).0, 2);
    assert_eq!(lab(&[]).0, 2);
}

#[test]
fn config_file_is_read() {
    let dir = tmp("cfg");
    std::fs::create_dir_all(&dir).unwrap();
    let f = dir.join("c.json");
    std::fs::write(&f, r#"{"instances": 2, "size": 8}"#).unwrap();
    let (code, out, _) = lab(&["verify", "fredholm-symmetry", "--config", f.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["checks"].as_array().unwrap().len(), 2);
    std::fs::write(&f, "{not json").unwrap();
    assert_eq!(lab(&["verify", "fredholm-symmetry", "--config", f.to_str().unwrap()]).0, 2);
}

fn read_all(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<_> = std::fs::read_dir(dir.join("drivers"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
        .iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(p).unwrap()))
        .collect()
}

#[test]
fn run_sle_writes_drivers_and_replays() {
    let a = tmp("sle-a");
    let b = tmp("sle-b");
    for dir in [&a, &b] {
        let (code, _, _) = lab(&[
            "experiment", "run-sle", "--kappa", "4", "--T", "1", "--paths", "100", "--seed", "5", "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    let fa = read_all(&a);
    assert_eq!(fa.len(), 100);
    assert_eq!(fa, read_all(&b));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["streams"], 100);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 101);
}
