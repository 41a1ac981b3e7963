use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pdelta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdelta")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn check_twice_gives_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"kind": "check-constitutive", "domain": {"kind": "unit_disk"}, "p": 1.5, "samples": 2000}"#);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = pdelta(&["check", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "42"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
    }
    assert_eq!(fs::read(a.join("ratios.csv")).unwrap(), fs::read(b.join("ratios.csv")).unwrap());
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad_p = write(tmp.path(), "p.json", r#"{"kind": "solve", "domain": {"kind": "unit_disk"}, "p": 2.5}"#);
    let o = pdelta(&["solve", "--config", &bad_p]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(err["message"].as_str().unwrap().contains("p out of (1,2]"));

    let typo = write(tmp.path(), "t.json", r#"{"kind": "solve", "domain": {"kind": "unit_disk"}, "p": 1.5, "pp": 1}"#);
    assert_eq!(pdelta(&["solve", "--config", &typo]).status.code(), Some(2));

    let good = write(tmp.path(), "g.json", r#"{"kind": "solve", "domain": {"kind": "unit_disk"}, "p": 1.5}"#);
    assert_eq!(pdelta(&["regularity", "--config", &good]).status.code(), Some(2));
    assert_eq!(pdelta(&["solve", "--config", &good, "--level", "11"]).status.code(), Some(2));
}

#[test]
fn regularity_on_square_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "r.json", r#"{"kind": "regularity", "domain": {"kind": "unit_square"}, "p": 1.5}"#);
    let out = tmp.path().join("out");
    let o = pdelta(&["regularity", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(out.join("error.json").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn solve_and_converge_write_their_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let solve = write(tmp.path(), "s.json", r#"{"kind": "solve", "domain": {"kind": "unit_disk"}, "p": 1.7, "levels": [1, 2, 3]}"#);
    let out = tmp.path().join("s");
    let o = pdelta(&["solve", "--config", &solve, "--out", out.to_str().unwrap(), "--level", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["levels"], serde_json::json!([0, 1, 2]));
    let csv = fs::read_to_string(out.join("solution.csv")).unwrap();
    assert!(csv.starts_with("# config_hash="));

    let conv = write(
        tmp.path(),
        "v.json",
        r#"{"kind": "converge", "domain": {"kind": "unit_square"}, "p": 1.5, "source": {"manufactured": "sine_bubble"}, "levels": [1, 2, 3]}"#,
    );
    let out = tmp.path().join("v");
    let o = pdelta(&["converge", "--config", &conv, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(fs::read_to_string(out.join("convergence.csv")).unwrap().lines().count(), 5);
}

#[test]
fn mesh_export_and_reimport_are_bit_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a.txt"), tmp.path().join("b.txt"));
    let o = pdelta(&["mesh", "--domain", r#"{"kind": "annulus", "r_in": 0.3, "r_out": 1.0}"#, "--level", "2", "--out", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = pdelta(&["mesh", "--input", a.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(fs::read_to_string(&a).unwrap().starts_with("NODES "));
}
