use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const MODEL: &str = r#"
seed = 7

[[experiment]]
id = "model"
kind = "model"
criterion = 1
tol = 1e-10
ratio_tol = 1e-6
params = [{ alpha1 = 0.5, alpha2 = 1.0, a21 = 0.3 }]
"#;

fn rbp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbp")).args(args).output().expect("rbp runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn list_criteria_names_all_ten() {
    let out = rbp(&["list-criteria"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for c in 1..=10 {
        assert!(text.contains(&format!("{c:>2}")), "missing criterion {c}:\n{text}");
    }
    assert!(text.contains("c10-determinism.toml"));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["suite.toml", "all.toml"] {
        let p = dir.join(name);
        let out = rbp(&["validate", "--config", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn empty_grid_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = MODEL.replace("params = [{ alpha1 = 0.5, alpha2 = 1.0, a21 = 0.3 }]", "params = []");
    let p = write(tmp.path(), "empty.toml", &text);
    let out = rbp(&["validate", "--config", &p]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("empty.toml:"), "{err}");
}

#[test]
fn missing_seed_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write(tmp.path(), "noseed.toml", &MODEL.replace("seed = 7", ""));
    let out_dir = tmp.path().join("out");
    let out = rbp(&["run", "--config", &p, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_criterion_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    // no error lies below a negative tolerance
    let p = write(tmp.path(), "strict.toml", &MODEL.replace("ratio_tol = 1e-6", "ratio_tol = -1.0"));
    let out_dir = tmp.path().join("out");
    let out = rbp(&["run", "--config", &p, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_writes_identical_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write(tmp.path(), "model.toml", MODEL);
    let mut csvs = Vec::new();
    for (i, threads) in ["1", "2"].iter().enumerate() {
        let out_dir = tmp.path().join(format!("out{i}"));
        let out = rbp(&["run", "--config", &p, "--out", out_dir.to_str().unwrap(), "--threads", threads]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8(out.stdout).unwrap().contains("criterion  1: PASS"));
        csvs.push(fs::read(out_dir.join("report.csv")).unwrap());
        let summary: serde_json::Value =
            serde_json::from_slice(&fs::read(out_dir.join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["failed"], 0);
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn csv_format_skips_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write(tmp.path(), "model.toml", MODEL);
    let out_dir = tmp.path().join("out");
    let out = rbp(&["run", "--config", &p, "--out", out_dir.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out_dir.join("report.csv").exists());
    assert!(!out_dir.join("summary.json").exists());
}
