use std::fs;
use std::path::Path;
use std::process::Command;

use fockopa_cli::{run, EXIT_OK, EXIT_STAGE, EXIT_USAGE};

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["fockopa"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn decay_csv_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let (code, _, err) = invoke(&["opa", "--poly", "1 - x1*x2", "--nmax", "8", "--out", &path(dir.path())]);
        assert_eq!(code, EXIT_OK, "{err}");
    }
    let csv_a = fs::read(a.path().join("decay.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.path().join("decay.csv")).unwrap());
    assert!(a.path().join("decay.svg").exists());
    let text = String::from_utf8(csv_a).unwrap();
    assert_eq!(text.lines().count(), 1 + 9);
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_fockopa");
    let dir = tempfile::tempdir().unwrap();
    let ok = Command::new(exe)
        .args(["opa", "--poly", "1 - x1", "--nmax", "6", "--out", &path(dir.path())])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("verdict: cyclic"));
    let bad = Command::new(exe).args(["opa", "--poly", "1 - x1 +"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_USAGE));
    let missing = Command::new(exe).args(["opa"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(EXIT_USAGE));
}

#[test]
fn usage_errors() {
    assert_eq!(invoke(&["opa", "--poly", "1 - x1", "--window", "9:4"]).0, EXIT_USAGE);
    assert_eq!(invoke(&["opa", "--poly", "1 - x1", "--nmax", "1"]).0, EXIT_USAGE);
    assert_eq!(invoke(&["frobnicate"]).0, EXIT_USAGE);
    let (code, _, err) = invoke(&["specrad", "--random", "2,2"]);
    assert_eq!(code, EXIT_USAGE, "{err}");
}

#[test]
fn capacity_failure_is_a_stage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = invoke(&[
        "opa", "--poly", "1 - x1*x2", "--nmax", "12", "--capacity", "100", "--out", &path(dir.path()),
    ]);
    assert_eq!(code, EXIT_STAGE, "{err}");
    assert!(err.to_lowercase().contains("capacity"), "{err}");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.json");
    fs::write(
        &cfg,
        format!(r#"{{"poly": "1 - x1", "n_max": 6, "window": "3:6", "out": "{}"}}"#, path(dir.path())),
    )
    .unwrap();
    let (code, out, err) = invoke(&["opa", "--config", &path(&cfg)]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("[3, 6]") || out.contains("3:6"), "{out}");
    let rows = fs::read_to_string(dir.path().join("decay.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 7);

    let (code, _, err) = invoke(&["opa", "--config", &path(&cfg), "--nmax", "9", "--window", "4:9"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let rows = fs::read_to_string(dir.path().join("decay.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 10);

    fs::write(&cfg, r#"{"poly": "1 - x1", "nmax": 6}"#).unwrap();
    assert_eq!(invoke(&["opa", "--config", &path(&cfg)]).0, EXIT_USAGE);
}

#[test]
fn polynomial_from_text_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.txt");
    fs::write(&f, "1 - 2 x1\n").unwrap();
    let (code, out, err) = invoke(&["opa", "--file", &path(&f), "--nmax", "8", "--out", &path(dir.path())]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("not cyclic"), "{out}");
}

#[test]
fn specrad_of_nilpotent_tuple() {
    let dir = tempfile::tempdir().unwrap();
    let tuple = r#"{"matrices": [[[0, 1], [0, 0]], [[0, 2], [0, 0]]]}"#;
    let (code, out, err) = invoke(&["specrad", "--tuple", tuple, "--out", &path(dir.path())]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("nilpotent"), "{out}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("specrad.json")).unwrap()).unwrap();
    assert_eq!(report["radius"].as_f64(), Some(0.0), "{report}");
}

#[test]
fn seeded_random_specrad_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let (code, _, err) = invoke(&["specrad", "--random", "3,2", "--seed", "11", "--out", &path(dir.path())]);
        assert_eq!(code, EXIT_OK, "{err}");
    }
    assert_eq!(
        fs::read(a.path().join("specrad.json")).unwrap(),
        fs::read(b.path().join("specrad.json")).unwrap()
    );
}

#[test]
fn pipeline_on_a_pencil() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = invoke(&[
        "pipeline", "--poly", "1 - 1/2 x1 - 1/2 x2", "--nmax", "6", "--sigma-n", "1", "--out", &path(dir.path()),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("blocks: 1"), "{out}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("pipeline.json")).unwrap()).unwrap();
    assert_eq!(report["pencil_size"].as_u64(), Some(1));
    assert_eq!(report["ok"].as_bool(), Some(true));
}

#[test]
fn linearize_writes_pencil_and_witness() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = invoke(&[
        "linearize", "--poly", "1 - x1*x2*x1", "--samples", "20", "--seed", "3", "--out", &path(dir.path()),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(dir.path().join("pencil.json").exists());
    assert!(dir.path().join("witness.json").exists());
    assert_eq!(invoke(&["linearize", "--poly", "1 - x1*x2", "--samples", "5"]).0, EXIT_USAGE);
}

#[test]
fn sigma_bounds_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = invoke(&[
        "sigma-bounds", "--poly", "(1 - x1)*(1 - x2)", "--sigma-n", "1,2", "--out", &path(dir.path()),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sigma.json")).unwrap()).unwrap();
    assert!(doc.to_string().contains("k_constant"), "{doc}");
}
