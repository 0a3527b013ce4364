//! End-to-end CLI tests: exit codes, validation diagnostics, and
//! byte-determinism of the emitted artifacts.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pmclab"))
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("missing {name}: {e}"))
}

#[test]
fn list_scenarios_names_bundles() {
    let out = bin().arg("list-scenarios").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["nine_one_sphere", "nine_family", "gamma_one_atom", "checks_demo"] {
        assert!(text.contains(name), "missing {name} in:\n{text}");
    }
}

#[test]
fn run_one_sphere_scenario_passes_and_is_deterministic() {
    let dir1 = tempfile::tempdir().unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    for dir in [&dir1, &dir2] {
        let out = bin()
            .args(["run", "nine_one_sphere", "--out"])
            .arg(dir.path())
            .args(["--seed", "7"])
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "stdout: {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        );
    }
    // Identical scenario + seed => byte-identical artifacts.
    for name in ["report.json", "profile.csv", "field.csv"] {
        assert_eq!(
            read(dir1.path(), name),
            read(dir2.path(), name),
            "{name} differs between runs"
        );
    }
    let report: serde_json::Value =
        serde_json::from_slice(&read(dir1.path(), "report.json")).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["version"], env!("CARGO_PKG_VERSION"));
    // The report embeds the fully resolved configuration.
    assert!(report["scenario"]["params"]["grid_h"].is_number());
    assert_eq!(report["result"]["classification"][0]["regime"], "JumpUp");
    // Flux coefficients of the one-sphere construction.
    let gammas = report["result"]["solution"]["gammas"].as_array().unwrap();
    assert!((gammas[0].as_f64().unwrap() - 0.4).abs() < 1e-9);
    assert!((gammas[1].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn validate_reports_window_violation_as_warning() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hot.json");
    fs::write(
        &path,
        r#"{"schema_version": 1, "name": "hot",
            "domain": {"n": 2, "r_a": 1.0, "r_b": 3.0, "R_B": 4.0},
            "measure": {"atoms": [[2.0, 1.6]]},
            "boundary": [0.0, 1.0], "task": "radial", "params": {}}"#,
    )
    .unwrap();
    let out = bin().arg("validate").arg(&path).output().unwrap();
    assert!(out.status.success(), "warnings alone must not fail validation");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("necessary condition violated at r = 2"), "got: {text}");
}

#[test]
fn validate_rejects_malformed_radii() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(
        &path,
        r#"{"schema_version": 1, "name": "bad",
            "domain": {"n": 2, "r_a": 3.0, "r_b": 1.0, "R_B": 4.0},
            "measure": {}, "boundary": [0.0, 0.0], "task": "minimize", "params": {}}"#,
    )
    .unwrap();
    let out = bin().arg("validate").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("error") && text.contains("r_a"), "got: {text}");
}

#[test]
fn run_with_unparseable_scenario_exits_2() {
    let out = bin().args(["run", "/nonexistent/scenario.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_extremal_scenario_exits_2_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("extremal.json");
    fs::write(
        &path,
        r#"{"schema_version": 1, "name": "extremal",
            "domain": {"n": 2, "r_a": 1.0, "r_b": 3.0, "R_B": 4.0},
            "measure": {"atoms": [[2.0, 1.9]]},
            "boundary": [0.0, 1.0], "task": "minimize", "params": {}}"#,
    )
    .unwrap();
    let out_dir = tempfile::tempdir().unwrap();
    let out = bin().args(["run"]).arg(&path).arg("--out").arg(out_dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("non-extremal"), "stderr: {err}");
}

#[test]
fn checks_task_emits_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "checks_demo", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&read(dir.path(), "checks.json")).unwrap();
    let l = report["nonextremality"]["l_hat"].as_f64().unwrap();
    assert!((l - 8.0 / 15.0).abs() < 1e-9);
    assert_eq!(report["ball_condition"]["violated"], false);
}
