use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nilcmc"))
}

fn small_config(mode: &str, h_mean: f64, rho0: f64, phi0: f64, extra: &str) -> String {
    format!(
        r#"{{"mode":"{mode}","H":{h_mean},
            "grid":{{"nx":41,"ny":41,"hx":0.01,"hy":0.01,"x0":-0.2,"y0":-0.2}},
            "profile":{{"rho0":{rho0},"phi0":{phi0}}},
            "anchor":[20,20]{extra}}}"#
    )
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("input.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(cmd: &str, config: Option<&Path>, out: &Path, extra: &[&str]) -> (i32, Value, Output) {
    let mut c = bin();
    c.arg(cmd).arg("--out").arg(out);
    if let Some(cfg) = config {
        c.arg("--config").arg(cfg);
    }
    c.args(extra);
    let output = c.output().expect("binary runs");
    let doc: Value = serde_json::from_slice(&output.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not one JSON document ({e}): {}",
            String::from_utf8_lossy(&output.stdout)
        )
    });
    (output.status.code().unwrap_or(-1), doc, output)
}

fn entry<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["entries"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["name"] == name)
        .unwrap_or_else(|| panic!("no entry {name}"))
}

#[test]
fn generate_constant_potential() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config("minimal", 0.0, 0.0, 0.0, ""));
    let out = tmp.path().join("run");
    let (code, doc, _) = run("generate", Some(&cfg), &out, &[]);
    assert_eq!(code, 0);
    // zero up to sin(π) and cos(π/2) in floating point
    assert!(entry(&doc, "sinh_gordon")["max"].as_f64().unwrap() < 1e-14);
    assert!(entry(&doc, "reality_minimal")["max"].as_f64().unwrap() < 1e-15);
    let text = std::fs::read_to_string(out.join("v.cfld")).unwrap();
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .ends_with(",0.0000000000000000e0,1.5707963267948966e0"));
    assert!(out.join("v.json").exists());
}

#[test]
fn generate_reports_energy_drift() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config("minimal", 0.0, 0.1, 0.0, ""));
    let (code, doc, _) = run("generate", Some(&cfg), &tmp.path().join("run"), &[]);
    assert_eq!(code, 0);
    let drift = doc["profile"]["energy_drift"].as_f64().unwrap();
    assert!(drift.is_finite() && drift < 1e-8, "{drift}");
}

#[test]
fn negative_radicand_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config("nonzeroH", 0.5, 0.3, 1.0, ""));
    let (code, doc, _) = run("generate", Some(&cfg), &tmp.path().join("run"), &[]);
    assert_eq!(code, 2);
    let msg = doc["error"].as_str().unwrap();
    assert!(msg.contains("radicand -3.3"), "{msg}");
}

#[test]
fn minimal_with_nonzero_h_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config("minimal", 0.5, 0.1, 0.0, ""));
    let (code, _, _) = run("build", Some(&cfg), &tmp.path().join("run"), &[]);
    assert_eq!(code, 2);
}

#[test]
fn build_verify_round_trip_and_corruption() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config("nonzeroH", 0.5, 0.1, 0.0, ""));
    let out = tmp.path().join("run");
    let (code, built, _) = run("build", Some(&cfg), &out, &[]);
    assert_eq!(code, 0, "{built}");
    for name in [
        "dirac",
        "compatibility",
        "q_drift",
        "ar_holomorphicity",
        "gw_loop_closure",
        "immersion_loop_closure",
        "conformality_relative",
        "mean_curvature",
        "xi_modulus",
    ] {
        assert_eq!(entry(&built, name)["pass"], true, "{name}");
    }
    assert_eq!(built["config_sha256"].as_str().unwrap().len(), 64);
    assert!(out.join("immersion.obj").exists());

    // verify without --config picks up the stored resolved config
    let (code, verified, _) = run("verify", None, &out, &[]);
    assert_eq!(code, 0);
    assert_eq!(verified["config_sha256"], built["config_sha256"]);
    assert_eq!(
        entry(&verified, "dirac")["max"],
        entry(&built, "dirac")["max"]
    );

    // scale one interior spinor value by 1.1
    let path = out.join("psi1.cfld");
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<String> = text
        .lines()
        .map(|l| {
            if l.starts_with("10,12,") {
                let f: Vec<&str> = l.split(',').collect();
                let (re, im): (f64, f64) = (f[2].parse().unwrap(), f[3].parse().unwrap());
                format!("10,12,{:e},{:e}", re * 1.1, im * 1.1)
            } else {
                l.to_string()
            }
        })
        .collect();
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    let (code, report, output) = run("verify", None, &out, &[]);
    assert_eq!(code, 5);
    assert_eq!(entry(&report, "dirac")["pass"], false);
    assert!(String::from_utf8_lossy(&output.stderr).contains("dirac"));
}

#[test]
fn missing_sidecar_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config("minimal", 0.0, 0.1, 0.0, ""));
    let out = tmp.path().join("run");
    assert_eq!(run("build", Some(&cfg), &out, &[]).0, 0);
    std::fs::remove_file(out.join("spinor.json")).unwrap();
    let (code, doc, _) = run("verify", None, &out, &[]);
    assert_eq!(code, 4);
    assert!(doc["error"].as_str().unwrap().contains("spinor.json"));
}

#[test]
fn malformed_config_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "{\"mode\": \"minimal\",");
    assert_eq!(run("build", Some(&cfg), &tmp.path().join("run"), &[]).0, 4);
}

#[test]
fn norm_guard_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let text = small_config("minimal", 0.0, 0.1, 0.0, r#","solver":{"norm_guard":1.5}"#);
    let cfg = write_config(tmp.path(), &text);
    let (code, doc, _) = run("build", Some(&cfg), &tmp.path().join("run"), &[]);
    assert_eq!(code, 3, "{doc}");
}

#[test]
fn tolerance_override_fails_build() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config("minimal", 0.0, 0.1, 0.0, ""));
    let (code, doc, _) = run(
        "build",
        Some(&cfg),
        &tmp.path().join("run"),
        &["--tol", "dirac=1e-12"],
    );
    assert_eq!(code, 5);
    assert_eq!(entry(&doc, "dirac")["tolerance"], 1e-12);
    assert_eq!(doc["pass"], false);
}

#[test]
fn export_vtk_carries_mean_curvature() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config("nonzeroH", 0.5, 0.1, 0.0, ""));
    let out = tmp.path().join("run");
    assert_eq!(run("build", Some(&cfg), &out, &[]).0, 0);
    let (code, doc, _) = run("export", None, &out, &["--format", "vtk"]);
    assert_eq!(code, 0);
    assert_eq!(doc["format"], "vtk");
    assert_eq!(doc["vertices"], 41 * 41);
    let vtk = std::fs::read_to_string(out.join("immersion.vtk")).unwrap();
    assert!(vtk.contains("DIMENSIONS 41 41 1"));
    let h: Vec<f64> = vtk
        .lines()
        .skip_while(|l| *l != "SCALARS H_est double 1")
        .skip(2)
        .take(41 * 41)
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(h.len(), 41 * 41);
    // an interior node
    assert!((h[20 * 41 + 20] - 0.5).abs() < 1e-3);
}

#[test]
fn unknown_format_is_a_usage_error() {
    let out = bin().args(["export", "--format", "stl"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["exit_code"], 1);
}
