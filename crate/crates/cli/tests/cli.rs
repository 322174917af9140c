use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_randshear"));
    c.env_remove("RANDSHEAR_OUT_DIR");
    c
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let out = bin().arg("--out-dir").arg(dir).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn kappa_eff_presets() {
    let d = tempfile::tempdir().unwrap();
    run_in(
        d.path(),
        &["kappa-eff", "--flow", "linear", "--gamma", "1", "--pe", "1"],
    );
    let rec = read_json(d.path().join("kappa_eff.json"));
    let exact = 1.0 + 1.0 / 24.0 - 0.5 + 0.5f64.tanh();
    assert!((rec["kappa_eff"].as_f64().unwrap() - exact).abs() < 1e-10);

    run_in(
        d.path(),
        &["kappa-eff", "--flow", "cosine:1", "--noise", "white", "--pe", "2"],
    );
    let rec = read_json(d.path().join("kappa_eff.json"));
    assert!((rec["kappa_eff"].as_f64().unwrap() - 2.0).abs() < 1e-12);

    run_in(d.path(), &["kappa-eff", "--pe", "0"]);
    let rec = read_json(d.path().join("kappa_eff.json"));
    assert!((rec["kappa_eff"].as_f64().unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn hermite_method_reports_truncation() {
    let d = tempfile::tempdir().unwrap();
    run_in(
        d.path(),
        &["kappa-eff", "--method", "hermite", "--gamma", "2", "--grid", "128"],
    );
    let rec = read_json(d.path().join("kappa_eff.json"));
    let diag = &rec["diagnostics"];
    assert!(diag["lambda11_relative_difference"].as_f64().unwrap() < 1e-6);
    assert!(diag["lambda2_terms"].as_array().unwrap().len() > 1);
}

#[test]
fn deterministic_pdf_table_is_normalized() {
    let d = tempfile::tempdir().unwrap();
    run_in(
        d.path(),
        &["pdf", "--mode", "deterministic", "--beta", "1", "--bins", "200"],
    );
    let mut rdr = csv::Reader::from_path(d.path().join("pdf.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(&headers[0], "z_lo");
    let mut total = 0.0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let lo: f64 = rec[0].parse().unwrap();
        let hi: f64 = rec[1].parse().unwrap();
        let f: f64 = rec[3].parse().unwrap();
        total += f * (hi - lo);
    }
    assert!((total - 1.0).abs() < 1e-3);
}

#[test]
fn estimate_gamma_recovers_damping_rate() {
    let d = tempfile::tempdir().unwrap();
    run_in(
        d.path(),
        &["estimate-gamma", "--gamma", "5", "--t-end", "500", "--paths", "20"],
    );
    let s = read_json(d.path().join("estimate_gamma_summary.json"));
    assert!(s["relative_error"].as_f64().unwrap() < 0.10);
    let lines = std::fs::read_to_string(d.path().join("estimate_gamma.ndjson")).unwrap();
    assert_eq!(lines.lines().count(), 20);
}

#[test]
fn aris_estimate_converges_to_closed_form() {
    let d = tempfile::tempdir().unwrap();
    run_in(
        d.path(),
        &[
            "aris", "--flow", "linear", "--gamma", "1", "--pe", "1", "--t-end", "200",
        ],
    );
    let s = read_json(d.path().join("aris_summary.json"));
    let k = s["kappa_eff"].as_f64().unwrap();
    let last = s["kappa_final_mean"].as_f64().unwrap();
    assert!((last - k).abs() / k < 0.05);
}

#[test]
fn identical_seed_gives_identical_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--t-end",
        "1",
        "--dt",
        "0.01",
        "--particles",
        "1500",
        "--realizations",
        "2",
        "--seed",
        "9",
    ];
    run_in(a.path(), &args);
    bin()
        .arg("--threads")
        .arg("1")
        .arg("--out-dir")
        .arg(b.path())
        .args(args)
        .output()
        .unwrap();
    let ma = read_json(a.path().join("manifest.json"));
    let mb = read_json(b.path().join("manifest.json"));
    assert_eq!(ma["outputs"], mb["outputs"]);
    assert_eq!(ma["config_sha256"], mb["config_sha256"]);
    for f in ["simulate_moments.csv", "simulate.ndjson"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap()
        );
    }
}

#[test]
fn flags_override_config_and_env_sets_output_dir() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.json");
    std::fs::write(&cfg, r#"{"command": "kappa-eff", "pe": 3.0, "gamma": 2.0}"#).unwrap();
    let out_dir = d.path().join("from-env");
    let out = bin()
        .env("RANDSHEAR_OUT_DIR", &out_dir)
        .args(["kappa-eff", "--config"])
        .arg(&cfg)
        .args(["--pe", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let m = read_json(out_dir.join("manifest.json"));
    assert_eq!(m["config"]["pe"], 1.0);
    assert_eq!(m["config"]["gamma"], 2.0);
}

#[test]
fn config_for_another_command_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.json");
    std::fs::write(&cfg, r#"{"command": "aris"}"#).unwrap();
    let out = bin()
        .arg("--out-dir")
        .arg(d.path())
        .args(["kappa-eff", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config is for `aris`"));
}

#[test]
fn invalid_parameters_fail_before_running() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        vec!["kappa-eff", "--gamma", "-1"],
        vec!["kappa-eff", "--grid", "9"],
        vec!["kappa-eff", "--flow", "file:/no/such/file"],
        vec!["simulate", "--t-end", "1", "--dt", "2"],
    ] {
        let out = bin().arg("--out-dir").arg(d.path()).args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
    assert!(!d.path().join("manifest.json").exists());
}

#[test]
fn profile_from_file() {
    let d = tempfile::tempdir().unwrap();
    let values: Vec<f64> = (0..=64).map(|j| j as f64 / 64.0).collect();
    let file = d.path().join("u.json");
    std::fs::write(&file, serde_json::to_string(&values).unwrap()).unwrap();
    let flow = format!("file:{}", file.display());
    run_in(
        d.path(),
        &["kappa-eff", "--flow", &flow, "--gamma", "1", "--grid", "64"],
    );
    let rec = read_json(d.path().join("kappa_eff.json"));
    let exact = 1.0 + 1.0 / 24.0 - 0.5 + 0.5f64.tanh();
    assert!((rec["kappa_eff"].as_f64().unwrap() - exact).abs() < 1e-9);
}

/// Each recipe in `configs/` runs at a reduced ensemble size.
#[test]
fn recipes_run_at_reduced_size() {
    let shrink: [(&str, u64); 5] = [
        ("particles", 1000),
        ("realizations", 3),
        ("paths", 2),
        ("samples", 2000),
        ("n-max", 16),
    ];
    let mut count = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let obj = doc.as_object_mut().unwrap();
        for (key, cap) in shrink {
            if let Some(v) = obj.get(key).and_then(Value::as_u64) {
                obj.insert(key.into(), v.min(cap).into());
            }
        }
        if let Some(t) = obj.get("t-end").and_then(Value::as_f64) {
            obj.insert("t-end".into(), t.min(2.0).into());
        }
        if obj.get("pdf-mode").and_then(Value::as_str) == Some("wind") {
            obj.insert("realizations".into(), 1000.into());
        }
        let d = tempfile::tempdir().unwrap();
        let small = d.path().join("recipe.json");
        std::fs::write(&small, serde_json::to_string(&doc).unwrap()).unwrap();
        let cmd = doc["command"].as_str().unwrap().to_string();
        let out = bin()
            .arg("--out-dir")
            .arg(d.path())
            .arg(&cmd)
            .arg("--config")
            .arg(&small)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{} failed:\n{}",
            path.display(),
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(d.path().join("manifest.json").exists());
        count += 1;
    }
    assert!(count >= 8);
}

#[test]
fn validate_quick_runs_every_criterion() {
    let d = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("--out-dir")
        .arg(d.path())
        .args(["validate", "--quick"])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines = stdout
        .lines()
        .filter(|l| l.starts_with("PASS") || l.starts_with("FAIL"))
        .count();
    assert_eq!(lines, 10);
    let records = std::fs::read_to_string(d.path().join("validation.ndjson")).unwrap();
    assert_eq!(records.lines().count(), 10);
}
