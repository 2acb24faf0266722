use std::path::Path;
use std::process::{Command, Output};

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clt-lab"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn regime_writes_report_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("pareto_hard.toml");
    let out = lab(&[
        "--quiet",
        "regime",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["command"], "regime");
    assert_eq!(report["regime"]["label"], "hard");
    assert!(report.get("wall_clock_secs").is_none());
    let timing: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("timing.json")).unwrap())
            .unwrap();
    assert!(timing["wall_clock_secs"].as_f64().unwrap() >= 0.0);
}

#[test]
fn soft_check_refuses_a_hard_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("pareto_hard.toml");
    let out = lab(&[
        "soft-check",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Hard"));
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn divergence_needs_the_mixture_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("pareto_contrast.toml");
    let out = lab(&[
        "probe",
        "divergence",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("rademacher_cauchy_mix"));
}

#[test]
fn bad_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(configs().join("pareto_hard.toml"))
        .unwrap()
        .replace("reps = 2000", "reps = 20");
    std::fs::write(&path, text).unwrap();
    let out = lab(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("reps"));
}

#[test]
fn every_shipped_config_loads() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            clt_lab::ExperimentConfig::load(&path)
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
    }
}
