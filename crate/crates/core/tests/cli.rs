use std::path::Path;
use std::process::{Command, Output};

fn qpdwire(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpdwire")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = r#"{"schema_version":1,"kind":"error_scaling","fidelities":[0.7],"thetas":[0.15],
    "num_states":4,"shots":[100,1000],"seed":9}"#;

#[test]
fn verify_succeeds() {
    let out = qpdwire(&["verify"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0 failed"), "{text}");
}

#[test]
fn simulate_writes_header_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let csv = dir.path().join("out.csv");
    let csv = csv.to_str().unwrap();
    assert!(qpdwire(&["simulate", "--config", &config, "--out", csv])
        .status
        .success());
    let base = std::fs::read_to_string(csv).unwrap();
    let mut lines = base.lines();
    assert_eq!(
        lines.next().unwrap(),
        "method,F_target,theta,N,observable,mean_abs_error,stderr_of_mean,num_states,seed"
    );
    // 4 methods x 2 N x (3 observables + pooled)
    assert_eq!(lines.count(), 32);
    assert!(base.lines().skip(1).all(|l| l.ends_with(",4,9")));

    assert!(
        qpdwire(&["simulate", "--config", &config, "--out", csv, "--seed", "10"])
            .status
            .success()
    );
    let other = std::fs::read_to_string(csv).unwrap();
    assert!(other.lines().skip(1).all(|l| l.ends_with(",4,10")));
    assert_ne!(base, other);
}

#[test]
fn bad_config_fails() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &SMALL.replace("\"seed\":9", "\"seed\":9,\"typo\":1"));
    let out = qpdwire(&["simulate", "--config", &config]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("typo"));
    assert!(!qpdwire(&["simulate"]).status.success());
}

#[test]
fn calibrate_prints_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = qpdwire(&["calibrate", "--config", &config]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("F_target,theta,f_exact,f_hat,stderr,shots,ensemble_label,seed\n"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn swap_sweep_reports_crossing() {
    let out = qpdwire(&[
        "swap-sweep",
        "--seed",
        "3",
        "--per-swap-noise",
        "0.05",
        "--max-swaps",
        "30",
    ]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 32);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("first k with F < 0.5"), "{err}");
    assert!(!qpdwire(&["swap-sweep"]).status.success());
}

#[test]
fn coeff_scan_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"schema_version":1,"kind":"coeff_scan","fidelities":[0.7],"thetas":[0.0],"num_states":3,
            "shots":[500],"methods":["two_design"],"coeff_points":5,"seed":1}"#,
    );
    let rows = dir.path().join("rows.csv");
    let summary = dir.path().join("summary.csv");
    let out = qpdwire(&[
        "coeff-scan",
        "--config",
        &config,
        "--out",
        rows.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    // 5 coefficients x (3 observables + pooled)
    assert_eq!(std::fs::read_to_string(rows).unwrap().lines().count(), 21);
    let summary = std::fs::read_to_string(summary).unwrap();
    assert!(summary.starts_with("method,F_target,theta,N,observable,c_opt,c_com,min_mean_abs_error\n"));
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        qpdwire::experiment::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert_eq!(count, 3);
}
