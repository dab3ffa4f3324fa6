use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn reconlab(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_reconlab"));
    cmd.args(args).env_remove("RECONLAB_OUT");
    if let Some(dir) = env_out {
        cmd.env("RECONLAB_OUT", dir);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn list_experiments_names_all_nine() {
    let out = reconlab(&["list-experiments"], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for e in reconlab::harness::EXPERIMENTS {
        assert!(text.contains(e), "{e} missing");
    }
}

#[test]
fn validation_failures_exit_one_and_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"experiment": "dn_lp_sweep", "parameters": {"n": 0}}"#,
    );
    let out = reconlab(&["validate", &cfg], None);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("seed required"), "{err}");
    assert!(err.contains("parameters.n: n ≥ 1"), "{err}");

    let out = reconlab(&["run", &cfg, "--set", "seed=3"], None);
    assert_eq!(out.status.code(), Some(1));

    let out = reconlab(&["validate", "/nonexistent/config.json"], None);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn valid_config_validates() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"experiment": "scenario_suite", "seed": 42}"#,
    );
    let out = reconlab(&["validate", &cfg], None);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn run_writes_report_and_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        r#"{"experiment": "scenario_suite", "seed": 42, "parameters": {"trials": 100}}"#,
    );
    let out = reconlab(&["run", &cfg, "--out", out_dir.to_str().unwrap()], None);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = report(&out_dir);
    assert_eq!(r["config"]["experiment"], "scenario_suite");
    assert_eq!(r["config"]["seed"], 42);
    assert_eq!(r["metrics"]["scenario3.confirmed_match_rate"], 1.0);
    assert!(r["runtime_ms"].is_u64());
    assert!(out_dir.join("scenarios.csv").exists());
    assert!(out_dir.join("summary.txt").exists());
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("scenario1.agreement"));
}

#[test]
fn output_directory_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let from_config = tmp.path().join("config_dir");
    let from_env = tmp.path().join("env_dir");
    let from_flag = tmp.path().join("flag_dir");
    let body = format!(
        r#"{{"experiment": "regeneration_multiplicity", "seed": 1, "output_path": {:?}}}"#,
        from_config.to_str().unwrap()
    );
    let cfg = write_config(tmp.path(), &body);

    assert!(reconlab(&["run", &cfg], None).status.success());
    assert!(from_config.join("report.json").exists());

    assert!(reconlab(&["run", &cfg], Some(&from_env)).status.success());
    assert!(from_env.join("report.json").exists());

    let flag = from_flag.to_str().unwrap();
    assert!(reconlab(&["run", &cfg, "--out", flag], Some(&from_env))
        .status
        .success());
    assert!(from_flag.join("report.json").exists());
}

#[test]
fn overrides_and_reruns_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"experiment": "dn_lp_sweep", "seed": 5}"#);
    let run = |dir: &str| {
        let d = tmp.path().join(dir);
        let out = reconlab(
            &[
                "run",
                &cfg,
                "--set",
                "n=24",
                "--set",
                "m=64",
                "--set",
                "seeds=2",
                "--set",
                "bounds=[0,4,16]",
                "--out",
                d.to_str().unwrap(),
            ],
            None,
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        report(&d)
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a["metrics"], b["metrics"]);
    assert_eq!(a["tables"], b["tables"]);
    assert_eq!(a["config"]["parameters"]["n"], 24);

    // The echoed config reruns to the same metrics.
    let echo = tmp.path().join("echo.json");
    fs::write(&echo, a["config"].to_string()).unwrap();
    let d = tmp.path().join("c");
    let out = reconlab(
        &["run", echo.to_str().unwrap(), "--out", d.to_str().unwrap()],
        None,
    );
    assert!(out.status.success());
    assert_eq!(report(&d)["metrics"], a["metrics"]);
}

#[test]
fn bad_override_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"experiment": "dp_budget", "seed": 5}"#);
    let out = reconlab(&["run", &cfg, "--set", "epsilon=-1"], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("parameters.epsilon"));
}
