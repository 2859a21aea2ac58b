//! End-to-end command-line tests over the binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn labcli(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_labcli"))
        .args(args)
        .current_dir(dir)
        .env("QAOA_LAB_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn gen_optimize_fit_trajectory_sample_flow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    assert_ok(&labcli(
        &["gen", "--n", "5", "--seed", "11", "--out", "instance.json"],
        d,
    ));
    assert!(d.join("instance.json").exists());

    assert_ok(&labcli(
        &[
            "optimize",
            "--instance",
            "instance.json",
            "--p",
            "3",
            "--restarts",
            "1",
            "--seed",
            "7",
            "--out",
            "result.json",
        ],
        d,
    ));
    let result_text = fs::read_to_string(d.join("result.json")).unwrap();
    let result: serde_json::Value = serde_json::from_str(&result_text).unwrap();
    assert_eq!(result["p"], 3);
    assert_eq!(result["gamma"].as_array().unwrap().len(), 3);
    assert!(result["value"].as_f64().unwrap() < 0.0);

    let fit = labcli(
        &["fit", "--result", "result.json", "--instance", "instance.json"],
        d,
    );
    assert_ok(&fit);
    let fit_json: serde_json::Value =
        serde_json::from_slice(&fit.stdout).unwrap();
    assert!(fit_json["beta_high"].as_f64().unwrap() >= 0.0);
    assert!(fit_json["p_low"].as_f64().unwrap() >= 0.0);

    let traj = labcli(
        &["trajectory", "--results", "result.json", "--out", "traj.csv"],
        d,
    );
    assert_ok(&traj);
    let csv = fs::read_to_string(d.join("traj.csv")).unwrap();
    assert!(csv.starts_with("instance_id,p,n,layer,theta_cum,gamma_cum,r,phi"));
    assert_eq!(csv.lines().count(), 1 + 4); // header + layers 0..=3

    // Deep enough schedules also admit the universal-circle fit.
    assert_ok(&labcli(
        &[
            "optimize",
            "--instance",
            "instance.json",
            "--p",
            "6",
            "--restarts",
            "1",
            "--seed",
            "7",
            "--out",
            "result6.json",
        ],
        d,
    ));
    let deep = labcli(
        &["trajectory", "--results", "result6.json", "--fit-circle"],
        d,
    );
    assert_ok(&deep);
    let text = String::from_utf8_lossy(&deep.stdout);
    assert!(text.contains("# circle fit: epsilon="), "{text}");

    let sample = labcli(
        &[
            "sample",
            "--result",
            "result.json",
            "--shots",
            "64",
            "--seed",
            "3",
            "--instance",
            "instance.json",
        ],
        d,
    );
    assert_ok(&sample);
    let lines: Vec<&str> = std::str::from_utf8(&sample.stdout)
        .unwrap()
        .lines()
        .collect();
    assert_eq!(lines.len(), 64);
    assert!(lines.iter().all(|l| l.len() == 5
        && l.chars().all(|c| c == '0' || c == '1')));
}

#[test]
fn anneal_runs_from_schedule_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_ok(&labcli(
        &["gen", "--n", "4", "--seed", "2", "--out", "instance.json"],
        d,
    ));
    fs::write(
        d.join("schedule.json"),
        r#"{"knots":[[0.0,0.0],[0.8,0.01],[1.6,0.04]],"interpolant":"monotone_cubic","theta_max":1.6,"gamma_max":0.04}"#,
    )
    .unwrap();
    let out = labcli(
        &[
            "anneal",
            "--schedule",
            "schedule.json",
            "--steps",
            "200",
            "--integrator",
            "trotter",
            "--instance",
            "instance.json",
            "--fit",
        ],
        d,
    );
    assert_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("\"final_norm\": 1.0"));
    assert!(text.contains("\"steps\": 200"));
}

#[test]
fn ensemble_is_deterministic_and_reportable() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = |out: &str| {
        format!(
            r#"{{
  "n_list": [4, 5],
  "p_list": [1, 2],
  "instances": 2,
  "base_seed": 5,
  "optimizer": {{"restarts": 1, "grid": 12, "max_evals": 4000}},
  "fit": {{"n_starts": 4}},
  "output_dir": "{out}",
  "workers": 2
}}"#
        )
    };
    fs::write(d.join("config_a.json"), config("out_a")).unwrap();
    fs::write(d.join("config_b.json"), config("out_b")).unwrap();
    assert_ok(&labcli(&["ensemble", "--config", "config_a.json"], d));
    // A different worker count must not change the bytes.
    let out_b = Command::new(env!("CARGO_BIN_EXE_labcli"))
        .args(["ensemble", "--config", "config_b.json"])
        .current_dir(d)
        .env("QAOA_LAB_WORKERS", "1")
        .output()
        .expect("binary runs");
    assert_ok(&out_b);
    let a = fs::read(d.join("out_a/rows.jsonl")).unwrap();
    let b = fs::read(d.join("out_b/rows.jsonl")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "ensemble outputs differ across worker counts");

    let report = labcli(
        &["report", "--rows", "out_a/rows.jsonl", "--kind", "resources"],
        d,
    );
    assert_ok(&report);
    assert!(String::from_utf8_lossy(&report.stdout).starts_with("n,p,count,"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // Missing config file.
    let out = labcli(&["ensemble", "--config", "missing.json"], d);
    assert_eq!(out.status.code(), Some(2));

    // Invalid field values.
    fs::write(d.join("bad.json"), r#"{"n_list": [40], "instances": 1}"#).unwrap();
    let out = labcli(&["ensemble", "--config", "bad.json"], d);
    assert_eq!(out.status.code(), Some(2));

    // Unknown report kind.
    fs::write(d.join("rows.jsonl"), "").unwrap();
    let out = labcli(&["report", "--rows", "rows.jsonl", "--kind", "bogus"], d);
    assert_eq!(out.status.code(), Some(2));

    // Clap usage errors also exit 2.
    let out = labcli(&["gen", "--n", "5"], d);
    assert_eq!(out.status.code(), Some(2));
}
