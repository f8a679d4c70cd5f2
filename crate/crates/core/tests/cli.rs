//! The `dqml` binary: exit codes, provenance lines, reproducibility and resume.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dqml(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dqml"))
        .args(args)
        .current_dir(dir)
        .env_remove("DQML_WORKERS")
        .output()
        .expect("spawn dqml")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

const SMALL_CHSH: &str = r#"{
  "repeats": 2,
  "bells": [0, 1],
  "embeddings": ["optimal"],
  "losses": ["product"],
  "circuit": {"qubits_per_proc": 2, "conv_depth": 1},
  "train": {"iterations": 20, "batch_fraction": 1.0, "log_every": 10}
}"#;

#[test]
fn chsh_writes_tables_with_config_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", SMALL_CHSH);
    let out = dqml(&["chsh", "--config", &cfg, "--seed", "4", "--out", "run"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = tmp.path().join("run");
    for name in ["chsh_runs.csv", "chsh_summary.csv", "chsh_inputs.csv"] {
        let text = fs::read_to_string(run.join(name)).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("# config={"), "{name}: {first}");
        assert!(first.contains(r#""seed":4"#), "{name}: {first}");
    }
    let inputs = fs::read_to_string(run.join("chsh_inputs.csv")).unwrap();
    assert_eq!(inputs.lines().count(), 2 + 2 * 2 * 16);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "chsh");
    assert_eq!(manifest["seed"], 4);
    assert!(manifest["created"].is_string());
    assert_eq!(manifest["config"]["repeats"], 2);
}

#[test]
fn rerun_from_recorded_config_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", SMALL_CHSH);
    assert!(dqml(&["chsh", "--config", &cfg, "--out", "a"], tmp.path()).status.success());
    let first = fs::read_to_string(tmp.path().join("a/chsh_runs.csv")).unwrap();
    let recorded = first.lines().next().unwrap().trim_start_matches("# config=");
    let cfg2 = write(tmp.path(), "recorded.json", recorded);
    // A different thread count from the environment must not change any byte.
    let out = Command::new(env!("CARGO_BIN_EXE_dqml"))
        .args(["chsh", "--config", &cfg2, "--out", "b"])
        .current_dir(tmp.path())
        .env("DQML_WORKERS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    for name in ["chsh_runs.csv", "chsh_summary.csv", "chsh_inputs.csv"] {
        let a = fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert!(a == b, "{name} differs");
    }
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "bad.json", r#"{"repeats": 1, "colour": "blue"}"#);
    let cases: Vec<Vec<&str>> = vec![
        vec!["chsh", "--config", &bad],
        vec!["synth", "--config", "missing.json"],
        vec!["chsh", "--embedding", "diagonal"],
        vec!["chsh", "--loss", "hinge"],
        vec!["chsh", "--repeats", "0"],
        vec!["effdim", "--embedding", "feature_map"],
        vec!["dnn", "--bell", "1"],
        vec!["synth", "--bell", "9", "--repeats", "1"],
    ];
    for args in cases {
        let out = dqml(&args, tmp.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn worker_env_var_is_validated() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dqml"))
        .args(["chsh", "--repeats", "1"])
        .current_dir(tmp.path())
        .env("DQML_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("DQML_WORKERS"));
}

#[test]
fn report_aggregates_and_rejects_mixed_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", SMALL_CHSH);
    assert!(dqml(&["chsh", "--config", &cfg, "--out", "a"], tmp.path()).status.success());
    assert!(dqml(&["chsh", "--config", &cfg, "--seed", "7", "--out", "b"], tmp.path()).status.success());
    let out = dqml(&["report", "a/chsh_runs.csv", "b/chsh_runs.csv", "--out", "rep"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(tmp.path().join("rep/report.csv")).unwrap();
    let rows: Vec<&str> = report.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(rows[0].starts_with("bell,embedding,loss,runs,final_loss_mean"));
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("0,optimal,product,4,"), "{}", rows[1]);

    let other = write(tmp.path(), "other.csv", "model,bell,depth,mixing_depth,repeat,seed,param_count,final_loss,train_acc,val_acc\n");
    let out = dqml(&["report", "a/chsh_runs.csv", &other, "--out", "rep2"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mixed schemas"));
    assert_eq!(dqml(&["report", "--out", "rep3"], tmp.path()).status.code(), Some(2));
}

#[test]
fn dnn_prints_parameter_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "d.json", r#"{"repeats": 1, "train": {"iterations": 5, "log_every": 5}}"#);
    let out = dqml(&["dnn", "--config", &cfg, "--out", "d"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("parameters: 246"));
    let runs = fs::read_to_string(tmp.path().join("d/dnn_runs.csv")).unwrap();
    assert!(runs.lines().nth(2).unwrap().starts_with("dnn,,,,0,0,246,"));
}

#[test]
fn synth_resumes_from_checkpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "s.json",
        r#"{"repeats": 1, "bells": [1], "depths": [1], "checkpoint_every": 3,
            "train": {"iterations": 6, "batch_fraction": 0.05, "log_every": 2}}"#,
    );
    assert!(dqml(&["synth", "--config", &cfg, "--out", "s"], tmp.path()).status.success());
    let runs = tmp.path().join("s/synth_runs.csv");
    let first = fs::read_to_string(&runs).unwrap();
    let ckpt = tmp.path().join("s/checkpoints/qcnn_bell1_d1_mix0_r0.json");
    assert!(ckpt.exists());

    // Roll the checkpoint back to iteration 3 and rerun: same final table.
    let mut c: serde_json::Value = serde_json::from_str(&fs::read_to_string(&ckpt).unwrap()).unwrap();
    let full = c["state"]["iteration"].as_u64().unwrap();
    assert_eq!(full, 6);
    assert!(dqml(&["synth", "--config", &cfg, "--out", "fresh"], tmp.path()).status.success());
    let cfg3 = write(
        tmp.path(),
        "s3.json",
        r#"{"repeats": 1, "bells": [1], "depths": [1], "checkpoint_every": 3,
            "train": {"iterations": 3, "batch_fraction": 0.05, "log_every": 2}}"#,
    );
    assert!(dqml(&["synth", "--config", &cfg3, "--out", "half"], tmp.path()).status.success());
    let half_ckpt = tmp.path().join("half/checkpoints/qcnn_bell1_d1_mix0_r0.json");
    let mut h: serde_json::Value = serde_json::from_str(&fs::read_to_string(&half_ckpt).unwrap()).unwrap();
    h["config"] = c["config"].take();
    fs::write(&ckpt, serde_json::to_string(&h).unwrap()).unwrap();
    assert!(dqml(&["synth", "--config", &cfg, "--out", "s"], tmp.path()).status.success());
    assert_eq!(fs::read_to_string(&runs).unwrap(), first);
    assert_eq!(fs::read_to_string(tmp.path().join("fresh/synth_runs.csv")).unwrap(), first);
}
