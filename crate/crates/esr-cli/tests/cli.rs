//! End-to-end tests of the `esr` binary: exit codes, stdout shapes, and the
//! gen -> bench -> eval pipeline over real files.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn esr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL_BENCH: &str = r#"{
    "version": 1,
    "seed": 3,
    "replications": 2,
    "generator": {"kind": "level-shift", "n": 120, "d": 2},
    "learners": [{"name": "esr", "k": 25.0}, {"name": "direct"}],
    "train": {"hidden": [4], "epochs": 3, "batch_size": 32}
}"#;

#[test]
fn gen_then_bench_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_BENCH);
    let data_dir = dir.path().join("data");
    let out = esr(&["gen", "--config", &config, "--out", data_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["dataset.csv", "dataset.jsonl", "counterfactuals.csv", "truth.json"] {
        assert!(data_dir.join(name).exists(), "{name}");
    }

    let bench_config = write_config(
        &dir.path().join("."),
        &format!(
            r#"{{
                "version": 1,
                "seed": 4,
                "replications": 2,
                "input": {{
                    "dataset": "{}",
                    "counterfactuals": "{}"
                }},
                "learners": [{{"name": "direct"}}],
                "train": {{"hidden": [4], "epochs": 3, "batch_size": 32}}
            }}"#,
            data_dir.join("dataset.csv").display(),
            data_dir.join("counterfactuals.csv").display()
        ),
    );
    let res_dir = dir.path().join("results");
    let out = esr(&["bench", "--config", &bench_config, "--out", res_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(res_dir.join("results.csv")).unwrap();
    assert!(csv.starts_with("learner,k,metric,mean,ci_low,ci_high,R_effective,seed,config_hash"));
    assert!(csv.lines().nth(1).unwrap().starts_with("direct,,regret,"));
}

#[test]
fn bench_prints_table_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_BENCH);
    let out_dir = dir.path().join("out");
    let out = esr(&["bench", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("esr,25,regret,"));
    assert!(stdout.contains("direct,,regret,"));
}

#[test]
fn invalid_config_fails_with_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"version": 1, "seed": 0, "replications": 0, "learners": []}"#);
    let out = esr(&["bench", "--config", &config, "--out", dir.path().join("x").to_str().unwrap()]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let obj: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert!(obj["error"].is_string());
}

#[test]
fn parse_subcommand_counts_and_writes() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.log");
    fs::write(
        &log,
        "\
10 a 1 |user 1:1.0 2:0.5 |a |b
11 b 0 |user 1:1.0 2:-0.5 |a |b
this line is corrupt
12 c 1 |user 1:1.0 |c |a
13 a 0 |user 1:1.0 2:0.25 |a |b
",
    )
    .unwrap();
    let out_dir = dir.path().join("parsed");
    let out = esr(&[
        "parse",
        log.to_str().unwrap(),
        "--pair",
        "a,b",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.trim(), "read 4 kept 3 errors 1 pair a,b");
    assert!(out_dir.join("dataset.csv").exists());
}

#[test]
fn eval_reports_offpolicy_value() {
    // train a tiny policy via bench inputs is overkill; save one by hand
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_BENCH);
    let data_dir = dir.path().join("data");
    assert!(esr(&["gen", "--config", &config, "--out", data_dir.to_str().unwrap()])
        .status
        .success());

    let ds = esr_cli::formats::read_dataset_csv(&data_dir.join("dataset.csv")).unwrap();
    let cfg = esr_core::learners::TrainConfig {
        hidden: vec![4],
        epochs: 3,
        batch_size: 32,
        ..esr_core::learners::TrainConfig::default()
    };
    let policy = esr_core::learners::fit_esr(&ds, &cfg, &esr_core::SeededRng::new(5)).unwrap();
    let policy_path = dir.path().join("policy.json");
    esr_cli::checkpoint::save_policy(&policy_path, &policy).unwrap();

    let out = esr(&[
        "eval",
        "--policy",
        policy_path.to_str().unwrap(),
        "--dataset",
        data_dir.join("dataset.csv").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let obj: serde_json::Value =
        serde_json::from_str(String::from_utf8(out.stdout).unwrap().trim()).unwrap();
    assert_eq!(obj["metric"], "value");
    assert!(obj["value"].is_number());
    assert!(obj["match_rate"].is_number());

    // with counterfactuals the metric switches to exact regret
    let out = esr(&[
        "eval",
        "--policy",
        policy_path.to_str().unwrap(),
        "--dataset",
        data_dir.join("dataset.csv").to_str().unwrap(),
        "--counterfactuals",
        data_dir.join("counterfactuals.csv").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let obj: serde_json::Value =
        serde_json::from_str(String::from_utf8(out.stdout).unwrap().trim()).unwrap();
    assert_eq!(obj["metric"], "regret");
}
