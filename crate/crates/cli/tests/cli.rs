use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"{"n_runs": 3, "test_runs": 1,
    "dataset": {"template": {"run_length": 640, "fault_onset": 420}, "label_horizon": 96, "onset_jitter": 16},
    "lstm": {"history": 4, "train": {"epochs": 10}}}"#;

fn pdm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdm"))
        .args(args)
        .current_dir(dir)
        .env_remove("PDM_SEED")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), SMALL).unwrap();
    dir
}

fn features(dir: &Path) {
    assert!(pdm(dir, &["simulate", "--config", "c.json", "--out", "data"]).status.success());
    let o = pdm(
        dir,
        &["features", "--config", "c.json", "--input", "data/telemetry.csv", "--truth", "data/ground_truth.jsonl", "--out", "f.csv"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let dir = setup();
    let o = pdm(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn missing_flag_is_usage_error() {
    let dir = setup();
    assert_eq!(pdm(dir.path(), &["simulate"]).status.code(), Some(1));
}

#[test]
fn simulate_writes_telemetry_and_truth() {
    let dir = setup();
    let o = pdm(dir.path(), &["simulate", "--config", "c.json", "--out", "data"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("data/telemetry.csv")).unwrap();
    assert!(csv.starts_with("timestamp_ms,machine_id,channel,value\n"));
    let truth = std::fs::read_to_string(dir.path().join("data/ground_truth.jsonl")).unwrap();
    assert_eq!(truth.lines().count(), 3);
    assert!(truth.lines().all(|l| l.contains("\"run_id\"") && l.contains("\"fault_onset_ms\"")));
}

#[test]
fn unknown_config_key_is_data_error() {
    let dir = setup();
    std::fs::write(dir.path().join("bad.json"), r#"{"n_rusn": 3}"#).unwrap();
    let o = pdm(dir.path(), &["simulate", "--config", "bad.json", "--out", "data"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("n_rusn"), "{e}");
    assert_eq!(e.trim_end().lines().count(), 1);
}

#[test]
fn bad_seed_env_is_data_error() {
    let dir = setup();
    let o = Command::new(env!("CARGO_BIN_EXE_pdm"))
        .args(["simulate", "--config", "c.json", "--out", "data"])
        .current_dir(dir.path())
        .env("PDM_SEED", "forty-two")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("PDM_SEED"));
}

#[test]
fn single_class_train_svm_names_degenerate_labels() {
    let dir = setup();
    let d = dir.path();
    features(d);
    let text = std::fs::read_to_string(d.join("f.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let negatives: Vec<&str> = lines.filter(|l| l.split(',').nth(3) == Some("-1")).collect();
    assert!(negatives.len() > 2);
    std::fs::write(d.join("one.csv"), format!("{header}\n{}\n", negatives.join("\n"))).unwrap();
    let o = pdm(d, &["train-svm", "--config", "c.json", "--features", "one.csv", "--out", "svm.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("DegenerateLabels"), "{}", stderr(&o));
}

#[test]
fn svm_no_convergence_is_numerical_error() {
    let dir = setup();
    let d = dir.path();
    features(d);
    std::fs::write(d.join("slow.json"), SMALL.replacen('{', r#"{"svm": {"c": 1000, "tolerance": 1e-9, "max_passes": 1, "kernel": "rbf"},"#, 1)).unwrap();
    let o = pdm(d, &["train-svm", "--config", "slow.json", "--features", "f.csv", "--out", "svm.json"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn lstm_divergence_is_numerical_error() {
    let dir = setup();
    let d = dir.path();
    features(d);
    std::fs::write(
        d.join("hot.json"),
        SMALL.replace(r#""train": {"epochs": 10}"#, r#""train": {"epochs": 10, "learning_rate": 1e300, "grad_clip": 1e300}"#),
    )
    .unwrap();
    let o = pdm(d, &["train-lstm", "--config", "hot.json", "--features", "f.csv", "--out", "lstm.json"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn missing_input_is_data_error() {
    let dir = setup();
    let o = pdm(dir.path(), &["train-rul", "--config", "c.json", "--features", "nope.csv", "--out", "r.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.csv"));
}

#[test]
fn evaluate_and_monitor_agree() {
    let dir = setup();
    let d = dir.path();
    features(d);
    for (cmd, out) in [("train-svm", "svm.json"), ("train-lstm", "lstm.json"), ("train-rul", "rul.json")] {
        let o = pdm(d, &[cmd, "--config", "c.json", "--features", "f.csv", "--out", out]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
    }
    let o = pdm(
        d,
        &[
            "evaluate", "--config", "c.json", "--features", "f.csv", "--svm", "svm.json", "--lstm", "lstm.json", "--rul",
            "rul.json", "--truth", "data/ground_truth.jsonl", "--out", "eval",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let metrics = std::fs::read_to_string(d.join("eval/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 5);
    assert!(d.join("eval/lead_times.csv").exists());

    let o = pdm(d, &["monitor", "--config", "c.json", "--input", "data/telemetry.csv", "--lstm", "lstm.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stream = String::from_utf8(o.stdout).unwrap();
    let mut lines = stream.lines();
    assert_eq!(lines.next(), Some("timestamp_ms,machine_id,rul_hat_ms,alert"));
    let mut streamed: Vec<(String, String, String)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert!(f[3] == "0" || f[3] == "1");
            (f[1].to_string(), f[0].to_string(), f[2].to_string())
        })
        .collect();
    let preds = std::fs::read_to_string(d.join("eval/predictions.csv")).unwrap();
    let mut batch: Vec<(String, String, String)> = preds
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string(), f[4].to_string())
        })
        .collect();
    streamed.sort();
    batch.sort();
    assert_eq!(streamed, batch);

    let again = pdm(d, &["monitor", "--config", "c.json", "--input", "data/telemetry.csv", "--lstm", "lstm.json"]);
    assert_eq!(stream.as_bytes(), again.stdout.as_slice());
}

#[test]
fn cost_reproduces_table() {
    let dir = setup();
    let d = dir.path();
    std::fs::write(
        d.join("costs.csv"),
        "period,preventive_usd,corrective_usd,failure_recovery_usd\nbefore,2000,3500,4300\nafter,2800,1200,1200\n",
    )
    .unwrap();
    let o = pdm(d, &["cost", "--input", "costs.csv", "--out", "cost"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.join("cost/cost_report.csv")).unwrap();
    assert!(csv.contains("9800.00") && csv.contains("5200.00") && csv.contains("4600.00"), "{csv}");

    std::fs::write(d.join("one.csv"), "period,preventive_usd,corrective_usd,failure_recovery_usd\nbefore,1,2,3\n").unwrap();
    assert_eq!(pdm(d, &["cost", "--input", "one.csv", "--out", "cost"]).status.code(), Some(2));
}
