use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hiersum::policy::{read_checkpoint, HierPolicy};
use serde_json::Value;

fn hiersum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hiersum"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = hiersum(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, seed: u64) -> PathBuf {
    let seed = seed.to_string();
    let stdout = ok(&[
        "gen-synthetic",
        "--videos",
        "5",
        "--frames",
        "60",
        "--dim",
        "6",
        "--subtask-size",
        "10",
        "--seed",
        &seed,
        "--out",
        s(dir),
    ]);
    PathBuf::from(stdout.trim())
}

fn train(manifest: &Path, out: &Path, seed: &str, epochs: &str) {
    ok(&[
        "train",
        "--dataset",
        s(manifest),
        "--subtask-size",
        "10",
        "--episodes",
        "2",
        "--hidden",
        "6",
        "--epochs",
        epochs,
        "--seed",
        seed,
        "--out",
        s(out),
    ]);
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn first_feature_file(data: &Path) -> PathBuf {
    let mut files: Vec<PathBuf> = std::fs::read_dir(data.join("features"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files.remove(0)
}

#[test]
fn gen_synthetic_writes_every_video_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = gen(&dir.path().join("a"), 7);
    assert_eq!(manifest, dir.path().join("a").join("manifest.json"));
    assert_eq!(
        std::fs::read_dir(dir.path().join("a/features"))
            .unwrap()
            .count(),
        5
    );
    gen(&dir.path().join("b"), 7);
    for entry in std::fs::read_dir(dir.path().join("a/features")).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(
            std::fs::read(dir.path().join("a/features").join(&name)).unwrap(),
            std::fs::read(dir.path().join("b/features").join(&name)).unwrap()
        );
    }
}

#[test]
fn usage_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = hiersum(&["gen-synthetic", "--videos", "0", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let out = hiersum(&[
        "train",
        "--dataset",
        "m.json",
        "--alpha",
        "1.5",
        "--out",
        "r",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = hiersum(&["evaluate", "--run", "r", "--dataset", "m", "--metric", "x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let out = hiersum(&[
        "train",
        "--dataset",
        s(&missing),
        "--out",
        s(&dir.path().join("run")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn train_summarize_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let manifest = gen(&data, 3);
    let run = dir.path().join("run");
    train(&manifest, &run, "1", "2");
    for k in 0..5 {
        assert!(run.join(format!("fold_{k}.ckpt")).exists());
        assert!(run.join(format!("fold_{k}.log.jsonl")).exists());
    }
    let echo = read_json(&run.join("run.json"));
    assert_eq!(echo["command"], "train");
    assert_eq!(echo["flags"]["alpha"], 0.5);

    let video = first_feature_file(&data);
    let model = run.join("fold_0.ckpt");
    let summary_path = dir.path().join("summary.json");
    let scores_path = dir.path().join("scores.json");
    let partition = dir.path().join("shots.json");
    ok(&[
        "summarize",
        "--model",
        s(&model),
        "--video",
        s(&video),
        "--budget",
        "0.15",
        "--out",
        s(&summary_path),
        "--scores-out",
        s(&scores_path),
        "--partition",
        s(&partition),
    ]);
    let summary = read_json(&summary_path);
    let mask: Vec<u64> = summary["frame_mask"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(mask.len(), 60);
    assert!(mask.iter().sum::<u64>() <= 9);
    assert_eq!(
        read_json(&scores_path)["scores"].as_array().unwrap().len(),
        60
    );
    assert!(partition.exists());

    // the cached partition is reused and a full budget keeps every frame
    let stdout = ok(&[
        "summarize",
        "--model",
        s(&model),
        "--video",
        s(&video),
        "--budget",
        "1.0",
        "--partition",
        s(&partition),
    ]);
    let full: Value = serde_json::from_str(&stdout).unwrap();
    assert!(full["frame_mask"]
        .as_array()
        .unwrap()
        .iter()
        .all(|v| v == 1));

    let all_path = dir.path().join("all.json");
    ok(&[
        "evaluate",
        "--run",
        s(&run),
        "--dataset",
        s(&manifest),
        "--out",
        s(&all_path),
    ]);
    let all = read_json(&all_path);
    for key in ["mean_F", "mean_tau", "mean_rho"] {
        assert!(all[key].is_number(), "{key} missing");
    }
    assert_eq!(all["setting"], "canonical");

    let tau_path = dir.path().join("tau.json");
    ok(&[
        "evaluate",
        "--run",
        s(&run),
        "--dataset",
        s(&manifest),
        "--metric",
        "tau",
        "--out",
        s(&tau_path),
    ]);
    let tau = read_json(&tau_path);
    assert!(tau.get("mean_F").is_none());
    assert!(tau["mean_tau"].is_number());
    let fold = &tau["per_fold"][0];
    assert!(fold.get("mean_F").is_none());
    assert!(fold["videos"][0].get("F").is_none());
}

fn schema(value: &Value, prefix: &str, out: &mut BTreeSet<String>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let path = format!("{prefix}.{k}");
                out.insert(path.clone());
                schema(v, &path, out);
            }
        }
        Value::Array(items) => {
            for v in items {
                schema(v, &format!("{prefix}[]"), out);
            }
        }
        _ => {}
    }
}

#[test]
fn reports_of_two_seeds_share_a_schema() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = gen(&dir.path().join("data"), 4);
    let mut schemas = Vec::new();
    let mut reports = Vec::new();
    for seed in ["1", "2"] {
        let run = dir.path().join(format!("run{seed}"));
        train(&manifest, &run, seed, "1");
        ok(&["evaluate", "--run", s(&run), "--dataset", s(&manifest)]);
        let report = read_json(&run.join("report.json"));
        let mut keys = BTreeSet::new();
        schema(&report, "", &mut keys);
        schemas.push(keys);
        reports.push(report);
    }
    assert_eq!(schemas[0], schemas[1]);
    assert_ne!(reports[0], reports[1]);
}

#[test]
fn zero_epochs_keep_the_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = gen(&dir.path().join("data"), 5);
    let run = dir.path().join("run");
    train(&manifest, &run, "9", "0");
    let (policy, _) = read_checkpoint::<f64>(&run.join("fold_2.ckpt")).unwrap();
    let fresh = HierPolicy::<f64>::new(6, 6, 9);
    let values = |p: &HierPolicy| -> Vec<Vec<f64>> {
        p.named_params().map(|(_, v)| v.value.clone()).collect()
    };
    assert_eq!(values(&policy), values(&fresh));
}

#[test]
fn summarize_rejects_mismatched_features() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = gen(&dir.path().join("data"), 6);
    let run = dir.path().join("run");
    train(&manifest, &run, "1", "0");
    let other = dir.path().join("other");
    ok(&[
        "gen-synthetic",
        "--videos",
        "1",
        "--frames",
        "40",
        "--dim",
        "4",
        "--subtask-size",
        "10",
        "--out",
        s(&other),
    ]);
    let out = hiersum(&[
        "summarize",
        "--model",
        s(&run.join("fold_0.ckpt")),
        "--video",
        s(&first_feature_file(&other)),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration error"));
}
