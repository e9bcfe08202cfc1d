use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dosescreen"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stdout)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    let line = text
        .lines()
        .find(|l| l.contains("\"error\""))
        .unwrap_or_else(|| panic!("no JSON error in {text}"));
    serde_json::from_str(line).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_config(dir: &Path) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(
        &p,
        r#"{"n_estimators": 60, "learning_rate": 0.1, "num_leaves": 15, "max_depth": 5,
            "min_child_samples": 10, "lambda_l1": 0.0, "lambda_l2": 1.0,
            "feature_fraction": 0.8, "bagging_fraction": 0.8, "bagging_freq": 1,
            "early_stopping_patience": 20}"#,
    )
    .unwrap();
    p
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    corpus: PathBuf,
    features: PathBuf,
    config: PathBuf,
}

fn fixture(n: &str, strength: &str, seed: &str) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let corpus = root.join("corpus.jsonl");
    let features = root.join("features.fmx");
    ok(&["synth", "--n", n, "--strength", strength, "--seed", seed, "--out", s(&corpus)]);
    ok(&[
        "extract",
        "--corpus",
        s(&corpus),
        "--out",
        s(&features),
        "--word-max-features",
        "200",
        "--char-max-features",
        "100",
    ]);
    let config = small_config(&root);
    Fixture { _dir: dir, root, corpus, features, config }
}

fn train(f: &Fixture, out: &Path, seed: &str) -> Value {
    ok(&[
        "train",
        "--features",
        s(&f.features),
        "--labels-from",
        s(&f.corpus),
        "--config",
        s(&f.config),
        "--seed",
        seed,
        "--out",
        s(out),
    ])
}

#[test]
fn planted_signal_trains_to_high_oof_auc() {
    let f = fixture("1200", "1.0", "3");
    let report = train(&f, &f.root.join("run"), "3");
    let oof = report["oof_auc"].as_f64().unwrap();
    assert!(oof >= 0.95, "oof auc {oof}");
    assert_eq!(report["schema_version"], 1);
    for k in 0..5 {
        assert!(f.root.join(format!("run/model_fold{k}.json")).exists());
    }
    assert!(f.root.join("run/oof.csv").exists());
    assert!(f.root.join("features.registry.json").exists());
    assert!(f.root.join("features.vectorizers.json").exists());
}

#[test]
fn rerun_is_byte_identical() {
    let f = fixture("600", "1.0", "9");
    let a = f.root.join("a");
    let b = f.root.join("b");
    train(&f, &a, "7");
    train(&f, &b, "7");
    for name in ["oof.csv", "report.json", "folds.json", "model_fold0.json", "model_fold4.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }

    let pa = f.root.join("pa.csv");
    let pb = f.root.join("pb.csv");
    for p in [&pa, &pb] {
        ok(&["predict", "--models", s(&a), "--features", s(&f.features), "--out", s(p)]);
    }
    assert_eq!(fs::read(&pa).unwrap(), fs::read(&pb).unwrap());

    let again = f.root.join("again.fmx");
    ok(&[
        "extract",
        "--corpus",
        s(&f.corpus),
        "--out",
        s(&again),
        "--word-max-features",
        "200",
        "--char-max-features",
        "100",
    ]);
    assert_eq!(fs::read(&again).unwrap(), fs::read(&f.features).unwrap());
}

#[test]
fn predict_then_evaluate_with_sweep() {
    let f = fixture("600", "1.0", "5");
    let run_dir = f.root.join("run");
    train(&f, &run_dir, "5");
    let probs = f.root.join("probs.csv");
    ok(&[
        "predict",
        "--models",
        s(&run_dir),
        "--features",
        s(&f.features),
        "--ids-from",
        s(&f.corpus),
        "--out",
        s(&probs),
    ]);
    let text = fs::read_to_string(&probs).unwrap();
    assert!(text.starts_with("id,prob\n"));
    assert_eq!(text.lines().count(), 601);

    let sweep = f.root.join("sweep.csv");
    let eval = ok(&[
        "evaluate",
        "--probs",
        s(&probs),
        "--labels-from",
        s(&f.corpus),
        "--threshold",
        "0.5",
        "--sweep",
        "0.15,0.20,0.3744",
        "--sweep-out",
        s(&sweep),
    ]);
    assert_eq!(eval["schema_version"], 1);
    assert_eq!(eval["report"]["threshold"].as_f64(), Some(0.5));
    let rows: Vec<String> = fs::read_to_string(&sweep).unwrap().lines().map(String::from).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("threshold,tn,fp,fn,tp"));
    assert!(rows[3].starts_with("0.3744,"));

    let opt = ok(&["evaluate", "--probs", s(&probs), "--labels-from", s(&f.corpus), "--optimize-f1"]);
    assert!(opt["report"]["f1"].as_f64().unwrap() >= eval["report"]["f1"].as_f64().unwrap() - 1e-12);
}

#[test]
fn experiments_write_tables() {
    let f = fixture("500", "1.0", "11");
    let base = [
        "--features",
        s(&f.features),
        "--labels-from",
        s(&f.corpus),
        "--config",
        s(&f.config),
        "--folds",
        "3",
    ];
    let abl = f.root.join("abl");
    let mut args = vec!["ablate"];
    args.extend_from_slice(&base);
    args.extend_from_slice(&["--drop", "medical,char", "--out", s(&abl)]);
    let out = ok(&args);
    assert_eq!(out["rows"].as_array().unwrap().len(), 3);
    assert!(abl.join("ablation.md").exists() && abl.join("ablation.csv").exists());

    let topk = f.root.join("topk");
    let mut args = vec!["select-topk"];
    args.extend_from_slice(&base);
    args.extend_from_slice(&["--ks", "5,20", "--out", s(&topk)]);
    let out = ok(&args);
    assert_eq!(out["rows"].as_array().unwrap().len(), 2);

    let run_dir = f.root.join("run");
    train(&f, &run_dir, "1");
    let imp = ok(&["importance", "--models", s(&run_dir), "--features", s(&f.features)]);
    let total: f64 = imp["categories"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["percent"].as_f64().unwrap())
        .sum();
    assert!((total - 100.0).abs() < 1e-9, "{total}");
}

#[test]
fn tune_records_history() {
    let f = fixture("400", "1.0", "2");
    let hist = f.root.join("history.jsonl");
    let out = ok(&[
        "tune",
        "--features",
        s(&f.features),
        "--labels-from",
        s(&f.corpus),
        "--config",
        s(&f.config),
        "--folds",
        "3",
        "--trials",
        "2",
        "--sampler",
        "random",
        "--out",
        s(&hist),
    ]);
    assert_eq!(out["n_trials"], 2);
    assert_eq!(fs::read_to_string(&hist).unwrap().lines().count(), 2);

    let replay = ok(&[
        "tune",
        "replay",
        "--features",
        s(&f.features),
        "--labels-from",
        s(&f.corpus),
        "--config",
        s(&f.config),
        "--folds",
        "3",
    ]);
    assert_eq!(replay["trial"]["status"], "ok");
    assert_eq!(replay["trial"]["per_fold_auc"].as_array().unwrap().len(), 3);

    let bad = run(&[
        "tune",
        "--features",
        s(&f.features),
        "--labels-from",
        s(&f.corpus),
        "--sampler",
        "grid",
        "--out",
        s(&hist),
    ]);
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(error_json(&bad)["error"]["flag"], "--sampler");
}

#[test]
fn one_fold_is_a_usage_error_naming_the_flag() {
    let out = run(&[
        "train",
        "--features",
        "x.fmx",
        "--labels-from",
        "x.jsonl",
        "--folds",
        "1",
        "--out",
        "o",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["schema_version"], 1);
    assert_eq!(err["error"]["kind"], "usage");
    assert_eq!(err["error"]["flag"], "--folds");
}

#[test]
fn missing_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "train",
        "--features",
        s(&dir.path().join("nope.fmx")),
        "--labels-from",
        s(&dir.path().join("nope.jsonl")),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["error"]["kind"], "data");
}

#[test]
fn row_count_mismatch_is_a_data_error() {
    let f = fixture("300", "1.0", "4");
    let other = f.root.join("other.jsonl");
    ok(&["synth", "--n", "200", "--out", s(&other)]);
    let out = run(&[
        "train",
        "--features",
        s(&f.features),
        "--labels-from",
        s(&other),
        "--out",
        s(&f.root.join("o")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bad_flag_values_name_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["synth", "--n", "100", "--rate", "1.5", "--out", s(&dir.path().join("c.jsonl"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["flag"], "--rate");

    let out = run(&["evaluate", "--probs", "p", "--labels-from", "l", "--threshold", "0.2", "--optimize-f1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corpus_stats_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    ok(&["synth", "--n", "100", "--out", s(&corpus)]);
    let v = ok(&["corpus", "stats", "--corpus", s(&corpus)]);
    assert_eq!(v["schema_version"], 1);
    assert!(v["stats"].is_object());
}
