use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ranpredict(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ranpredict"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn synth_writes_header_plus_rows() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(ranpredict(dir.path(), &["synth", "a.csv", "-n", "1000"]));
    assert!(stdout.contains("1000 records"));
    assert_eq!(fs::read_to_string(dir.path().join("a.csv")).unwrap().lines().count(), 1001);
    ok(ranpredict(dir.path(), &["synth", "b.csv", "-n", "1000"]));
    assert_eq!(fs::read(dir.path().join("a.csv")).unwrap(), fs::read(dir.path().join("b.csv")).unwrap());
}

#[test]
fn empty_synth_warns() {
    let dir = tempfile::tempdir().unwrap();
    let out = ranpredict(dir.path(), &["synth", "e.csv", "-n", "0"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("header-only"));
    assert_eq!(fs::read_to_string(dir.path().join("e.csv")).unwrap().lines().count(), 1);
}

#[test]
fn train_writes_model_and_scaler_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "n_samples = 600\nforest_n_trees = 10\nxgb_n_rounds = 20\nlgbm_n_rounds = 20\n").unwrap();
    let common = ["--config", "run.toml", "--out", "out"];
    ok(ranpredict(dir.path(), &[&common[..], &["synth", "data.csv"]].concat()));
    let stdout = ok(ranpredict(dir.path(), &[&common[..], &["train", "--input", "data.csv"]].concat()));
    assert_eq!(stdout.matches("wall time").count(), 5);
    for f in ["linear", "tree", "forest", "xgb_like", "lgbm_like"] {
        assert!(dir.path().join(format!("out/models/{f}.json")).is_file(), "{f}");
    }
    assert_eq!(fs::read_dir(dir.path().join("out/models")).unwrap().count(), 5);
    assert!(dir.path().join("out/scaler.json").is_file());

    let stdout = ok(ranpredict(dir.path(), &[&common[..], &["evaluate", "--input", "data.csv"]].concat()));
    assert_eq!(stdout.lines().count(), 6);
    let comparison = fs::read_to_string(dir.path().join("out/comparison.csv")).unwrap();
    assert_eq!(comparison.lines().count(), 6);
    let report = ok(ranpredict(dir.path(), &[&common[..], &["report"]].concat()));
    assert!(report.contains("report.md"));

    let linear = ranpredict(dir.path(), &["importance", "out/models/linear.json"]);
    assert_eq!(linear.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&linear.stderr).contains("linear"));
    ok(ranpredict(dir.path(), &["importance", "out/models/forest.json", "-o", "imp.csv"]));
    let imp = fs::read_to_string(dir.path().join("imp.csv")).unwrap();
    let total: f64 = imp.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn unbounded_tree_memorizes_training_rows() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "n_samples = 400\ntree_max_depth = -1\ntree_min_samples_leaf = 1\n").unwrap();
    let common = ["--config", "run.toml", "--models", "tree", "--out", "out"];
    ok(ranpredict(dir.path(), &[&common[..], &["synth", "d.csv"]].concat()));
    ok(ranpredict(dir.path(), &[&common[..], &["train", "--input", "d.csv"]].concat()));
    ok(ranpredict(dir.path(), &[&common[..], &["evaluate", "--input", "d.csv", "--partition", "train"]].concat()));
    let comparison = fs::read_to_string(dir.path().join("out/comparison.csv")).unwrap();
    let row: Vec<&str> = comparison.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "tree");
    assert_eq!(row[3].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn report_on_empty_dir_lists_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = ranpredict(dir.path(), &["--models", "linear,tree", "--out", "nothing", "report"]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    for f in ["comparison.csv", "scatter_linear.csv", "error_hist_tree.csv", "importance_tree.csv"] {
        assert!(err.contains(f), "{err}");
    }
}

#[test]
fn distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "no_such_key = 1\n").unwrap();
    assert_eq!(ranpredict(dir.path(), &["--config", "bad.toml", "synth", "x.csv"]).status.code(), Some(2));
    fs::write(dir.path().join("junk.json"), "{not json").unwrap();
    assert_eq!(ranpredict(dir.path(), &["importance", "junk.json"]).status.code(), Some(3));
    assert_eq!(ranpredict(dir.path(), &["train", "--input", "absent.csv"]).status.code(), Some(4));
}
