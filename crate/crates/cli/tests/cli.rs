use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use galaxy_cli::commands;
use galaxy_cli::config::{ModelSelector, RunConfig};

const HEADER: &str = "objid,spectra,p_el,p_cw,p_acw,p_edge,p_dk,p_mg,p_cs,p_el_debiased,p_cs_debiased,spiral,elliptical,uncertain";

fn galaxy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_galaxy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth_file(dir: &Path, n: usize, seed: u64) -> std::path::PathBuf {
    let path = dir.join(format!("synth_{n}_{seed}.csv"));
    let mut cfg = RunConfig {
        seed,
        out: path.clone(),
        ..RunConfig::default()
    };
    cfg.synth.n = n;
    commands::synth(&cfg).unwrap();
    path
}

#[test]
fn ingest_ten_rows() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("ten.csv");
    let mut text = format!("{HEADER}\n");
    for i in 0..10 {
        let flags = ["1,0,0", "0,1,0", "0,0,1"][i % 3];
        text.push_str(&format!(
            "{i},1,0.1,0.2,0.3,0.1,0.1,0.2,0.6,0.1,0.7,{flags}\n"
        ));
    }
    fs::write(&input, text).unwrap();
    let out = dir.path().join("report");
    let o = galaxy(&["ingest", "--input", s(&input), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("ingest_report.json")).unwrap()).unwrap();
    assert_eq!(report["rows_read"], 10);
    assert_eq!(report["rows_rejected"], 0);
    assert_eq!(report["format_version"], 1);
    assert_eq!(
        fs::read_to_string(out.join("class_distribution.csv")).unwrap(),
        "class,count\n0,4\n1,3\n2,3\n"
    );
}

#[test]
fn missing_column_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    fs::write(&input, HEADER.replace(",p_mg", "") + "\n").unwrap();
    let o = galaxy(&["ingest", "--input", s(&input), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    let line: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(line["error"], "schema");
    assert!(line["message"].as_str().unwrap().contains("p_mg"));
}

#[test]
fn missing_input_is_a_config_error() {
    let o = galaxy(&["train"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("\"config\""));
}

#[test]
fn synthetic_distribution_is_balanced() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_file(dir.path(), 6000, 17);
    let cfg = RunConfig {
        input: Some(input),
        out: dir.path().join("ingest"),
        ..RunConfig::default()
    };
    let report = commands::ingest(&cfg).unwrap();
    assert_eq!(report.class_counts, vec![2000, 2000, 2000]);
    assert_eq!(report.rows_rejected, 0);
}

#[test]
fn tiny_synth_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = galaxy(&["synth", "--n", "3", "--seed", "5", "--out", s(p)]);
        assert!(o.status.success());
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().count(), 4);
    let cfg = RunConfig {
        input: Some(a),
        out: dir.path().join("r"),
        ..RunConfig::default()
    };
    let report = commands::ingest(&cfg).unwrap();
    assert_eq!(report.rows_rejected, 0);
    assert_eq!(report.rows_read, 3);
    assert_eq!(report.class_counts, vec![1, 1, 1]);
}

#[test]
fn knn_grid_search_writes_one_row_per_k() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig {
        input: Some(synth_file(dir.path(), 300, 1)),
        model: ModelSelector::Knn,
        out: dir.path().join("search"),
        ..RunConfig::default()
    };
    cfg.knn.grid = (1..=10).collect();
    let outcome = commands::search(&cfg).unwrap();
    assert_eq!(outcome.rows.len(), 10);
    let best = outcome.best.best[0].score;
    assert!(outcome.rows.iter().all(|r| r.score.unwrap() <= best));
    let csv = fs::read_to_string(cfg.out.join("search.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
    assert!(!cfg.out.join("search_runs.csv").exists());
}

#[test]
fn mlp_search_records_every_fold_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig {
        input: Some(synth_file(dir.path(), 300, 2)),
        model: ModelSelector::Mlp,
        out: dir.path().join("search"),
        ..RunConfig::default()
    };
    cfg.mlp.train.epochs = 3;
    let outcome = commands::search(&cfg).unwrap();
    assert_eq!(outcome.rows.len(), 4);
    assert_eq!(outcome.fold_runs, 12);
    let runs = fs::read_to_string(cfg.out.join("search_runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 13);
    let best: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(cfg.out.join("best.json")).unwrap()).unwrap();
    assert_eq!(best["format_version"], 1);
    assert_eq!(best["best"][0]["model"], "mlp");
}

#[test]
fn train_both_writes_comparison_and_reloadable_model() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_file(dir.path(), 600, 3);
    let out = dir.path().join("train");
    let o = galaxy(&[
        "train",
        "--input",
        s(&input),
        "--out",
        s(&out),
        "--epochs",
        "20",
        "--k",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "eval.json",
        "comparison.json",
        "model.json",
        "confusion.csv",
        "importance.csv",
        "knn_grid.csv",
        "mlp_history.csv",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let cmp: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("comparison.json")).unwrap()).unwrap();
    assert_eq!(cmp["format_version"], 1);
    assert_eq!(cmp["models"].as_array().unwrap().len(), 2);
    let history = fs::read_to_string(out.join("mlp_history.csv")).unwrap();
    assert_eq!(history.lines().count(), 21);
    let model: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("model.json")).unwrap()).unwrap();
    assert_eq!(model["knn"]["k"], 3);
    assert_eq!(model["format_version"], 1);
    let mlp = commands::load_mlp(&out.join("model.json")).unwrap();
    assert_eq!(mlp.architecture.hidden_dims, vec![64, 64]);
}

#[test]
fn separable_run_reaches_high_accuracy_for_both_models() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        input: Some(synth_file(dir.path(), 1500, 4)),
        importance_repeats: 0,
        out: dir.path().join("train"),
        ..RunConfig::default()
    };
    let doc = commands::train(&cfg).unwrap();
    for m in &doc.models {
        assert!(m.test.accuracy >= 0.95, "{} {}", m.model, m.test.accuracy);
    }
    assert!(doc.warnings.iter().any(|w| w.contains("leakage")));
    let again = commands::train(&RunConfig {
        out: dir.path().join("again"),
        ..cfg.clone()
    })
    .unwrap();
    assert_eq!(doc, again);
    assert_eq!(
        fs::read(cfg.out.join("eval.json")).unwrap(),
        fs::read(dir.path().join("again").join("eval.json")).unwrap()
    );
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_file(dir.path(), 300, 6);
    let config = dir.path().join("run.json");
    fs::write(
        &config,
        serde_json::json!({"input": input, "model": "mlp", "mlp": {"train": {"epochs": 2}}})
            .to_string(),
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = galaxy(&[
        "train",
        "--config",
        s(&config),
        "--model",
        "knn",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("knn_grid.csv").exists());
    assert!(!out.join("mlp_history.csv").exists());
    assert!(!out.join("comparison.json").exists());
}

#[test]
fn empty_search_space_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_file(dir.path(), 120, 7);
    let config = dir.path().join("run.json");
    fs::write(
        &config,
        serde_json::json!({"input": input, "search": {"space": {"hidden_widths": []}}}).to_string(),
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = galaxy(&[
        "search",
        "--config",
        s(&config),
        "--model",
        "mlp",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("best.json").exists());
}

#[test]
fn diverging_training_exits_with_epoch_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_file(dir.path(), 120, 8);
    let config = dir.path().join("run.json");
    fs::write(
        &config,
        serde_json::json!({
            "input": input,
            "mlp": {"train": {"optimizer": "sgd", "learning_rate": 1e300}}
        })
        .to_string(),
    )
    .unwrap();
    let o = galaxy(&[
        "train",
        "--config",
        s(&config),
        "--model",
        "mlp",
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let line: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert!(line["message"].as_str().unwrap().contains("epoch"));
}

#[test]
fn synth_to_unwritable_path_fails() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = galaxy(&[
        "synth",
        "--n",
        "3",
        "--out",
        s(&blocker.join("sub").join("x.csv")),
    ]);
    assert!(!o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stderr).lines().count(), 1);
}
