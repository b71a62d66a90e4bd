use std::process::Command;

use pbrff_harness::config::ExperimentConfig;
use pbrff_harness::landmarks_table::run_landmarks_table;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pbrff"))
}

fn fast_toy_config(dir: &std::path::Path) -> std::path::PathBuf {
    let mut cfg = ExperimentConfig::default();
    cfg.n_synthetic = 200;
    cfg.c_grid = vec![1.0, 10.0];
    cfg.seeds = vec![0];
    let path = dir.join("cfg.json");
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    path
}

#[test]
fn toy_subcommand_succeeds_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = fast_toy_config(dir.path());
    let status = bin()
        .args(["toy", "--config"])
        .arg(&cfg)
        .args(["--seed", "0", "--jobs", "1", "--output"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("results.csv").exists());
    assert!(out.join("surface_pb_l0.csv").exists());
    assert!(out.join("decision_rbf.csv").exists());
}

#[test]
fn invalid_config_fails_with_json_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"beta_grid": []}"#).unwrap();
    let output = bin().args(["toy", "--config"]).arg(&path).output().unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8(output.stderr).unwrap();
    let record: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert!(record["error"].as_str().unwrap().contains("beta_grid"));
}

#[test]
fn missing_dataset_fails_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.dataset = Some(dir.path().join("nope.csv"));
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let output = bin()
        .args(["landmarks", "--config"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(!output.stderr.is_empty());
}

#[test]
fn sweep_emits_one_row_per_fraction_mode_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.dataset = Some("../../data/breast.csv".into());
    cfg.label_column = 30;
    cfg.output_dir = dir.path().to_path_buf();
    cfg.seeds = vec![0, 1];
    cfg.sweep_fractions = vec![0.02, 0.05];
    cfg.beta_grid = vec![1.0];
    cfg.d_grid = vec![16];
    cfg.c_grid = vec![1.0];
    cfg.sigma = Some(10.0);
    let outcome = run_landmarks_table(&cfg).unwrap();
    let sweep: Vec<_> = outcome
        .rows
        .iter()
        .filter(|r| r.method == "PB-sweep")
        .collect();
    assert_eq!(sweep.len(), 2 * 2 * 2);
    for &fraction in &cfg.sweep_fractions {
        for mode in ["random", "kmeans"] {
            for &seed in &cfg.seeds {
                let matches = sweep
                    .iter()
                    .filter(|r| {
                        r.landmark_fraction == Some(fraction)
                            && r.selection.as_deref() == Some(mode)
                            && r.seed == seed
                    })
                    .count();
                assert_eq!(matches, 1, "({fraction}, {mode}, {seed})");
            }
        }
    }
}

#[test]
fn rerunning_a_row_reproduces_its_errors() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::default();
        cfg.dataset = Some("../../data/breast.csv".into());
        cfg.label_column = 30;
        cfg.output_dir = dir.path().to_path_buf();
        cfg.seeds = vec![3];
        cfg.run_sweep = false;
        cfg.beta_grid = vec![1.0, 10.0];
        cfg.d_grid = vec![16, 64];
        cfg.sigma = Some(10.0);
        run_landmarks_table(&cfg).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a.rows.len(), b.rows.len());
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x.method, y.method);
        assert_eq!(x.train_error, y.train_error);
        assert_eq!(x.valid_error, y.valid_error);
        assert_eq!(x.test_error, y.test_error);
        assert_eq!(x.c, y.c);
        assert_eq!(x.beta, y.beta);
    }
}

#[test]
fn bounds_subcommand_writes_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.dataset = Some(
        std::fs::canonicalize("../../data/breast.csv")
            .unwrap(),
    );
    cfg.label_column = 30;
    cfg.seeds = vec![0];
    cfg.d_grid = vec![16];
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["bounds", "--config"])
        .arg(&path)
        .arg("--output")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(out.join("bounds.jsonl")).unwrap();
    assert!(!text.is_empty());
    for line in text.lines() {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        let report = &record["report"];
        assert!(report["total"].as_f64().unwrap() >= report["empirical_loss"].as_f64().unwrap());
    }
}
