mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixture;

fn pipe_rating(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pipe-rating"));
    cmd.args(args).env_remove("PIPE_RATING_OUT_DIR");
    if let Some(dir) = out_env {
        cmd.env("PIPE_RATING_OUT_DIR", dir);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn generate_then_full_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let o = pipe_rating(
        &["generate", "--spec", fixture("gen_separable.toml").to_str().unwrap(), "--output", data.to_str().unwrap()],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("wrote 200 records"));

    let out = dir.path().join("out");
    let o = pipe_rating(
        &["report", "--input", data.to_str().unwrap(), "--alpha", "0", "--k", "1", "--out-dir", out.to_str().unwrap()],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("overall accuracy 100.00%"), "{}", stdout(&o));
    for name in ["screening.csv", "sweep.csv", "confusion_knn.csv", "report.txt", "model.json"] {
        assert!(out.join(name).is_file(), "{name}");
    }

    let o = pipe_rating(
        &["predict", "--model", out.join("model.json").to_str().unwrap(), "--input", data.to_str().unwrap()],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("pipe_id,predicted_rating"));
    let ratings: Vec<u8> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ratings.len(), 200);
    assert!(ratings.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn env_var_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    pipe_rating(
        &["generate", "--spec", fixture("gen_inventory.toml").to_str().unwrap(), "--output", data.to_str().unwrap()],
        None,
    );
    let env_out = dir.path().join("from-env");
    let o = pipe_rating(&["ingest", "--input", data.to_str().unwrap()], Some(&env_out));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("3100 in, 2970 retained (60 missing, 70 inconsistent"));
    assert!(env_out.join("cleaning_report.txt").is_file());
}

#[test]
fn k_range_too_large_fails() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    pipe_rating(
        &["generate", "--spec", fixture("gen_separable.toml").to_str().unwrap(), "--output", data.to_str().unwrap()],
        None,
    );
    let out = dir.path().join("out");
    let o = pipe_rating(
        &["sweep", "--input", data.to_str().unwrap(), "--alpha", "0", "--k-max", "500", "--out-dir", out.to_str().unwrap()],
        None,
    );
    assert!(!o.status.success());
    assert!(stderr(&o).contains("k exceeds training size"), "{}", stderr(&o));
}

#[test]
fn score_matrix_on_published_tables() {
    let arg = |name: &str, file: &str| format!("{name}={}", fixture(file).display());
    let o = pipe_rating(
        &[
            "score-matrix",
            &arg("K-NN", "knn_matrix.csv"),
            &arg("AHP", "ahp_matrix.csv"),
            &arg("NBC", "nbc_matrix.csv"),
            "--format",
            "json",
        ],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let acc: Vec<f64> = v["models"].as_array().unwrap().iter().map(|m| m["scores"]["overall_accuracy"].as_f64().unwrap()).collect();
    assert!((acc[0] - 227.0 / 310.0).abs() < 1e-12);
    assert!((acc[1] - 29.0 / 310.0).abs() < 1e-12);
    assert!((acc[2] - 164.0 / 310.0).abs() < 1e-12);
}

#[test]
fn sample_export_with_column_map() {
    let dir = tempfile::tempdir().unwrap();
    let o = pipe_rating(
        &[
            "ingest",
            "--input",
            fixture("sample_export.csv").to_str().unwrap(),
            "--columns",
            fixture("column_map.toml").to_str().unwrap(),
            "--out-dir",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let cleaned = std::fs::read_to_string(dir.path().join("cleaned.csv")).unwrap();
    assert!(cleaned.starts_with("Pipe ID,"));
    assert_eq!(cleaned.lines().count(), 6);
}

#[test]
fn missing_input_reports_stage() {
    let o = pipe_rating(&["ingest", "--input", "/nonexistent/records.csv"], None);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("stage 'ingest' failed"), "{}", stderr(&o));
}
