mod common;

use std::fs;
use std::path::Path;

use common::*;
use pipe_rating::encoding::FactorSchema;
use pipe_rating::ingest::{load_records, write_records, ColumnMap};
use pipe_rating::metrics::{overall_accuracy, ConfusionMatrix};
use pipe_rating::pipeline::{self, *};
use pipe_rating::synthgen::GenSpec;
use pipe_rating::Error;

fn generated(dir: &Path, spec: &GenSpec) -> std::path::PathBuf {
    let path = dir.join("records.csv");
    pipeline::cmd_generate(spec, &path, &ColumnMap::default()).unwrap();
    path
}

fn config(input: &Path, out: &Path) -> RunConfig {
    let mut c = RunConfig::new(input, out);
    c.alpha = 0.0;
    c
}

#[test]
fn artifacts_present_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = GenSpec::new(600, 21);
    spec.noise = 0.05;
    spec.missing = 4;
    spec.inconsistent = 3;
    let input = generated(dir.path(), &spec);
    let out = dir.path().join("out");
    let outcome = cmd_pipeline(&config(&input, &out)).unwrap();

    for name in [
        CLEANING_TXT,
        CLEANING_JSON,
        CLEANED_CSV,
        SCREENING_CSV,
        SWEEP_CSV,
        MODEL_JSON,
        NB_MODEL_JSON,
        CONFUSION_KNN_CSV,
        CONFUSION_NBC_CSV,
        SCORES_CSV,
        SCORES_JSON,
        REPORT_TXT,
    ] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    assert_eq!(outcome.cleaning.retained, 593);

    // chosen K's validation error in the sweep table matches the confusion matrix
    let matrix = ConfusionMatrix::load_csv(out.join(CONFUSION_KNN_CSV)).unwrap();
    let sweep = fs::read_to_string(out.join(SWEEP_CSV)).unwrap();
    let k = outcome.chosen_k.unwrap();
    let row: Vec<&str> = sweep.lines().nth(k).unwrap().split(',').collect();
    assert_eq!(row[0], k.to_string());
    let rate: f64 = row[4].parse().unwrap();
    let accuracy = overall_accuracy(&matrix).unwrap();
    assert!((1.0 - accuracy - rate).abs() < 1e-5, "{accuracy} vs {rate}");
    assert_eq!(row[3], matrix.total().to_string());

    let report = fs::read_to_string(out.join(REPORT_TXT)).unwrap();
    assert!(report.contains("rows = predicted rating, columns = actual rating"));
    assert!(report.contains("0.31290"));
    assert!(report.contains(&format!("{:.2}", 100.0 * accuracy)));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = generated(dir.path(), &GenSpec::new(300, 8));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    cmd_pipeline(&config(&input, &a)).unwrap();
    cmd_pipeline(&config(&input, &b)).unwrap();
    for entry in fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?} differs");
    }
}

#[test]
fn predict_on_validation_sized_file() {
    let dir = tempfile::tempdir().unwrap();
    let train_input = generated(dir.path(), &GenSpec::new(930, 1));
    let out = dir.path().join("out");
    run(&config(&train_input, &out), Stage::Train).unwrap();

    let holdout = dir.path().join("holdout.csv");
    pipeline::cmd_generate(&GenSpec::new(310, 2), &holdout, &ColumnMap::default()).unwrap();
    let preds = cmd_predict(&out.join(MODEL_JSON), &holdout, &ColumnMap::default()).unwrap();
    assert_eq!(preds.len(), 310);
    assert!(preds.windows(2).all(|w| w[0].predicted_rating >= w[1].predicted_rating));

    let (report, _) = cmd_evaluate(&out.join(MODEL_JSON), &holdout, &ColumnMap::default(), &dir.path().join("eval")).unwrap();
    assert_eq!(report.models[0].scores.total, 310);
}

#[test]
fn training_records_reproduced_at_k1() {
    let dir = tempfile::tempdir().unwrap();
    let input = generated(dir.path(), &GenSpec::separable(200, 3));
    let out = dir.path().join("out");
    let mut c = config(&input, &out);
    c.k = Some(1);
    run(&c, Stage::Train).unwrap();
    let model = PersistedModel::load(out.join(MODEL_JSON)).unwrap();
    let train_ids: Vec<String> = model.knn.training().iter().map(|v| v.pipe_id.clone()).collect();
    let records: Vec<_> = load_records(&input, &ColumnMap::default())
        .unwrap()
        .records
        .into_iter()
        .filter(|r| train_ids.contains(&r.pipe_id))
        .collect();
    let preds = predict_records(&model, &records).unwrap();
    assert_eq!(preds.len(), records.len());
    for p in preds {
        let rec = records.iter().find(|r| r.pipe_id == p.pipe_id).unwrap();
        assert_eq!(Some(p.predicted_rating), rec.comprehensive_rating);
    }
}

#[test]
fn predict_rejects_schema_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let input = generated(dir.path(), &GenSpec::new(80, 9));
    let out = dir.path().join("out");
    run(&config(&input, &out), Stage::Train).unwrap();
    let mut model = PersistedModel::load(out.join(MODEL_JSON)).unwrap();

    // a shape outside the schema cannot be scored
    let mut records = load_records(&input, &ColumnMap::default()).unwrap().records;
    records[0].shape = Some("Triangular".into());
    records[0].comprehensive_rating = None;
    assert!(matches!(predict_records(&model, &records[..1]), Err(Error::Encoding(_))));

    // a model whose factors are not in its schema is refused
    model.knn.factors[0] = "Colour".into();
    let text = model.to_json().unwrap();
    assert!(matches!(PersistedModel::from_json(&text), Err(Error::ModelMismatch(_))));
}

#[test]
fn unlabeled_records_can_be_predicted() {
    let dir = tempfile::tempdir().unwrap();
    let input = generated(dir.path(), &GenSpec::new(100, 10));
    let out = dir.path().join("out");
    run(&config(&input, &out), Stage::Train).unwrap();
    let mut records = load_records(&input, &ColumnMap::default()).unwrap().records;
    for r in &mut records {
        r.comprehensive_rating = None;
    }
    let unlabeled = dir.path().join("unlabeled.csv");
    write_records(fs::File::create(&unlabeled).unwrap(), &records, &ColumnMap::default()).unwrap();
    assert_eq!(cmd_predict(&out.join(MODEL_JSON), &unlabeled, &ColumnMap::default()).unwrap().len(), 100);
}

#[test]
fn published_matrices_report() {
    let named: Vec<(String, std::path::PathBuf)> = [("K-NN", "knn_matrix.csv"), ("AHP", "ahp_matrix.csv"), ("NBC", "nbc_matrix.csv")]
        .iter()
        .map(|(n, f)| (n.to_string(), fixture(f)))
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let (report, written) = cmd_score_matrix(&named, Some(dir.path())).unwrap();
    assert_eq!(written.len(), 3);
    let acc: Vec<String> = report.models.iter().map(|m| format!("{:.2}", 100.0 * m.scores.overall_accuracy)).collect();
    assert_eq!(acc, ["73.23", "9.35", "52.90"]);
    let text = report.render_text();
    assert!(text.contains("73.23"));
    let csv = fs::read_to_string(dir.path().join(SCORES_CSV)).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("K-NN,1,0.958065")));
}

#[test]
fn empty_projection_is_a_stage_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = generated(dir.path(), &GenSpec::new(200, 4));
    // at the default level every rank column fails normality
    let c = RunConfig::new(&input, dir.path().join("out"));
    match cmd_pipeline(&c) {
        Err(Error::Stage { stage, source }) => {
            assert_eq!(stage, "project");
            assert!(matches!(*source, Error::EmptyProjection));
        }
        other => panic!("expected a project-stage error, got {other:?}"),
    }
    assert!(dir.path().join("out").join(SCREENING_CSV).is_file());
}

#[test]
fn custom_schema_file_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let input = generated(dir.path(), &GenSpec::new(120, 12));
    let schema_path = dir.path().join("schema.toml");
    fs::write(&schema_path, FactorSchema::default_schema().to_toml_string().unwrap()).unwrap();
    let mut c = config(&input, &dir.path().join("out"));
    c.schema = Some(schema_path);
    c.rules = Some(fixture("cleaning_rules.toml"));
    let outcome = run(&c, Stage::Screen).unwrap();
    assert_eq!(outcome.screening.unwrap().results.len(), 12);
}
