//! End-to-end runs: ingest, clean, encode, screen, split, sweep, train,
//! evaluate and report, with every stage's artifacts written to disk.
//!
//! Each run stops after a chosen [`Stage`], so the `ingest`, `screen`,
//! `sweep` and `train` subcommands are prefixes of the full pipeline.
//! Artifacts of completed stages stay on disk when a later stage fails.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{nb_fit, nb_predict_all, NbModel, DEFAULT_SMOOTHING};
use crate::encoding::{encode_dataset, project, FactorSchema};
use crate::error::{Error, Result};
use crate::ingest::{clean, load_records, load_records_with, write_records, CleaningReport, CleaningRules, ColumnMap, LoadOptions, RowDiagnostic};
use crate::knn::{sweep_k, KnnModel, SplitSpec, SweepResult, TieBreak};
use crate::metrics::{confusion, report, ComparisonReport, ConfusionMatrix};
use crate::rating::Rating;
use crate::screening::{screen, ScreeningReport, DEFAULT_ALPHA};
use crate::synthgen::{generate, GenSpec};

/// Overrides the output directory of every command.
pub const OUT_DIR_ENV: &str = "PIPE_RATING_OUT_DIR";
pub const DEFAULT_K_MAX: usize = 30;

pub const CLEANED_CSV: &str = "cleaned.csv";
pub const CLEANING_TXT: &str = "cleaning_report.txt";
pub const CLEANING_JSON: &str = "cleaning_report.json";
pub const SCREENING_CSV: &str = "screening.csv";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const MODEL_JSON: &str = "model.json";
pub const NB_MODEL_JSON: &str = "nb_model.json";
pub const CONFUSION_KNN_CSV: &str = "confusion_knn.csv";
pub const CONFUSION_NBC_CSV: &str = "confusion_nbc.csv";
pub const SCORES_CSV: &str = "scores.csv";
pub const SCORES_JSON: &str = "scores.json";
pub const REPORT_TXT: &str = "report.txt";
pub const PREDICTIONS_CSV: &str = "predictions.csv";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

/// Last stage a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Screen,
    Sweep,
    Train,
    Report,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub columns: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub split: SplitSpec,
    pub alpha: f64,
    /// Sweep K = 1..=k_max.
    pub k_max: usize,
    /// Fixed K for the final model; the sweep's best K when absent.
    pub k: Option<usize>,
    pub tie_break: TieBreak,
    pub smoothing: f64,
    pub out_dir: PathBuf,
    pub format: ReportFormat,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            input: input.into(),
            columns: None,
            schema: None,
            rules: None,
            split: SplitSpec::default(),
            alpha: DEFAULT_ALPHA,
            k_max: DEFAULT_K_MAX,
            k: None,
            tie_break: TieBreak::default(),
            smoothing: DEFAULT_SMOOTHING,
            out_dir: out_dir.into(),
            format: ReportFormat::Text,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1), got {}", self.alpha)));
        }
        if self.k_max == 0 {
            return Err(Error::Config("k range must include at least K = 1".into()));
        }
        if self.k == Some(0) {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(self.split.train_fraction > 0.0 && self.split.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction must lie in (0, 1), got {}",
                self.split.train_fraction
            )));
        }
        if !(self.smoothing > 0.0 && self.smoothing.is_finite()) {
            return Err(Error::InvalidSmoothing(self.smoothing));
        }
        Ok(())
    }
}

/// Output directory: the environment override if set, else `default`.
pub fn resolve_out_dir(default: impl Into<PathBuf>) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => default.into(),
    }
}

/// K-NN model bundled with the schema needed to encode new records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistedModel {
    pub schema: FactorSchema,
    pub knn: KnnModel,
}

impl PersistedModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut model: PersistedModel = serde_json::from_str(text)?;
        model.knn.restore()?;
        let names = model.schema.factor_names();
        if let Some(missing) = model.knn.factors.iter().find(|f| !names.contains(f)) {
            return Err(Error::ModelMismatch(format!("model factor '{missing}' is not in its schema")));
        }
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// What a run produced; later-stage fields are `None` when the run stopped early.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub diagnostics: Vec<RowDiagnostic>,
    pub cleaning: CleaningReport,
    pub screening: Option<ScreeningReport>,
    pub sweep: Option<SweepResult>,
    pub chosen_k: Option<usize>,
    pub model: Option<PersistedModel>,
    pub nb_model: Option<NbModel>,
    pub comparison: Option<ComparisonReport>,
    pub artifacts: Vec<PathBuf>,
}

impl RunOutcome {
    /// One-paragraph human summary of the run.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "records: {} in, {} retained ({} missing, {} inconsistent, {} unreadable rows)\n",
            self.cleaning.total_in,
            self.cleaning.retained,
            self.cleaning.dropped_missing,
            self.cleaning.dropped_inconsistent,
            self.diagnostics.len()
        );
        if let Some(s) = &self.screening {
            out.push_str(&format!(
                "screening (alpha {}): {} of {} factors retained\n",
                s.alpha,
                s.retained.len(),
                s.results.len()
            ));
        }
        if let Some(s) = &self.sweep {
            let best = s.best();
            out.push_str(&format!(
                "sweep: best K = {} (validation misclassification {:.5})\n",
                best.k, best.validation_misclassification
            ));
        }
        if let Some(k) = self.chosen_k {
            out.push_str(&format!("model K = {k}\n"));
        }
        if let Some(c) = &self.comparison {
            for m in &c.models {
                out.push_str(&format!(
                    "{}: overall accuracy {:.2}% ({}/{})\n",
                    m.name,
                    100.0 * m.scores.overall_accuracy,
                    m.scores.correct,
                    m.scores.total
                ));
            }
        }
        out.push_str("artifacts:\n");
        for a in &self.artifacts {
            out.push_str(&format!("  {}\n", a.display()));
        }
        out
    }
}

struct Inputs {
    columns: ColumnMap,
    schema: FactorSchema,
    rules: CleaningRules,
}

fn load_inputs(config: &RunConfig) -> Result<Inputs> {
    let columns = match &config.columns {
        Some(p) => ColumnMap::load(p)?,
        None => ColumnMap::default(),
    };
    let schema = match &config.schema {
        Some(p) => FactorSchema::load(p)?,
        None => FactorSchema::default_schema(),
    };
    let rules = match &config.rules {
        Some(p) => CleaningRules::load(p)?,
        None => CleaningRules::default(),
    };
    rules.validate()?;
    Ok(Inputs { columns, schema, rules })
}

/// Writes `bytes` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn to_csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

struct Artifacts<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl Artifacts<'_> {
    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }
}

/// Runs the pipeline up to and including `until`.
pub fn run(config: &RunConfig, until: Stage) -> Result<RunOutcome> {
    config.validate().map_err(|e| e.at_stage("config"))?;
    let inputs = load_inputs(config).map_err(|e| e.at_stage("config"))?;
    let mut out = Artifacts { dir: &config.out_dir, written: Vec::new() };

    // ingest + clean
    let loaded = load_records(&config.input, &inputs.columns).map_err(|e| e.at_stage("ingest"))?;
    let (records, cleaning) = clean(&loaded.records, &inputs.rules);
    let write_cleaning = |out: &mut Artifacts| -> Result<()> {
        let mut text = cleaning.render_text();
        if !loaded.diagnostics.is_empty() {
            text.push_str("\nRejected rows\n");
            for d in &loaded.diagnostics {
                text.push_str(&format!("  {d}\n"));
            }
        }
        out.put(CLEANING_TXT, text.as_bytes())?;
        out.put(CLEANING_JSON, serde_json::to_string_pretty(&cleaning)?.as_bytes())?;
        out.put(CLEANED_CSV, &to_csv_bytes(|b| write_records(b, &records, &inputs.columns))?)
    };
    write_cleaning(&mut out).map_err(|e| e.at_stage("clean"))?;
    let mut outcome = RunOutcome {
        diagnostics: loaded.diagnostics.clone(),
        cleaning: cleaning.clone(),
        screening: None,
        sweep: None,
        chosen_k: None,
        model: None,
        nb_model: None,
        comparison: None,
        artifacts: Vec::new(),
    };
    if until == Stage::Ingest {
        outcome.artifacts = out.written;
        return Ok(outcome);
    }

    // encode + screen + project
    let encoded = encode_dataset(&records, &inputs.schema).map_err(|e| e.at_stage("encode"))?;
    let screening = screen(&encoded, config.alpha).map_err(|e| e.at_stage("screen"))?;
    out.put(SCREENING_CSV, &to_csv_bytes(|b| screening.write_csv(b))?)
        .map_err(|e| e.at_stage("screen"))?;
    let projected = project(&encoded, &screening.retained).map_err(|e| e.at_stage("project"))?;
    outcome.screening = Some(screening);
    if until == Stage::Screen {
        outcome.artifacts = out.written;
        return Ok(outcome);
    }

    // split + sweep
    let (train, valid) = crate::knn::split(&projected, &config.split).map_err(|e| e.at_stage("split"))?;
    let sweep = sweep_k(&train, &valid, config.k_max, config.tie_break).map_err(|e| e.at_stage("sweep"))?;
    out.put(SWEEP_CSV, &to_csv_bytes(|b| sweep.write_csv(b))?)
        .map_err(|e| e.at_stage("sweep"))?;
    let k = config.k.unwrap_or(sweep.best_k);
    outcome.sweep = Some(sweep);
    if until == Stage::Sweep {
        outcome.artifacts = out.written;
        return Ok(outcome);
    }

    // train
    let knn = KnnModel::fit(&train, k, config.tie_break).map_err(|e| e.at_stage("train"))?;
    let nb = nb_fit(&train, config.smoothing).map_err(|e| e.at_stage("train"))?;
    let model = PersistedModel { schema: inputs.schema.clone(), knn };
    let write_models = |out: &mut Artifacts| -> Result<()> {
        out.put(MODEL_JSON, model.to_json()?.as_bytes())?;
        out.put(NB_MODEL_JSON, nb.to_json()?.as_bytes())
    };
    write_models(&mut out).map_err(|e| e.at_stage("train"))?;
    outcome.chosen_k = Some(k);
    if until == Stage::Train {
        outcome.model = Some(model);
        outcome.nb_model = Some(nb);
        outcome.artifacts = out.written;
        return Ok(outcome);
    }

    // evaluate
    let actual = valid.labels();
    let evaluate = || -> Result<(ConfusionMatrix, ConfusionMatrix)> {
        let knn_pred = model.knn.predict_all(&valid, false)?;
        let nb_pred = nb_predict_all(&nb, &valid)?;
        Ok((confusion(&knn_pred, &actual)?, confusion(&nb_pred, &actual)?))
    };
    let (knn_matrix, nb_matrix) = evaluate().map_err(|e| e.at_stage("evaluate"))?;
    let write_matrices = |out: &mut Artifacts| -> Result<()> {
        out.put(CONFUSION_KNN_CSV, &to_csv_bytes(|b| knn_matrix.write_csv(b))?)?;
        out.put(CONFUSION_NBC_CSV, &to_csv_bytes(|b| nb_matrix.write_csv(b))?)
    };
    write_matrices(&mut out).map_err(|e| e.at_stage("evaluate"))?;

    // report
    let notes = run_notes(&outcome, &model.knn, train.len(), valid.len());
    let comparison = report(&[
        (format!("K-NN (K = {k})"), knn_matrix),
        ("Naive Bayes".to_string(), nb_matrix),
    ])
    .map(|r| r.with_notes(notes))
    .map_err(|e| e.at_stage("report"))?;
    write_report(&mut out, &comparison, outcome.sweep.as_ref()).map_err(|e| e.at_stage("report"))?;

    outcome.model = Some(model);
    outcome.nb_model = Some(nb);
    outcome.comparison = Some(comparison);
    outcome.artifacts = out.written;
    Ok(outcome)
}

fn run_notes(outcome: &RunOutcome, knn: &KnnModel, n_train: usize, n_valid: usize) -> Vec<String> {
    let mut notes = vec![
        format!(
            "records: {} in, {} retained after cleaning",
            outcome.cleaning.total_in, outcome.cleaning.retained
        ),
        format!("split: {n_train} training / {n_valid} validation"),
        format!("factors: {}", knn.factors.join(", ")),
        format!("K-NN: K = {}, label ties by {}", knn.k, knn.tie_break),
    ];
    if let Some(s) = &outcome.screening {
        notes.push(format!("screening alpha: {}", s.alpha));
    }
    notes
}

fn write_report(out: &mut Artifacts, comparison: &ComparisonReport, sweep: Option<&SweepResult>) -> Result<()> {
    let mut text = comparison.render_text();
    if let Some(s) = sweep {
        text.push('\n');
        text.push_str(&s.render_text());
    }
    out.put(REPORT_TXT, text.as_bytes())?;
    out.put(SCORES_JSON, serde_json::to_string_pretty(comparison)?.as_bytes())?;
    out.put(SCORES_CSV, &to_csv_bytes(|b| write_scores_csv(b, comparison))?)
}

/// One row per model and class plus an `overall` row per model.
pub fn write_scores_csv<W: Write>(writer: W, comparison: &ComparisonReport) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["model", "class", "accuracy", "precision", "recall", "f1"])?;
    for m in &comparison.models {
        csv.write_record([
            m.name.as_str(),
            "overall",
            &format!("{:.6}", m.scores.overall_accuracy),
            "",
            "",
            "",
        ])?;
        for c in &m.scores.per_class {
            csv.write_record([
                m.name.clone(),
                c.rating.get().to_string(),
                format!("{:.6}", c.accuracy),
                format!("{:.6}", c.precision),
                format!("{:.6}", c.recall),
                format!("{:.6}", c.f1),
            ])?;
        }
    }
    csv.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

pub fn cmd_pipeline(config: &RunConfig) -> Result<RunOutcome> {
    run(config, Stage::Report)
}

/// Writes synthetic records for `spec` to `path` (ingest's CSV layout).
pub fn cmd_generate(spec: &GenSpec, path: &Path, columns: &ColumnMap) -> Result<usize> {
    let records = generate(spec).map_err(|e| e.at_stage("generate"))?;
    let bytes = to_csv_bytes(|b| write_records(b, &records, columns))?;
    write_atomic(path, &bytes).map_err(|e| e.at_stage("generate"))?;
    Ok(records.len())
}

/// Scores a labeled file with a persisted model.
pub fn cmd_evaluate(
    model_path: &Path,
    records_path: &Path,
    columns: &ColumnMap,
    out_dir: &Path,
) -> Result<(ComparisonReport, Vec<PathBuf>)> {
    let model = PersistedModel::load(model_path).map_err(|e| e.at_stage("load model"))?;
    let loaded = load_records(records_path, columns).map_err(|e| e.at_stage("ingest"))?;
    let encoded = encode_dataset(&loaded.records, &model.schema).map_err(|e| e.at_stage("encode"))?;
    let projected = project(&encoded, &model.knn.factors).map_err(|e| e.at_stage("project"))?;
    let evaluate = || -> Result<ConfusionMatrix> {
        let predictions = model.knn.predict_all(&projected, false)?;
        confusion(&predictions, &projected.labels())
    };
    let matrix = evaluate().map_err(|e| e.at_stage("evaluate"))?;
    let comparison = report(&[(format!("K-NN (K = {})", model.knn.k), matrix)])
        .map(|r| r.with_notes([format!("{} labeled records scored", projected.len())]))
        .map_err(|e| e.at_stage("report"))?;
    let mut out = Artifacts { dir: out_dir, written: Vec::new() };
    let write = |out: &mut Artifacts| -> Result<()> {
        out.put(CONFUSION_KNN_CSV, &to_csv_bytes(|b| matrix.write_csv(b))?)?;
        write_report(out, &comparison, None)
    };
    write(&mut out).map_err(|e| e.at_stage("report"))?;
    Ok((comparison, out.written))
}

/// Builds the comparison report from named confusion-matrix CSV files.
pub fn cmd_score_matrix(named: &[(String, PathBuf)], out_dir: Option<&Path>) -> Result<(ComparisonReport, Vec<PathBuf>)> {
    let mut matrices = Vec::with_capacity(named.len());
    for (name, path) in named {
        let m = ConfusionMatrix::load_csv(path).map_err(|e| e.at_stage("load matrix"))?;
        matrices.push((name.clone(), m));
    }
    let comparison = report(&matrices).map_err(|e| e.at_stage("report"))?;
    let mut written = Vec::new();
    if let Some(dir) = out_dir {
        let mut out = Artifacts { dir, written: Vec::new() };
        write_report(&mut out, &comparison, None).map_err(|e| e.at_stage("report"))?;
        written = out.written;
    }
    Ok((comparison, written))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub pipe_id: String,
    pub predicted_rating: Rating,
}

impl fmt::Display for Prediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.pipe_id, self.predicted_rating.get())
    }
}

/// Rates every record in `records_path` with a persisted model, worst first
/// (rating 5 first; equal ratings keep input order). Labels are not needed.
pub fn cmd_predict(model_path: &Path, records_path: &Path, columns: &ColumnMap) -> Result<Vec<Prediction>> {
    let model = PersistedModel::load(model_path).map_err(|e| e.at_stage("load model"))?;
    let options = LoadOptions { require_label: false };
    let loaded = load_records_with(records_path, columns, options).map_err(|e| e.at_stage("ingest"))?;
    predict_records(&model, &loaded.records).map_err(|e| e.at_stage("predict"))
}

pub fn predict_records(model: &PersistedModel, records: &[crate::ingest::PipeRecord]) -> Result<Vec<Prediction>> {
    let names = model.schema.factor_names();
    let columns: Vec<usize> = model
        .knn
        .factors
        .iter()
        .map(|f| {
            names
                .iter()
                .position(|n| n == f)
                .ok_or_else(|| Error::ModelMismatch(format!("model factor '{f}' is not in its schema")))
        })
        .collect::<Result<_>>()?;
    let mut failures = Vec::new();
    let mut predictions = Vec::with_capacity(records.len());
    for rec in records {
        match model.schema.encode_ranks(rec) {
            Ok((ranks, _)) => {
                let query: Vec<f64> = columns.iter().map(|&j| f64::from(ranks[j])).collect();
                predictions.push(Prediction {
                    pipe_id: rec.pipe_id.clone(),
                    predicted_rating: model.knn.predict_excluding(&query, None)?,
                });
            }
            Err(mut f) => failures.append(&mut f),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Encoding(failures));
    }
    predictions.sort_by_key(|p| std::cmp::Reverse(p.predicted_rating));
    Ok(predictions)
}

pub fn write_predictions<W: Write>(writer: W, predictions: &[Prediction]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["pipe_id", "predicted_rating"])?;
    for p in predictions {
        csv.write_record([p.pipe_id.clone(), p.predicted_rating.get().to_string()])?;
    }
    csv.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}
