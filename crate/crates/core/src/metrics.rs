//! Confusion matrices and per-class scores.
//!
//! Orientation: rows are the PREDICTED rating, columns the ACTUAL rating.
//! For class c, TP is the diagonal entry, FP the rest of row c, FN the rest
//! of column c, and TN everything else.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rating::{Rating, NUM_RATINGS};

pub const ORIENTATION: &str = "rows = predicted rating, columns = actual rating";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// `counts[predicted - 1][actual - 1]`
    pub counts: [[u64; NUM_RATINGS]; NUM_RATINGS],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; NUM_RATINGS]; NUM_RATINGS]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_RATINGS).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, predicted: Rating) -> u64 {
        self.counts[predicted.index()].iter().sum()
    }

    pub fn column_sum(&self, actual: Rating) -> u64 {
        self.counts.iter().map(|row| row[actual.index()]).sum()
    }

    /// One-vs-rest counts for `class`.
    pub fn outcomes(&self, class: Rating) -> Outcomes {
        let c = class.index();
        let tp = self.counts[c][c];
        let fp = self.row_sum(class) - tp;
        let fn_ = self.column_sum(class) - tp;
        let tn = self.total() - tp - fp - fn_;
        Outcomes { tp, fp, fn_, tn }
    }

    /// Reads a 5×5 grid with a header row (actual ratings 1..5) and a
    /// leading column of predicted ratings 1..5.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = csv.headers()?.clone();
        let expected: Vec<String> = (1..=NUM_RATINGS).map(|r| r.to_string()).collect();
        let got: Vec<&str> = headers.iter().skip(1).collect();
        if headers.len() != NUM_RATINGS + 1 || got != expected {
            return Err(Error::Config(format!(
                "confusion matrix header must be '<label>,1,2,3,4,5', got '{}'",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut counts = [[0u64; NUM_RATINGS]; NUM_RATINGS];
        let mut seen = [false; NUM_RATINGS];
        for row in csv.records() {
            let row = row?;
            let predicted: i64 = row[0]
                .parse()
                .map_err(|_| Error::Config(format!("bad predicted rating '{}'", &row[0])))?;
            let p = Rating::new(predicted)?.index();
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::Config(format!("predicted rating {predicted} listed twice")));
            }
            for (a, cell) in counts[p].iter_mut().enumerate() {
                *cell = row
                    .get(a + 1)
                    .ok_or_else(|| Error::Config(format!("row {predicted} is short")))?
                    .parse()
                    .map_err(|_| Error::Config(format!("bad count in row {predicted}")))?;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Config("confusion matrix must have rows 1..5".into()));
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        let mut header = vec!["predicted\\actual".to_string()];
        header.extend((1..=NUM_RATINGS).map(|r| r.to_string()));
        csv.write_record(&header)?;
        for (p, row) in self.counts.iter().enumerate() {
            let mut cells = vec![(p + 1).to_string()];
            cells.extend(row.iter().map(u64::to_string));
            csv.write_record(&cells)?;
        }
        csv.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("Confusion matrix ({ORIENTATION})\n");
        let _ = write!(out, "{:>10}", "pred\\act");
        for a in 1..=NUM_RATINGS {
            let _ = write!(out, "{a:>6}");
        }
        out.push('\n');
        for (p, row) in self.counts.iter().enumerate() {
            let _ = write!(out, "{:>10}", p + 1);
            for v in row {
                let _ = write!(out, "{v:>6}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcomes {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

/// Tallies (prediction, actual) pairs.
pub fn confusion(predictions: &[Rating], actuals: &[Rating]) -> Result<ConfusionMatrix> {
    if predictions.len() != actuals.len() {
        return Err(Error::LengthMismatch {
            predictions: predictions.len(),
            actuals: actuals.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let mut m = ConfusionMatrix::default();
    for (p, a) in predictions.iter().zip(actuals) {
        m.counts[p.index()][a.index()] += 1;
    }
    Ok(m)
}

/// Like [`confusion`] but from raw integers, validating the 1–5 range.
pub fn confusion_from_ints(predictions: &[i64], actuals: &[i64]) -> Result<ConfusionMatrix> {
    let p: Vec<Rating> = predictions.iter().map(|&v| Rating::new(v)).collect::<Result<_>>()?;
    let a: Vec<Rating> = actuals.iter().map(|&v| Rating::new(v)).collect::<Result<_>>()?;
    confusion(&p, &a)
}

/// Correctly predicted / total.
pub fn overall_accuracy(m: &ConfusionMatrix) -> Result<f64> {
    let total = m.total();
    if total == 0 {
        return Err(Error::ZeroTotal);
    }
    Ok(m.trace() as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub rating: Rating,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    /// (TP + TN) / total
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when TP + FP = 0; precision is then reported as 0.
    pub precision_undefined: bool,
    /// Set when TP + FN = 0; recall is then reported as 0.
    pub recall_undefined: bool,
    /// Set when 2TP + FP + FN = 0; F1 is then reported as 0.
    pub f1_undefined: bool,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn class_scores(m: &ConfusionMatrix, class: Rating) -> Result<ClassScore> {
    let total = m.total();
    if total == 0 {
        return Err(Error::ZeroTotal);
    }
    let o = m.outcomes(class);
    let (precision, precision_undefined) = ratio(o.tp, o.tp + o.fp);
    let (recall, recall_undefined) = ratio(o.tp, o.tp + o.fn_);
    let (f1, f1_undefined) = ratio(2 * o.tp, 2 * o.tp + o.fp + o.fn_);
    Ok(ClassScore {
        rating: class,
        tp: o.tp,
        fp: o.fp,
        fn_: o.fn_,
        tn: o.tn,
        accuracy: (o.tp + o.tn) as f64 / total as f64,
        precision,
        recall,
        f1,
        precision_undefined,
        recall_undefined,
        f1_undefined,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreCard {
    pub overall_accuracy: f64,
    pub correct: u64,
    pub total: u64,
    pub per_class: Vec<ClassScore>,
}

pub fn score_card(m: &ConfusionMatrix) -> Result<ScoreCard> {
    Ok(ScoreCard {
        overall_accuracy: overall_accuracy(m)?,
        correct: m.trace(),
        total: m.total(),
        per_class: Rating::ALL
            .iter()
            .map(|&c| class_scores(m, c))
            .collect::<Result<_>>()?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub name: String,
    pub matrix: ConfusionMatrix,
    pub scores: ScoreCard,
}

/// Side-by-side comparison of several models' confusion matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub orientation: String,
    /// Free-form header lines (model settings, caveats).
    #[serde(default)]
    pub notes: Vec<String>,
    pub models: Vec<ModelReport>,
}

pub fn report(matrices: &[(String, ConfusionMatrix)]) -> Result<ComparisonReport> {
    if matrices.is_empty() {
        return Err(Error::Config("report needs at least one confusion matrix".into()));
    }
    let models = matrices
        .iter()
        .map(|(name, m)| {
            Ok(ModelReport {
                name: name.clone(),
                matrix: *m,
                scores: score_card(m)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ComparisonReport {
        orientation: ORIENTATION.to_string(),
        notes: Vec::new(),
        models,
    })
}

impl ComparisonReport {
    pub fn with_notes(mut self, notes: impl IntoIterator<Item = String>) -> Self {
        self.notes.extend(notes);
        self
    }

    /// Overall accuracy table followed by the per-class accuracy,
    /// precision, recall and F1 grid, one column per model.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Model comparison (confusion matrices: {})", self.orientation);
        for note in &self.notes {
            let _ = writeln!(out, "  {note}");
        }
        out.push('\n');

        let names: Vec<&str> = self.models.iter().map(|m| m.name.as_str()).collect();
        let width = names.iter().map(|n| n.len()).max().unwrap_or(0).max(9);

        let _ = write!(out, "{:<22}", "Overall accuracy");
        for n in &names {
            let _ = write!(out, " {n:>width$}");
        }
        out.push('\n');
        let _ = write!(out, "{:<22}", "");
        for m in &self.models {
            let cell = format!("{:.2}%", 100.0 * m.scores.overall_accuracy);
            let _ = write!(out, " {cell:>width$}");
        }
        out.push_str("\n\n");

        type Metric = (&'static str, fn(&ClassScore) -> String);
        let metrics: [Metric; 4] = [
            ("Accuracy", |s| format!("{:.2}%", 100.0 * s.accuracy)),
            ("Precision", |s| flagged(s.precision, s.precision_undefined)),
            ("Recall", |s| flagged(s.recall, s.recall_undefined)),
            ("F1 score", |s| flagged(s.f1, s.f1_undefined)),
        ];
        for (title, cell) in metrics {
            let _ = write!(out, "{title:<10}{:<12}", " rating");
            for n in &names {
                let _ = write!(out, " {n:>width$}");
            }
            out.push('\n');
            for c in 0..NUM_RATINGS {
                let _ = write!(out, "{:<10}{:<12}", "", format!(" {}", c + 1));
                for m in &self.models {
                    let _ = write!(out, " {:>width$}", cell(&m.scores.per_class[c]));
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

fn flagged(v: f64, undefined: bool) -> String {
    if undefined {
        "0.00*".to_string()
    } else {
        format!("{v:.2}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: i64) -> Rating {
        Rating::new(v).unwrap()
    }

    #[test]
    fn identity_diagonal() {
        let ratings: Vec<Rating> = Rating::ALL.to_vec();
        let m = confusion(&ratings, &ratings).unwrap();
        for i in 0..NUM_RATINGS {
            for j in 0..NUM_RATINGS {
                assert_eq!(m.counts[i][j], u64::from(i == j));
            }
        }
        for c in Rating::ALL {
            let s = class_scores(&m, c).unwrap();
            assert_eq!((s.accuracy, s.precision, s.recall, s.f1), (1.0, 1.0, 1.0, 1.0));
        }
        assert_eq!(overall_accuracy(&m).unwrap(), 1.0);
    }

    #[test]
    fn orientation_rows_are_predictions() {
        let m = confusion(&[r(2)], &[r(4)]).unwrap();
        assert_eq!(m.counts[1][3], 1);
        let s = class_scores(&m, r(2)).unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (0, 1, 0));
    }

    #[test]
    fn errors() {
        assert!(matches!(confusion(&[], &[]), Err(Error::EmptyEvaluation)));
        assert!(matches!(confusion(&[r(1)], &[]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(confusion_from_ints(&[6], &[1]), Err(Error::RatingOutOfRange(6))));
        let empty = ConfusionMatrix::default();
        assert!(matches!(overall_accuracy(&empty), Err(Error::ZeroTotal)));
        assert!(matches!(class_scores(&empty, r(1)), Err(Error::ZeroTotal)));
    }

    #[test]
    fn undefined_scores_are_flagged() {
        let m = confusion(&[r(1), r(1)], &[r(1), r(2)]).unwrap();
        let s = class_scores(&m, r(3)).unwrap();
        assert!(s.precision_undefined && s.recall_undefined && s.f1_undefined);
        assert_eq!(s.precision, 0.0);
        let s2 = class_scores(&m, r(2)).unwrap();
        assert!(s2.precision_undefined);
        assert!(!s2.recall_undefined);
        assert_eq!(s2.recall, 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let m = confusion_from_ints(&[1, 2, 3, 3, 5], &[1, 3, 3, 2, 5]).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(ConfusionMatrix::from_csv_reader(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn csv_rejects_bad_grid() {
        let text = "p,1,2,3,4\n1,1,2,3,4\n";
        assert!(ConfusionMatrix::from_csv_reader(text.as_bytes()).is_err());
        let text = "p,1,2,3,4,5\n1,1,0,0,0,0\n";
        assert!(ConfusionMatrix::from_csv_reader(text.as_bytes()).is_err());
    }

    #[test]
    fn single_perfect_matrix_report() {
        let m = confusion(&Rating::ALL, &Rating::ALL).unwrap();
        let rep = report(&[("perfect".into(), m)]).unwrap();
        let text = rep.render_text();
        assert!(text.contains("100.00%"));
        assert!(text.contains("1.00"));
        assert!(!text.contains("0.00*"));
        assert!(report(&[]).is_err());
    }
}
