//! Loading pipe-segment records from CSV and dropping the ones that are
//! missing required factors or carry physically inconsistent values.
//!
//! Column names are configurable through a [`ColumnMap`]: each canonical
//! [`Field`] maps to the header used in the input file. Cleaning never fails;
//! it partitions the input into retained records and per-record drop reasons.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::rating::Rating;

/// Canonical record fields. The snake_case name doubles as the default CSV header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    PipeId,
    PipeAgeYears,
    Material,
    DiameterInches,
    Shape,
    DepthCategory,
    SoilType,
    Loading,
    WasteType,
    SeismicZone,
    StructuralScore,
    OmScore,
    RepairHistory,
    TotalLengthFeet,
    ComprehensiveRating,
}

impl Field {
    pub const ALL: [Field; 15] = [
        Field::PipeId,
        Field::PipeAgeYears,
        Field::Material,
        Field::DiameterInches,
        Field::Shape,
        Field::DepthCategory,
        Field::SoilType,
        Field::Loading,
        Field::WasteType,
        Field::SeismicZone,
        Field::StructuralScore,
        Field::OmScore,
        Field::RepairHistory,
        Field::TotalLengthFeet,
        Field::ComprehensiveRating,
    ];

    /// The twelve condition factors (everything except identity, length and label).
    pub const FACTORS: [Field; 12] = [
        Field::PipeAgeYears,
        Field::Material,
        Field::DiameterInches,
        Field::Shape,
        Field::DepthCategory,
        Field::SoilType,
        Field::Loading,
        Field::WasteType,
        Field::SeismicZone,
        Field::StructuralScore,
        Field::OmScore,
        Field::RepairHistory,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Field::PipeId => "pipe_id",
            Field::PipeAgeYears => "pipe_age_years",
            Field::Material => "material",
            Field::DiameterInches => "diameter_inches",
            Field::Shape => "shape",
            Field::DepthCategory => "depth_category",
            Field::SoilType => "soil_type",
            Field::Loading => "loading",
            Field::WasteType => "waste_type",
            Field::SeismicZone => "seismic_zone",
            Field::StructuralScore => "structural_score",
            Field::OmScore => "om_score",
            Field::RepairHistory => "repair_history",
            Field::TotalLengthFeet => "total_length_feet",
            Field::ComprehensiveRating => "comprehensive_rating",
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(
            self,
            Field::PipeAgeYears
                | Field::DiameterInches
                | Field::StructuralScore
                | Field::OmScore
                | Field::TotalLengthFeet
                | Field::ComprehensiveRating
        )
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Depth bands used to normalize numeric depths (feet) to a category label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthBand {
    UpTo10,
    From10To15,
    From15To20,
    From20To25,
    Over25,
}

impl DepthBand {
    pub const ALL: [DepthBand; 5] = [
        DepthBand::UpTo10,
        DepthBand::From10To15,
        DepthBand::From15To20,
        DepthBand::From20To25,
        DepthBand::Over25,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DepthBand::UpTo10 => "0-10 Feet",
            DepthBand::From10To15 => "10-15 Feet",
            DepthBand::From15To20 => "15-20 Feet",
            DepthBand::From20To25 => "20-25 Feet",
            DepthBand::Over25 => ">25 Feet",
        }
    }

    /// `<= 10`, `> 10 and <= 15`, ... `> 25`. Negative depths have no band.
    pub fn from_feet(feet: f64) -> Option<Self> {
        if !feet.is_finite() || feet < 0.0 {
            None
        } else if feet <= 10.0 {
            Some(DepthBand::UpTo10)
        } else if feet <= 15.0 {
            Some(DepthBand::From10To15)
        } else if feet <= 20.0 {
            Some(DepthBand::From15To20)
        } else if feet <= 25.0 {
            Some(DepthBand::From20To25)
        } else {
            Some(DepthBand::Over25)
        }
    }

    /// Accepts the canonical labels and common spellings ("0-10", "<= 10 Feet",
    /// "25+ ft", ...), case and whitespace insensitive.
    pub fn parse_label(text: &str) -> Option<Self> {
        let mut key: String = text
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_lowercase();
        for suffix in ["feet", "foot", "ft"] {
            if let Some(stripped) = key.strip_suffix(suffix) {
                key = stripped.to_string();
                break;
            }
        }
        match key.as_str() {
            "0-10" | "<=10" => Some(DepthBand::UpTo10),
            "10-15" | ">10and<=15" => Some(DepthBand::From10To15),
            "15-20" | ">15and<=20" => Some(DepthBand::From15To20),
            "20-25" | ">20and<=25" => Some(DepthBand::From20To25),
            ">25" | "25+" => Some(DepthBand::Over25),
            _ => None,
        }
    }
}

/// Normalizes a raw depth cell to its category label. Values that are
/// neither a number nor a recognised label are kept verbatim so cleaning
/// can flag them as inconsistent.
pub fn normalize_depth(raw: &str) -> String {
    let trimmed = raw.trim();
    if let Ok(feet) = trimmed.parse::<f64>() {
        return match DepthBand::from_feet(feet) {
            Some(band) => band.label().to_string(),
            None => trimmed.to_string(),
        };
    }
    match DepthBand::parse_label(trimmed) {
        Some(band) => band.label().to_string(),
        None => trimmed.to_string(),
    }
}

/// One pipe segment. Factor fields are optional because raw inspection
/// data has gaps; [`clean`] decides which gaps are fatal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipeRecord {
    pub pipe_id: String,
    pub pipe_age_years: Option<f64>,
    pub material: Option<String>,
    pub diameter_inches: Option<f64>,
    pub shape: Option<String>,
    pub depth_category: Option<String>,
    pub soil_type: Option<String>,
    pub loading: Option<String>,
    pub waste_type: Option<String>,
    pub seismic_zone: Option<String>,
    pub structural_score: Option<u8>,
    pub om_score: Option<u8>,
    pub repair_history: Option<String>,
    pub total_length_feet: Option<f64>,
    pub comprehensive_rating: Option<Rating>,
}

/// A field value viewed generically, for rule evaluation and encoding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldValue<'a> {
    Number(f64),
    Text(&'a str),
}

impl fmt::Display for FieldValue<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldValue::Number(v) => write!(f, "{v}"),
            FieldValue::Text(s) => f.write_str(s),
        }
    }
}

impl PipeRecord {
    pub fn new(pipe_id: impl Into<String>) -> Self {
        PipeRecord {
            pipe_id: pipe_id.into(),
            pipe_age_years: None,
            material: None,
            diameter_inches: None,
            shape: None,
            depth_category: None,
            soil_type: None,
            loading: None,
            waste_type: None,
            seismic_zone: None,
            structural_score: None,
            om_score: None,
            repair_history: None,
            total_length_feet: None,
            comprehensive_rating: None,
        }
    }

    pub fn get(&self, field: Field) -> Option<FieldValue<'_>> {
        fn text(s: &Option<String>) -> Option<FieldValue<'_>> {
            s.as_deref().map(FieldValue::Text)
        }
        let num = |v: Option<f64>| v.map(FieldValue::Number);
        match field {
            Field::PipeId => Some(FieldValue::Text(&self.pipe_id)),
            Field::PipeAgeYears => num(self.pipe_age_years),
            Field::Material => text(&self.material),
            Field::DiameterInches => num(self.diameter_inches),
            Field::Shape => text(&self.shape),
            Field::DepthCategory => text(&self.depth_category),
            Field::SoilType => text(&self.soil_type),
            Field::Loading => text(&self.loading),
            Field::WasteType => text(&self.waste_type),
            Field::SeismicZone => text(&self.seismic_zone),
            Field::StructuralScore => num(self.structural_score.map(f64::from)),
            Field::OmScore => num(self.om_score.map(f64::from)),
            Field::RepairHistory => text(&self.repair_history),
            Field::TotalLengthFeet => num(self.total_length_feet),
            Field::ComprehensiveRating => {
                num(self.comprehensive_rating.map(|r| f64::from(r.get())))
            }
        }
    }

    fn number(&self, field: Field) -> Option<f64> {
        match self.get(field) {
            Some(FieldValue::Number(v)) => Some(v),
            _ => None,
        }
    }

    /// Renders a field the way it is written to CSV (empty when absent).
    pub fn cell(&self, field: Field) -> String {
        match self.get(field) {
            None => String::new(),
            Some(v) => v.to_string(),
        }
    }
}

/// Canonical field → CSV header. Fields not overridden use their canonical name.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColumnMap {
    overrides: BTreeMap<Field, String>,
}

impl ColumnMap {
    /// Parses a mapping file of `canonical_field = "CSV Header"` lines.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("column map: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn with(mut self, field: Field, header: impl Into<String>) -> Self {
        self.overrides.insert(field, header.into());
        self
    }

    pub fn header(&self, field: Field) -> &str {
        self.overrides
            .get(&field)
            .map(String::as_str)
            .unwrap_or_else(|| field.as_str())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Rows without a comprehensive rating are rejected when set. Scoring
    /// unlabeled records turns this off.
    pub require_label: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { require_label: true }
    }
}

/// A row that did not become a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowDiagnostic {
    /// 1-based line number in the file (the header is line 1).
    pub line: u64,
    pub pipe_id: Option<String>,
    pub cause: String,
}

impl fmt::Display for RowDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.pipe_id {
            Some(id) => write!(f, "line {} (pipe {}): {}", self.line, id, self.cause),
            None => write!(f, "line {}: {}", self.line, self.cause),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOutcome {
    pub records: Vec<PipeRecord>,
    pub diagnostics: Vec<RowDiagnostic>,
}

pub fn load_records(path: impl AsRef<Path>, columns: &ColumnMap) -> Result<LoadOutcome> {
    load_records_with(path, columns, LoadOptions::default())
}

pub fn load_records_with(
    path: impl AsRef<Path>,
    columns: &ColumnMap,
    options: LoadOptions,
) -> Result<LoadOutcome> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(file, columns, options)
}

const MISSING_MARKERS: [&str; 5] = ["", "na", "n/a", "null", "none"];

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    MISSING_MARKERS.iter().any(|m| t.eq_ignore_ascii_case(m))
}

pub fn read_records<R: Read>(
    reader: R,
    columns: &ColumnMap,
    options: LoadOptions,
) -> Result<LoadOutcome> {
    let mut csv = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::Headers)
        .from_reader(reader);
    let headers = csv.headers()?.clone();

    let mut positions = HashMap::new();
    let mut missing = Vec::new();
    for field in Field::ALL {
        let wanted = columns.header(field);
        match headers.iter().position(|h| h == wanted) {
            Some(i) => {
                positions.insert(field, i);
            }
            None => missing.push(wanted.to_string()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingColumns(missing));
    }

    let mut outcome = LoadOutcome::default();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for row in csv.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != headers.len() {
            outcome.diagnostics.push(RowDiagnostic {
                line,
                pipe_id: None,
                cause: format!("expected {} fields, found {}", headers.len(), row.len()),
            });
            continue;
        }
        let cell = |field: Field| row.get(positions[&field]).unwrap_or("");
        let pipe_id = cell(Field::PipeId).trim().to_string();
        if pipe_id.is_empty() {
            outcome.diagnostics.push(RowDiagnostic {
                line,
                pipe_id: None,
                cause: "empty pipe_id".into(),
            });
            continue;
        }
        match parse_row(&pipe_id, &cell, options) {
            Ok(record) => {
                if let Some(first) = seen.get(&pipe_id) {
                    outcome.diagnostics.push(RowDiagnostic {
                        line,
                        pipe_id: Some(pipe_id),
                        cause: format!("duplicate pipe_id (first seen on line {first})"),
                    });
                    continue;
                }
                seen.insert(pipe_id, line);
                outcome.records.push(record);
            }
            Err(cause) => outcome.diagnostics.push(RowDiagnostic {
                line,
                pipe_id: Some(pipe_id),
                cause,
            }),
        }
    }
    Ok(outcome)
}

fn parse_row<'a>(
    pipe_id: &str,
    cell: &dyn Fn(Field) -> &'a str,
    options: LoadOptions,
) -> std::result::Result<PipeRecord, String> {
    let text = |field: Field| {
        let c = cell(field);
        (!is_missing(c)).then(|| c.trim().to_string())
    };
    let number = |field: Field| -> std::result::Result<Option<f64>, String> {
        let c = cell(field);
        if is_missing(c) {
            return Ok(None);
        }
        match c.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(format!("invalid number in {field}: '{}'", c.trim())),
        }
    };
    let grade = |field: Field| -> std::result::Result<Option<i64>, String> {
        match number(field)? {
            None => Ok(None),
            Some(v) if v.fract() == 0.0 => Ok(Some(v as i64)),
            Some(v) => Err(format!("{field} must be an integer, got {v}")),
        }
    };
    let score = |field: Field| -> std::result::Result<Option<u8>, String> {
        match grade(field)? {
            None => Ok(None),
            Some(v) if (1..=5).contains(&v) => Ok(Some(v as u8)),
            Some(v) => Err(format!("{field} {v} out of range 1–5")),
        }
    };

    let comprehensive_rating = match grade(Field::ComprehensiveRating)? {
        None if options.require_label => return Err("missing comprehensive_rating label".into()),
        None => None,
        Some(v) => Some(Rating::new(v).map_err(|_| format!("label out of range 1–5 (got {v})"))?),
    };

    Ok(PipeRecord {
        pipe_id: pipe_id.to_string(),
        pipe_age_years: number(Field::PipeAgeYears)?,
        material: text(Field::Material),
        diameter_inches: number(Field::DiameterInches)?,
        shape: text(Field::Shape),
        depth_category: text(Field::DepthCategory).map(|d| normalize_depth(&d)),
        soil_type: text(Field::SoilType),
        loading: text(Field::Loading),
        waste_type: text(Field::WasteType),
        seismic_zone: text(Field::SeismicZone),
        structural_score: score(Field::StructuralScore)?,
        om_score: score(Field::OmScore)?,
        repair_history: text(Field::RepairHistory),
        total_length_feet: number(Field::TotalLengthFeet)?,
        comprehensive_rating,
    })
}

/// Writes records with a header row in canonical field order.
pub fn write_records<W: Write>(writer: W, records: &[PipeRecord], columns: &ColumnMap) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(Field::ALL.iter().map(|&f| columns.header(f)))?;
    for record in records {
        csv.write_record(Field::ALL.iter().map(|&f| record.cell(f)))?;
    }
    csv.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Cleaning

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeRule {
    pub field: Field,
    #[serde(flatten)]
    pub allowed: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllowedValues {
    pub field: Field,
    /// Matched case-insensitively after trimming.
    pub values: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparison {
    fn holds(self, a: f64, b: f64) -> bool {
        match self {
            Comparison::Lt => a < b,
            Comparison::Le => a <= b,
            Comparison::Gt => a > b,
            Comparison::Ge => a >= b,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Gt => ">",
            Comparison::Ge => ">=",
        }
    }
}

/// `left <op> scale * right`, evaluated only when both fields are present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossFieldRule {
    pub left: Field,
    pub op: Comparison,
    pub right: Field,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

/// Declarative cleaning configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CleaningRules {
    pub required: Vec<Field>,
    /// How many required fields may be absent before a record is dropped.
    #[serde(default)]
    pub max_missing: usize,
    #[serde(default, rename = "range")]
    pub ranges: Vec<RangeRule>,
    #[serde(default, rename = "allowed")]
    pub allowed: Vec<AllowedValues>,
    #[serde(default, rename = "cross_field")]
    pub cross_field: Vec<CrossFieldRule>,
}

impl Default for CleaningRules {
    fn default() -> Self {
        let positive = Interval { gt: Some(0.0), ..Default::default() };
        let non_negative = Interval { ge: Some(0.0), ..Default::default() };
        CleaningRules {
            required: Field::FACTORS.to_vec(),
            max_missing: 0,
            ranges: vec![
                RangeRule { field: Field::TotalLengthFeet, allowed: positive },
                RangeRule { field: Field::DiameterInches, allowed: positive },
                RangeRule { field: Field::PipeAgeYears, allowed: non_negative },
            ],
            allowed: vec![AllowedValues {
                field: Field::DepthCategory,
                values: DepthBand::ALL.iter().map(|b| b.label().to_string()).collect(),
            }],
            cross_field: Vec::new(),
        }
    }
}

impl CleaningRules {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let rules: CleaningRules =
            toml::from_str(text).map_err(|e| Error::Config(format!("cleaning rules: {e}")))?;
        rules.validate()?;
        Ok(rules)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        for rule in &self.ranges {
            if !rule.field.is_numeric() {
                return Err(Error::Config(format!("range rule on non-numeric field {}", rule.field)));
            }
            rule.allowed
                .validate()
                .map_err(|e| Error::Config(format!("range rule on {}: {e}", rule.field)))?;
        }
        for rule in &self.cross_field {
            if !rule.left.is_numeric() || !rule.right.is_numeric() {
                return Err(Error::Config(format!(
                    "cross-field rule {} {} {} needs numeric fields",
                    rule.left,
                    rule.op.symbol(),
                    rule.right
                )));
            }
        }
        Ok(())
    }

    fn first_violation(&self, record: &PipeRecord) -> Option<String> {
        for rule in &self.ranges {
            if let Some(v) = record.number(rule.field) {
                if !rule.allowed.contains(v) {
                    return Some(format!("{} = {v} outside {}", rule.field, rule.allowed));
                }
            }
        }
        for rule in &self.allowed {
            if let Some(FieldValue::Text(v)) = record.get(rule.field) {
                let v = v.trim();
                if !rule.values.iter().any(|a| a.trim().eq_ignore_ascii_case(v)) {
                    return Some(format!("{} '{v}' not in the known set", rule.field));
                }
            }
        }
        for rule in &self.cross_field {
            if let (Some(a), Some(b)) = (record.number(rule.left), record.number(rule.right)) {
                if !rule.op.holds(a, rule.scale * b) {
                    return Some(format!(
                        "{} = {a} violates {} {} {} x {} ({b})",
                        rule.left,
                        rule.left,
                        rule.op.symbol(),
                        rule.scale,
                        rule.right
                    ));
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropKind {
    Missing,
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedRecord {
    pub pipe_id: String,
    pub kind: DropKind,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub total_in: usize,
    pub dropped_missing: usize,
    pub dropped_inconsistent: usize,
    pub retained: usize,
    pub drops: Vec<DroppedRecord>,
}

impl CleaningReport {
    pub fn render_text(&self) -> String {
        let pct = |n: usize| {
            if self.total_in == 0 {
                0.0
            } else {
                100.0 * n as f64 / self.total_in as f64
            }
        };
        let mut out = String::new();
        out.push_str("Cleaning report\n");
        out.push_str(&format!("  records in           {:>8}\n", self.total_in));
        out.push_str(&format!(
            "  dropped (missing)    {:>8}  ({:.2}%)\n",
            self.dropped_missing,
            pct(self.dropped_missing)
        ));
        out.push_str(&format!(
            "  dropped (inconsist.) {:>8}  ({:.2}%)\n",
            self.dropped_inconsistent,
            pct(self.dropped_inconsistent)
        ));
        out.push_str(&format!("  retained             {:>8}\n", self.retained));
        if !self.drops.is_empty() {
            out.push_str("\nDropped records\n");
            for d in &self.drops {
                let kind = match d.kind {
                    DropKind::Missing => "missing",
                    DropKind::Inconsistent => "inconsistent",
                };
                out.push_str(&format!("  {:<12} {:<13} {}\n", d.pipe_id, kind, d.detail));
            }
        }
        out
    }
}

/// Splits `records` into retained (input order preserved) and dropped.
/// Missingness is checked before consistency, so a record is counted once.
pub fn clean(records: &[PipeRecord], rules: &CleaningRules) -> (Vec<PipeRecord>, CleaningReport) {
    let mut retained = Vec::with_capacity(records.len());
    let mut report = CleaningReport {
        total_in: records.len(),
        ..Default::default()
    };
    for record in records {
        let absent: Vec<&str> = rules
            .required
            .iter()
            .filter(|&&f| record.get(f).is_none())
            .map(|f| f.as_str())
            .collect();
        if absent.len() > rules.max_missing {
            report.dropped_missing += 1;
            report.drops.push(DroppedRecord {
                pipe_id: record.pipe_id.clone(),
                kind: DropKind::Missing,
                detail: format!("missing {}", absent.join(", ")),
            });
            continue;
        }
        if let Some(why) = rules.first_violation(record) {
            report.dropped_inconsistent += 1;
            report.drops.push(DroppedRecord {
                pipe_id: record.pipe_id.clone(),
                kind: DropKind::Inconsistent,
                detail: why,
            });
            continue;
        }
        retained.push(record.clone());
    }
    report.retained = retained.len();
    (retained, report)
}
