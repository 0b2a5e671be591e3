//! Ordinal encoding of raw factor values into 1–5 ranks.
//!
//! The attribute tables live in a TOML schema file (see
//! `schema/default_schema.toml`, embedded as [`FactorSchema::default_schema`])
//! so a utility can re-band factors without recompiling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Field, FieldValue, PipeRecord};
use crate::interval::Interval;
use crate::rating::Rating;

const DEFAULT_SCHEMA: &str = include_str!("../schema/default_schema.toml");

pub const MIN_RANK: u8 = 1;
pub const MAX_RANK: u8 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CriteriaGroup {
    /// Physical characteristics.
    PC,
    /// External characteristics.
    EC,
    /// Hydraulic characteristics.
    HC,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownPolicy {
    #[default]
    Strict,
    /// Map unmatched or absent values to rank 5 and emit a note.
    Worst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    #[serde(flatten)]
    pub interval: Interval,
    pub rank: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FactorKind {
    Banded { domain: Interval, bands: Vec<Band> },
    Categorical { categories: BTreeMap<String, u8> },
    PassThrough,
}

/// Normalized lookup key for category matching.
fn category_key(s: &str) -> String {
    s.replace('-', " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFactor", into = "RawFactor")]
pub struct FactorDef {
    pub name: String,
    pub group: CriteriaGroup,
    pub field: Field,
    pub kind: FactorKind,
    pub unknown: UnknownPolicy,
    lookup: BTreeMap<String, u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindTag {
    Banded,
    Categorical,
    PassThrough,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFactor {
    name: String,
    group: CriteriaGroup,
    field: Field,
    kind: KindTag,
    #[serde(default)]
    unknown: UnknownPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<Interval>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    bands: Vec<Band>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    categories: BTreeMap<String, u8>,
}

impl TryFrom<RawFactor> for FactorDef {
    type Error = String;

    fn try_from(raw: RawFactor) -> std::result::Result<Self, String> {
        let name = raw.name;
        let kind = match raw.kind {
            KindTag::Banded => {
                if !raw.categories.is_empty() {
                    return Err(format!("factor '{name}': banded factor cannot list categories"));
                }
                FactorKind::Banded {
                    domain: raw.domain.unwrap_or_default(),
                    bands: raw.bands,
                }
            }
            KindTag::Categorical => {
                if !raw.bands.is_empty() || raw.domain.is_some() {
                    return Err(format!("factor '{name}': categorical factor cannot list bands"));
                }
                FactorKind::Categorical {
                    categories: raw.categories,
                }
            }
            KindTag::PassThrough => {
                if !raw.bands.is_empty() || !raw.categories.is_empty() {
                    return Err(format!("factor '{name}': pass-through factor takes no table"));
                }
                FactorKind::PassThrough
            }
        };
        let def = FactorDef::new(name, raw.group, raw.field, kind, raw.unknown);
        def.validate()?;
        Ok(def)
    }
}

impl From<FactorDef> for RawFactor {
    fn from(def: FactorDef) -> Self {
        let (kind, domain, bands, categories) = match def.kind {
            FactorKind::Banded { domain, bands } => {
                (KindTag::Banded, Some(domain), bands, BTreeMap::new())
            }
            FactorKind::Categorical { categories } => {
                (KindTag::Categorical, None, Vec::new(), categories)
            }
            FactorKind::PassThrough => (KindTag::PassThrough, None, Vec::new(), BTreeMap::new()),
        };
        RawFactor {
            name: def.name,
            group: def.group,
            field: def.field,
            kind,
            unknown: def.unknown,
            domain,
            bands,
            categories,
        }
    }
}

impl FactorDef {
    pub fn new(
        name: impl Into<String>,
        group: CriteriaGroup,
        field: Field,
        kind: FactorKind,
        unknown: UnknownPolicy,
    ) -> Self {
        let lookup = match &kind {
            FactorKind::Categorical { categories } => categories
                .iter()
                .map(|(k, &v)| (category_key(k), v))
                .collect(),
            _ => BTreeMap::new(),
        };
        FactorDef {
            name: name.into(),
            group,
            field,
            kind,
            unknown,
            lookup,
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let name = &self.name;
        let rank_ok = |r: u8| (MIN_RANK..=MAX_RANK).contains(&r);
        match &self.kind {
            FactorKind::Banded { domain, bands } => {
                if !self.field.is_numeric() {
                    return Err(format!("factor '{name}': banded factor needs a numeric field"));
                }
                domain.validate().map_err(|e| format!("factor '{name}' domain: {e}"))?;
                validate_bands(domain, bands).map_err(|e| format!("factor '{name}': {e}"))?;
                if let Some(b) = bands.iter().find(|b| !rank_ok(b.rank)) {
                    return Err(format!("factor '{name}': rank {} outside 1-5", b.rank));
                }
            }
            FactorKind::Categorical { categories } => {
                if categories.is_empty() {
                    return Err(format!("factor '{name}': no categories"));
                }
                if let Some((k, r)) = categories.iter().find(|(_, &r)| !rank_ok(r)) {
                    return Err(format!("factor '{name}': category '{k}' rank {r} outside 1-5"));
                }
                if self.lookup.len() != categories.len() {
                    return Err(format!(
                        "factor '{name}': categories collide after case/spacing normalization"
                    ));
                }
            }
            FactorKind::PassThrough => {
                if !self.field.is_numeric() {
                    return Err(format!("factor '{name}': pass-through needs a numeric field"));
                }
            }
        }
        Ok(())
    }

    /// `Some(rank)` when the value is covered by the table, `None` otherwise.
    fn lookup_rank(&self, value: FieldValue<'_>) -> Option<u8> {
        match (&self.kind, value) {
            (FactorKind::Banded { domain, bands }, FieldValue::Number(v)) => {
                if !domain.contains(v) {
                    return None;
                }
                bands.iter().find(|b| b.interval.contains(v)).map(|b| b.rank)
            }
            (FactorKind::Categorical { .. }, FieldValue::Text(s)) => {
                self.lookup.get(&category_key(s)).copied()
            }
            (FactorKind::PassThrough, FieldValue::Number(v)) => {
                let ok = v.fract() == 0.0 && v >= f64::from(MIN_RANK) && v <= f64::from(MAX_RANK);
                ok.then_some(v as u8)
            }
            _ => None,
        }
    }
}

/// Bands must be listed in ascending order, share edges with exactly one
/// side inclusive, and cover the whole domain.
fn validate_bands(domain: &Interval, bands: &[Band]) -> std::result::Result<(), String> {
    let (first, last) = match (bands.first(), bands.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err("no bands".into()),
    };
    for b in bands {
        b.interval.validate()?;
    }
    match (first.interval.lower(), domain.lower()) {
        (None, _) => {}
        (Some(b), Some(d)) if b == d => {}
        (Some(b), _) => {
            return Err(format!("first band starts at {} and leaves part of the domain uncovered", b.value))
        }
    }
    match (last.interval.upper(), domain.upper()) {
        (None, _) => {}
        (Some(b), Some(d)) if b == d => {}
        (Some(b), _) => {
            return Err(format!("last band ends at {} and leaves part of the domain uncovered", b.value))
        }
    }
    for pair in bands.windows(2) {
        let (hi, lo) = match (pair[0].interval.upper(), pair[1].interval.lower()) {
            (Some(hi), Some(lo)) => (hi, lo),
            _ => return Err(format!("bands {} and {} overlap", pair[0].interval, pair[1].interval)),
        };
        if hi.value != lo.value {
            return Err(format!(
                "gap or overlap between bands {} and {}",
                pair[0].interval, pair[1].interval
            ));
        }
        if hi.inclusive == lo.inclusive {
            return Err(format!(
                "edge {} must belong to exactly one of bands {} and {}",
                hi.value, pair[0].interval, pair[1].interval
            ));
        }
    }
    Ok(())
}

/// The full factor → rank mapping in force for a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema", into = "RawSchema")]
pub struct FactorSchema {
    pub name: String,
    factors: Vec<FactorDef>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchema {
    name: String,
    #[serde(rename = "factor")]
    factors: Vec<FactorDef>,
}

impl TryFrom<RawSchema> for FactorSchema {
    type Error = String;

    fn try_from(raw: RawSchema) -> std::result::Result<Self, String> {
        FactorSchema::new(raw.name, raw.factors).map_err(|e| e.to_string())
    }
}

impl From<FactorSchema> for RawSchema {
    fn from(s: FactorSchema) -> Self {
        RawSchema {
            name: s.name,
            factors: s.factors,
        }
    }
}

impl FactorSchema {
    /// Exactly 12 factors, 4 PC + 5 EC + 3 HC, unique names and fields.
    pub fn new(name: impl Into<String>, factors: Vec<FactorDef>) -> Result<Self> {
        if factors.len() != 12 {
            return Err(Error::Schema(format!("expected 12 factors, found {}", factors.len())));
        }
        let count = |g| factors.iter().filter(|f| f.group == g).count();
        let groups = (count(CriteriaGroup::PC), count(CriteriaGroup::EC), count(CriteriaGroup::HC));
        if groups != (4, 5, 3) {
            return Err(Error::Schema(format!(
                "expected 4 PC + 5 EC + 3 HC factors, found {} + {} + {}",
                groups.0, groups.1, groups.2
            )));
        }
        let mut names = BTreeSet::new();
        let mut fields = BTreeSet::new();
        for f in &factors {
            f.validate().map_err(Error::Schema)?;
            if !names.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate factor name '{}'", f.name)));
            }
            if !Field::FACTORS.contains(&f.field) {
                return Err(Error::Schema(format!("factor '{}' bound to non-factor field {}", f.name, f.field)));
            }
            if !fields.insert(f.field) {
                return Err(Error::Schema(format!("field {} bound twice", f.field)));
            }
        }
        Ok(FactorSchema {
            name: name.into(),
            factors,
        })
    }

    pub fn default_schema() -> Self {
        Self::from_toml_str(DEFAULT_SCHEMA).expect("embedded default schema is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn factors(&self) -> &[FactorDef] {
        &self.factors
    }

    pub fn factor_names(&self) -> Vec<String> {
        self.factors.iter().map(|f| f.name.clone()).collect()
    }

    pub fn factor(&self, name: &str) -> Option<&FactorDef> {
        self.factors.iter().find(|f| f.name == name)
    }

    /// Ranks for every schema factor, in schema order. Labels are not consulted.
    pub fn encode_ranks(
        &self,
        record: &PipeRecord,
    ) -> std::result::Result<(Vec<u8>, Vec<EncodeNote>), Vec<EncodeFailure>> {
        let mut ranks = Vec::with_capacity(self.factors.len());
        let mut notes = Vec::new();
        let mut failures = Vec::new();
        for factor in &self.factors {
            let value = record.get(factor.field);
            let found = value.and_then(|v| factor.lookup_rank(v));
            let shown = value.map_or_else(|| "<missing>".to_string(), |v| v.to_string());
            match (found, factor.unknown) {
                (Some(rank), _) => ranks.push(rank),
                (None, UnknownPolicy::Worst) => {
                    ranks.push(MAX_RANK);
                    notes.push(EncodeNote {
                        pipe_id: record.pipe_id.clone(),
                        factor: factor.name.clone(),
                        value: shown,
                        rank: MAX_RANK,
                    });
                }
                (None, UnknownPolicy::Strict) => failures.push(EncodeFailure {
                    pipe_id: record.pipe_id.clone(),
                    factor: factor.name.clone(),
                    value: shown,
                }),
            }
        }
        if failures.is_empty() {
            Ok((ranks, notes))
        } else {
            Err(failures)
        }
    }
}

/// A value that matched no band or category under a strict policy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeFailure {
    pub pipe_id: String,
    pub factor: String,
    pub value: String,
}

impl fmt::Display for EncodeFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pipe {}: {} = '{}'", self.pipe_id, self.factor, self.value)
    }
}

/// A value mapped to the worst rank under the `worst` policy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeNote {
    pub pipe_id: String,
    pub factor: String,
    pub value: String,
    pub rank: u8,
}

impl fmt::Display for EncodeNote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pipe {}: {} = '{}' is unlisted, ranked {}", self.pipe_id, self.factor, self.value, self.rank)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub pipe_id: String,
    pub ranks: Vec<u8>,
    pub label: Rating,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub vector: FeatureVector,
    pub notes: Vec<EncodeNote>,
}

pub fn encode(record: &PipeRecord, schema: &FactorSchema) -> Result<Encoded> {
    let (ranks, notes) = schema.encode_ranks(record).map_err(Error::Encoding)?;
    let label = record.comprehensive_rating.ok_or_else(|| {
        Error::Encoding(vec![EncodeFailure {
            pipe_id: record.pipe_id.clone(),
            factor: "comprehensive_rating".into(),
            value: "<missing>".into(),
        }])
    })?;
    Ok(Encoded {
        vector: FeatureVector {
            pipe_id: record.pipe_id.clone(),
            ranks,
            label,
        },
        notes,
    })
}

/// Feature vectors together with the factor names their columns stand for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedDataset {
    pub factors: Vec<String>,
    pub vectors: Vec<FeatureVector>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<EncodeNote>,
}

impl EncodedDataset {
    pub fn dimension(&self) -> usize {
        self.factors.len()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Column `j` as floating-point values.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.vectors.iter().map(|v| f64::from(v.ranks[j])).collect()
    }

    pub fn labels(&self) -> Vec<Rating> {
        self.vectors.iter().map(|v| v.label).collect()
    }
}

/// Encodes every record; on any strict-policy failure returns all of them.
pub fn encode_dataset(records: &[PipeRecord], schema: &FactorSchema) -> Result<EncodedDataset> {
    let mut vectors = Vec::with_capacity(records.len());
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for record in records {
        match encode(record, schema) {
            Ok(e) => {
                vectors.push(e.vector);
                notes.extend(e.notes);
            }
            Err(Error::Encoding(f)) => failures.extend(f),
            Err(other) => return Err(other),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Encoding(failures));
    }
    Ok(EncodedDataset {
        factors: schema.factor_names(),
        vectors,
        notes,
    })
}

/// Restricts vectors to the kept factors. Column order follows the dataset,
/// not the order of `keep`.
pub fn project<S: AsRef<str>>(dataset: &EncodedDataset, keep: &[S]) -> Result<EncodedDataset> {
    if keep.is_empty() {
        return Err(Error::EmptyProjection);
    }
    let wanted: BTreeSet<&str> = keep.iter().map(AsRef::as_ref).collect();
    if let Some(unknown) = wanted.iter().find(|k| !dataset.factors.iter().any(|f| f == *k)) {
        return Err(Error::UnknownFactor(unknown.to_string()));
    }
    let columns: Vec<usize> = dataset
        .factors
        .iter()
        .enumerate()
        .filter(|(_, f)| wanted.contains(f.as_str()))
        .map(|(i, _)| i)
        .collect();
    Ok(EncodedDataset {
        factors: columns.iter().map(|&i| dataset.factors[i].clone()).collect(),
        vectors: dataset
            .vectors
            .iter()
            .map(|v| FeatureVector {
                pipe_id: v.pipe_id.clone(),
                ranks: columns.iter().map(|&i| v.ranks[i]).collect(),
                label: v.label,
            })
            .collect(),
        notes: dataset.notes.clone(),
    })
}
