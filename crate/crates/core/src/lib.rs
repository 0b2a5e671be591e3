//! Condition rating for wastewater pipes.
//!
//! The crate turns raw inspection records into 1–5 condition ratings:
//! records are cleaned ([`ingest`]), mapped to ordinal factor ranks
//! ([`encoding`]), screened for normality ([`screening`]), classified by
//! K-nearest neighbors ([`knn`]) and compared against a Naive Bayes baseline
//! ([`baselines`]) with multiclass metrics ([`metrics`]). [`synthgen`] builds
//! reproducible synthetic inventories, and [`pipeline`] wires the stages into
//! the end-to-end run used by the `pipe-rating` binary.

pub mod baselines;
pub mod encoding;
pub mod error;
pub mod ingest;
pub mod interval;
pub mod knn;
pub mod metrics;
pub mod pipeline;
pub mod rating;
pub mod screening;
pub mod synthgen;

pub use baselines::{nb_fit, nb_predict, NbModel};
pub use encoding::{encode, encode_dataset, project, EncodedDataset, FactorSchema, FeatureVector};
pub use error::{Error, Result};
pub use ingest::{clean, load_records, CleaningRules, ColumnMap, PipeRecord};
pub use knn::{split, sweep_k, KnnModel, SplitSpec, TieBreak};
pub use metrics::{confusion, report, score_card, ConfusionMatrix};
pub use rating::Rating;
pub use screening::{screen, shapiro_wilk};
pub use synthgen::{generate, GenSpec};
