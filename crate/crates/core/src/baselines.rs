//! Categorical Naive Bayes over rank vectors, used as a comparison baseline.
//!
//! Each factor is treated as a categorical variable over ranks 1–5 with
//! additive smoothing; class priors are maximum-likelihood frequencies, so a
//! class never seen in training is never predicted.

use serde::{Deserialize, Serialize};

use crate::encoding::{EncodedDataset, MAX_RANK, MIN_RANK};
use crate::error::{Error, Result};
use crate::rating::{Rating, NUM_RATINGS};

pub const DEFAULT_SMOOTHING: f64 = 1.0;
const RANK_VALUES: usize = (MAX_RANK - MIN_RANK + 1) as usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub factors: Vec<String>,
    pub smoothing: f64,
    /// P(class), indexed by rating - 1.
    pub priors: [f64; NUM_RATINGS],
    /// P(rank | class) as `conditionals[factor][class][rank - 1]`.
    pub conditionals: Vec<[[f64; RANK_VALUES]; NUM_RATINGS]>,
}

pub fn nb_fit(train: &EncodedDataset, smoothing: f64) -> Result<NbModel> {
    if !(smoothing > 0.0 && smoothing.is_finite()) {
        return Err(Error::InvalidSmoothing(smoothing));
    }
    if train.is_empty() {
        return Err(Error::TooFewVectors { got: 0, need: 1 });
    }
    let d = train.dimension();
    let mut class_counts = [0usize; NUM_RATINGS];
    let mut counts = vec![[[0usize; RANK_VALUES]; NUM_RATINGS]; d];
    for v in &train.vectors {
        if v.ranks.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: v.ranks.len() });
        }
        let c = v.label.index();
        class_counts[c] += 1;
        for (j, &r) in v.ranks.iter().enumerate() {
            if !(MIN_RANK..=MAX_RANK).contains(&r) {
                return Err(Error::Config(format!("rank {r} outside 1-5 in vector {}", v.pipe_id)));
            }
            counts[j][c][usize::from(r - MIN_RANK)] += 1;
        }
    }
    let n = train.len() as f64;
    let priors = class_counts.map(|c| c as f64 / n);
    let conditionals = counts
        .iter()
        .map(|per_class| {
            let mut table = [[0.0; RANK_VALUES]; NUM_RATINGS];
            for c in 0..NUM_RATINGS {
                let denom = class_counts[c] as f64 + smoothing * RANK_VALUES as f64;
                for r in 0..RANK_VALUES {
                    table[c][r] = (per_class[c][r] as f64 + smoothing) / denom;
                }
            }
            table
        })
        .collect();
    Ok(NbModel {
        factors: train.factors.clone(),
        smoothing,
        priors,
        conditionals,
    })
}

impl NbModel {
    /// Unnormalized log posterior per class; `-inf` for classes with zero prior.
    pub fn log_scores(&self, query: &[u8]) -> Result<[f64; NUM_RATINGS]> {
        if query.len() != self.conditionals.len() {
            return Err(Error::DimensionMismatch {
                expected: self.conditionals.len(),
                got: query.len(),
            });
        }
        let mut scores = [0.0; NUM_RATINGS];
        for (c, score) in scores.iter_mut().enumerate() {
            *score = self.priors[c].ln();
            for (table, &r) in self.conditionals.iter().zip(query) {
                if !(MIN_RANK..=MAX_RANK).contains(&r) {
                    return Err(Error::Config(format!("rank {r} outside 1-5")));
                }
                *score += table[c][usize::from(r - MIN_RANK)].ln();
            }
        }
        Ok(scores)
    }

    /// Posterior probabilities per class.
    pub fn posteriors(&self, query: &[u8]) -> Result<[f64; NUM_RATINGS]> {
        let scores = self.log_scores(query)?;
        let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp = scores.map(|s| (s - top).exp());
        let total: f64 = exp.iter().sum();
        Ok(exp.map(|e| e / total))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Log scores closer than this are treated as tied.
const TIE_TOLERANCE: f64 = 1e-9;

/// Argmax of the log posterior; ties go to the smaller rating.
pub fn nb_predict(model: &NbModel, query: &[u8]) -> Result<Rating> {
    let scores = model.log_scores(query)?;
    let mut best = 0;
    for c in 1..NUM_RATINGS {
        if scores[c] > scores[best] + TIE_TOLERANCE {
            best = c;
        }
    }
    Ok(Rating::from_index(best))
}

pub fn nb_predict_all(model: &NbModel, eval: &EncodedDataset) -> Result<Vec<Rating>> {
    if eval.factors != model.factors {
        return Err(Error::ModelMismatch("naive Bayes model factors differ from data factors".into()));
    }
    eval.vectors.iter().map(|v| nb_predict(model, &v.ranks)).collect()
}
