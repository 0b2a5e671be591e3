use std::fmt;

use serde::{Deserialize, Serialize};

/// A numeric interval written the way attribute tables state it: any
/// combination of one lower bound (`gt` or `ge`) and one upper bound
/// (`lt` or `le`). Missing bounds are unbounded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ge: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub le: Option<f64>,
}

/// One end of an interval; `inclusive` tells whether the value itself belongs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub value: f64,
    pub inclusive: bool,
}

impl Interval {
    pub fn validate(&self) -> Result<(), String> {
        if self.gt.is_some() && self.ge.is_some() {
            return Err(format!("{self}: both 'gt' and 'ge' given"));
        }
        if self.lt.is_some() && self.le.is_some() {
            return Err(format!("{self}: both 'lt' and 'le' given"));
        }
        for v in [self.gt, self.ge, self.lt, self.le].into_iter().flatten() {
            if !v.is_finite() {
                return Err(format!("{self}: non-finite bound"));
            }
        }
        if let (Some(lo), Some(hi)) = (self.lower(), self.upper()) {
            let empty = lo.value > hi.value
                || (lo.value == hi.value && !(lo.inclusive && hi.inclusive));
            if empty {
                return Err(format!("{self}: empty interval"));
            }
        }
        Ok(())
    }

    pub fn lower(&self) -> Option<Edge> {
        match (self.gt, self.ge) {
            (Some(v), _) => Some(Edge { value: v, inclusive: false }),
            (None, Some(v)) => Some(Edge { value: v, inclusive: true }),
            (None, None) => None,
        }
    }

    pub fn upper(&self) -> Option<Edge> {
        match (self.lt, self.le) {
            (Some(v), _) => Some(Edge { value: v, inclusive: false }),
            (None, Some(v)) => Some(Edge { value: v, inclusive: true }),
            (None, None) => None,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = match self.lower() {
            Some(Edge { value, inclusive: true }) => x >= value,
            Some(Edge { value, inclusive: false }) => x > value,
            None => true,
        };
        let below = match self.upper() {
            Some(Edge { value, inclusive: true }) => x <= value,
            Some(Edge { value, inclusive: false }) => x < value,
            None => true,
        };
        above && below
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(v) = self.gt {
            parts.push(format!("> {v}"));
        }
        if let Some(v) = self.ge {
            parts.push(format!(">= {v}"));
        }
        if let Some(v) = self.lt {
            parts.push(format!("< {v}"));
        }
        if let Some(v) = self.le {
            parts.push(format!("<= {v}"));
        }
        if parts.is_empty() {
            f.write_str("any value")
        } else {
            f.write_str(&parts.join(" and "))
        }
    }
}
