use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::cv::{fit_for_task, grid_search_cv, metric_for, score_model, train_test_split};
use super::linear::LogisticOptions;
use super::metrics::Metric;
use crate::error::{Error, Result};
use crate::selection::SelectionResult;
use crate::tabular::{Dataset, Encoder};

/// Rows available to the selection step: a k-shot budget or the whole
/// training split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shots {
    Count(usize),
    Full,
}

impl fmt::Display for Shots {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shots::Count(k) => write!(f, "{k}"),
            Shots::Full => f.write_str("full"),
        }
    }
}

impl core::str::FromStr for Shots {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("full") {
            return Ok(Shots::Full);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Shots::Count(k)),
            _ => Err(Error::Config(alloc::format!("invalid shot count `{s}`"))),
        }
    }
}

impl Serialize for Shots {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        match self {
            Shots::Count(k) => s.serialize_u64(*k as u64),
            Shots::Full => s.serialize_str("full"),
        }
    }
}

impl<'de> Deserialize<'de> for Shots {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        struct ShotsVisitor;
        impl Visitor<'_> for ShotsVisitor {
            type Value = Shots;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive shot count or \"full\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> core::result::Result<Shots, E> {
                if v == 0 {
                    return Err(E::custom("shot count must be at least 1"));
                }
                Ok(Shots::Count(v as usize))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> core::result::Result<Shots, E> {
                if v < 1 {
                    return Err(E::custom("shot count must be at least 1"));
                }
                Ok(Shots::Count(v as usize))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> core::result::Result<Shots, E> {
                v.parse().map_err(|_| E::custom(alloc::format!("invalid shot count `{v}`")))
            }
        }
        d.deserialize_any(ShotsVisitor)
    }
}

/// One evaluated cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub dataset: String,
    pub method: String,
    pub shots: Shots,
    pub seed: u64,
    pub metric: Metric,
    pub value: f64,
}

/// Downstream evaluation settings.
#[derive(Clone, Debug, PartialEq)]
pub struct Protocol {
    pub grid: Vec<f64>,
    pub folds: usize,
    pub test_fraction: f64,
    pub logistic: LogisticOptions,
}

pub const DEFAULT_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            grid: DEFAULT_GRID.to_vec(),
            folds: 5,
            test_fraction: 0.2,
            logistic: LogisticOptions::default(),
        }
    }
}

/// Result of the holdout protocol on one feature subset.
#[derive(Clone, Debug, PartialEq)]
pub struct HoldoutOutcome {
    pub metric: Metric,
    pub value: f64,
    pub best_lambda: f64,
    pub cv_score: f64,
}

/// Grid-searches lambda by cross-validation on `train`, refits on all of
/// `train` and scores on `test`.
pub fn evaluate_on_split(
    d: &Dataset,
    features: &[usize],
    train: &[usize],
    test: &[usize],
    protocol: &Protocol,
    seed: u64,
) -> Result<HoldoutOutcome> {
    let cv = grid_search_cv(d, features, train, &protocol.grid, protocol.folds, seed, protocol.logistic)?;
    let enc = Encoder::fit(d, features, train)?;
    let tr = enc.design(d, train)?;
    let te = enc.design(d, test)?;
    let model = fit_for_task(d.task(), &tr.x, &tr.y, cv.best_lambda, protocol.logistic)?;
    let value = score_model(d.task(), &model, &te.x, &te.y)?;
    Ok(HoldoutOutcome {
        metric: metric_for(d.task()),
        value,
        best_lambda: cv.best_lambda,
        cv_score: cv.best_score,
    })
}

/// Evaluates a selection with the seeded holdout protocol. The record's
/// `shots` is `Full`; callers sweeping shot budgets overwrite it.
pub fn evaluate_selection(
    d: &Dataset,
    sel: &SelectionResult,
    split_seed: u64,
    protocol: &Protocol,
) -> Result<EvaluationRecord> {
    let features = sel
        .selected
        .iter()
        .map(|n| d.feature_index(n))
        .collect::<Result<Vec<_>>>()?;
    let (train, test) = train_test_split(d, protocol.test_fraction, split_seed)?;
    let out = evaluate_on_split(d, &features, &train, &test, protocol, split_seed)?;
    Ok(EvaluationRecord {
        dataset: d.name.to_string(),
        method: sel.method.clone(),
        shots: Shots::Full,
        seed: split_seed,
        metric: out.metric,
        value: out.value,
    })
}
