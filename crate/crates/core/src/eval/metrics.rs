use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Auroc,
    Mae,
}

impl Metric {
    pub fn higher_is_better(self) -> bool {
        matches!(self, Metric::Auroc)
    }

    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        if self.higher_is_better() {
            a > b
        } else {
            a < b
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Auroc => "auroc",
            Metric::Mae => "mae",
        })
    }
}

impl core::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auroc" => Ok(Metric::Auroc),
            "mae" => Ok(Metric::Mae),
            other => Err(Error::Config(alloc::format!("unknown metric `{other}`"))),
        }
    }
}

/// Area under the ROC curve in Mann–Whitney form:
/// `P(s⁺ > s⁻) + ½ P(s⁺ = s⁻)` over positive–negative pairs.
///
/// Computed from mid-ranks; rank sums are kept doubled in integers so the
/// result is exactly the pair count divided by `n⁺·n⁻`.
pub fn auroc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores"));
    }
    if labels.iter().any(|&l| l != 0.0 && l != 1.0) {
        return Err(Error::NonBinaryLabels);
    }
    let n_pos = labels.iter().filter(|&&l| l == 1.0).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Σ over positives of 2·(mid-rank), ranks 1-based
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share mid-rank (i + j + 2) / 2
        let twice_mid = (i + j + 2) as u64;
        let pos_in_block = order[i..=j].iter().filter(|&&k| labels[k] == 1.0).count() as u64;
        twice_rank_sum += twice_mid * pos_in_block;
        i = j + 1;
    }
    let twice_u = twice_rank_sum - n_pos * (n_pos + 1);
    Ok(twice_u as f64 / (2 * n_pos * n_neg) as f64)
}

/// Mean absolute error.
pub fn mae(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: target.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    let total: f64 = pred.iter().zip(target).map(|(p, t)| libm::fabs(p - t)).sum();
    Ok(total / pred.len() as f64)
}
