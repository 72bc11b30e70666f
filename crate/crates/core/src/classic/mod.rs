//! Classic selectors: mutual-information filter, mRMR, RFE and random.

mod filter;
mod mi;
mod mrmr;
mod random;
mod rfe;

pub use filter::{mi_filter, relevance};
pub use mi::{discretize, entropy, equal_frequency_bins, mutual_information, MAX_BINS};
pub use mrmr::mrmr;
pub use random::random_select;
pub use rfe::{rfe, rfe_trace, RfeTrace, DEFAULT_RFE_LAMBDA};

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::tabular::Dataset;

/// Feature names ordered by descending score, ties by ascending column.
pub(crate) fn rank_by_score(d: &Dataset, scores: &[f64]) -> Vec<String> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.into_iter().map(|i| d.feature(i).name.to_string()).collect()
}
