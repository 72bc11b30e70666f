use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::Result;
use crate::rng::{seeded, Stream};
use crate::selection::SelectionResult;
use crate::tabular::Dataset;

/// Uniformly random ranking; the selected prefix is a uniform k-subset.
pub fn random_select(d: &Dataset, ratio: f64, seed: u64) -> Result<SelectionResult> {
    let mut order: Vec<usize> = (0..d.n_features()).collect();
    order.shuffle(&mut seeded(seed, Stream::RandomSelect));
    let ranking = order.into_iter().map(|i| d.feature(i).name.clone()).collect();
    SelectionResult::from_ranking("random", ratio, Some(seed), ranking)
}
