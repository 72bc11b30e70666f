use alloc::vec::Vec;

use super::{discretize, mutual_information, rank_by_score};
use crate::error::Result;
use crate::selection::SelectionResult;
use crate::tabular::Dataset;

/// MI(feature; target) for every feature, in column order.
pub fn relevance(d: &Dataset) -> Result<Vec<f64>> {
    let y = discretize(d.target());
    d.features()
        .iter()
        .map(|c| mutual_information(&discretize(c), &y))
        .collect()
}

/// Ranks features by descending mutual information with the target.
pub fn mi_filter(d: &Dataset, ratio: f64) -> Result<SelectionResult> {
    let scores = relevance(d)?;
    SelectionResult::from_ranking("mi", ratio, None, rank_by_score(d, &scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{Column, Task};
    use alloc::vec;

    fn copied_and_noise() -> Dataset {
        let y: Vec<Option<&str>> = (0..40).map(|i| Some(if i % 2 == 0 { "a" } else { "b" })).collect();
        let x1: Vec<Option<f64>> = (0..40).map(|i| Some((i % 2) as f64)).collect();
        // x2 cycles with period 4 in lock-step over both classes: independent of y
        let x2: Vec<Option<f64>> = (0..40).map(|i| Some(((i / 2) % 2) as f64)).collect();
        Dataset::new(
            "syn",
            vec![Column::numeric("x2", x2).unwrap(), Column::numeric("x1", x1).unwrap()],
            Column::categorical("y", &y),
            Task::Classification,
        )
        .unwrap()
    }

    #[test]
    fn copied_feature_wins() {
        let d = copied_and_noise();
        let rel = relevance(&d).unwrap();
        // oracle: MI(x1;y) = H(y) = ln 2, MI(x2;y) = 0 on this balanced design
        assert!((rel[1] - core::f64::consts::LN_2).abs() < 1e-12);
        assert!(rel[0].abs() < 1e-12);
        let s = mi_filter(&d, 0.5).unwrap();
        assert_eq!(s.selected, vec!["x1"]);
        assert_eq!(mi_filter(&d, 1.0).unwrap().selected.len(), 2);
    }

    #[test]
    fn ties_keep_column_order() {
        let y: Vec<Option<&str>> = (0..8).map(|i| Some(if i < 4 { "a" } else { "b" })).collect();
        let cols = (0..10)
            .map(|j| Column::numeric(alloc::format!("f{j}"), vec![Some(1.0); 8]).unwrap())
            .collect();
        let d = Dataset::new("t", cols, Column::categorical("y", &y), Task::Classification).unwrap();
        let s = mi_filter(&d, 0.3).unwrap();
        assert_eq!(s.selected, vec!["f0", "f1", "f2"]);
    }
}
