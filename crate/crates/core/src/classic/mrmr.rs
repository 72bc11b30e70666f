use alloc::vec::Vec;

use super::{discretize, mutual_information, relevance};
use crate::error::Result;
use crate::selection::{selected_count, SelectionResult};
use crate::tabular::Dataset;

/// Greedy minimum-redundancy maximum-relevance selection (difference form).
///
/// The first pick maximises MI(f; y); each later pick maximises
/// `MI(f; y) − mean_{s ∈ S} MI(f; s)` over unselected features. Ties go to
/// the lower column index. The ranking lists the `k` greedy picks in order,
/// then the remaining features by relevance.
pub fn mrmr(d: &Dataset, ratio: f64) -> Result<SelectionResult> {
    let l = d.n_features();
    let k = selected_count(ratio, l)?;
    let rel = relevance(d)?;
    let codes: Vec<Vec<u32>> = d.features().iter().map(discretize).collect();

    let mut picked: Vec<usize> = Vec::with_capacity(k);
    let mut is_picked = alloc::vec![false; l];
    // running Σ_{s∈S} MI(f; s) per feature
    let mut redundancy = alloc::vec![0.0f64; l];
    while picked.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for f in (0..l).filter(|&f| !is_picked[f]) {
            let score = if picked.is_empty() {
                rel[f]
            } else {
                rel[f] - redundancy[f] / picked.len() as f64
            };
            if best.map_or(true, |(_, b)| score > b) {
                best = Some((f, score));
            }
        }
        let (f, _) = best.expect("k <= l");
        picked.push(f);
        is_picked[f] = true;
        if picked.len() < k {
            for g in (0..l).filter(|&g| !is_picked[g]) {
                redundancy[g] += mutual_information(&codes[g], &codes[f])?;
            }
        }
    }

    let mut rest: Vec<usize> = (0..l).filter(|&f| !is_picked[f]).collect();
    rest.sort_by(|&a, &b| rel[b].total_cmp(&rel[a]).then(a.cmp(&b)));
    let ranking = picked
        .into_iter()
        .chain(rest)
        .map(|i| d.feature(i).name.clone())
        .collect();
    SelectionResult::from_ranking("mrmr", ratio, None, ranking)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classic::mi_filter;
    use crate::tabular::{Column, Task};
    use alloc::vec;

    /// y determined by (x1, x3): x1 strongly informative, x3 weakly, x2 a
    /// copy of x1.
    fn redundant() -> Dataset {
        let n = 64;
        let x1: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let x3: Vec<f64> = (0..n).map(|i| ((i / 2) % 2) as f64).collect();
        // y = x1 except where x1=0,x3=1 on half of those rows
        let y: Vec<&str> = (0..n)
            .map(|i| {
                let flip = x1[i] == 0.0 && x3[i] == 1.0 && (i / 4) % 2 == 0;
                if (x1[i] == 1.0) ^ flip { "p" } else { "q" }
            })
            .collect();
        let col = |name: &str, v: &[f64]| Column::numeric(name, v.iter().map(|&x| Some(x)).collect()).unwrap();
        Dataset::new(
            "red",
            vec![col("x1", &x1), col("x2", &x1), col("x3", &x3)],
            Column::categorical("y", &y.iter().map(|&s| Some(s)).collect::<Vec<_>>()),
            Task::Classification,
        )
        .unwrap()
    }

    #[test]
    fn duplicate_is_skipped() {
        let d = redundant();
        let rel = relevance(&d).unwrap();
        // oracle: evaluate the greedy criterion by hand
        let c: Vec<Vec<u32>> = d.features().iter().map(discretize).collect();
        let h1 = mutual_information(&c[0], &c[0]).unwrap();
        let score_x2 = rel[1] - h1;
        let score_x3 = rel[2] - mutual_information(&c[2], &c[0]).unwrap();
        assert!(rel[0] > rel[2] && rel[2] > 0.0);
        assert!(score_x2 < 0.0 && score_x3 > score_x2);
        let s = mrmr(&d, 2.0 / 3.0).unwrap();
        assert_eq!(s.selected, vec!["x1", "x3"]);
        assert_eq!(s.ranking, vec!["x1", "x3", "x2"]);
    }

    #[test]
    fn first_pick_matches_filter() {
        let d = redundant();
        assert_eq!(mrmr(&d, 0.1).unwrap().selected, mi_filter(&d, 0.1).unwrap().selected);
    }

    #[test]
    fn independent_features_tie_break_by_index() {
        let y: Vec<Option<&str>> = (0..8).map(|i| Some(if i % 2 == 0 { "a" } else { "b" })).collect();
        let cols = (0..4)
            .map(|j| Column::numeric(alloc::format!("f{j}"), vec![Some(j as f64); 8]).unwrap())
            .collect();
        let d = Dataset::new("t", cols, Column::categorical("y", &y), Task::Classification).unwrap();
        assert_eq!(mrmr(&d, 0.5).unwrap().selected, vec!["f0", "f1"]);
    }
}
