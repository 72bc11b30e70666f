use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::metrics::Metric;
use super::protocol::{EvaluationRecord, Shots};
use crate::error::{Error, Result};

/// Mean rank per method across evaluation blocks.
///
/// A block is one `(dataset, shots, seed)` triple. Within a block methods
/// are ranked 1..M by the block's metric (AUROC descending, MAE ascending),
/// tied values sharing the average of their ranks. Every method must have
/// a record in every block. Output follows first appearance of each method.
pub fn aggregate_rank(records: &[EvaluationRecord]) -> Result<Vec<(String, f64)>> {
    let mut methods: Vec<&str> = Vec::new();
    for r in records {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let mut blocks: BTreeMap<(&str, Shots, u64), Vec<&EvaluationRecord>> = BTreeMap::new();
    for r in records {
        blocks.entry((r.dataset.as_str(), r.shots, r.seed)).or_default().push(r);
    }
    let mut totals = alloc::vec![0.0f64; methods.len()];
    for ((dataset, shots, seed), block) in &blocks {
        let label = || format!("{dataset} shots={shots} seed={seed}");
        let mut values: Vec<f64> = Vec::with_capacity(methods.len());
        let mut metric: Option<Metric> = None;
        for m in &methods {
            let rec = block.iter().find(|r| r.method == *m).ok_or_else(|| Error::MissingCell {
                method: String::from(*m),
                block: label(),
            })?;
            if metric.is_some_and(|x| x != rec.metric) {
                return Err(Error::Config(format!("mixed metrics in block {}", label())));
            }
            metric = Some(rec.metric);
            values.push(rec.value);
        }
        let metric = metric.expect("at least one method");
        for (t, r) in totals.iter_mut().zip(average_ranks(&values, metric)) {
            *t += r;
        }
    }
    let nb = blocks.len() as f64;
    Ok(methods
        .into_iter()
        .zip(totals)
        .map(|(m, t)| (String::from(m), t / nb))
        .collect())
}

/// 1-based ranks, best first, ties averaged.
pub fn average_ranks(values: &[f64], metric: Metric) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let c = values[a].total_cmp(&values[b]);
        if metric.higher_is_better() {
            c.reverse()
        } else {
            c
        }
    });
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mid = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = mid;
        }
        i = j + 1;
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn rec(dataset: &str, method: &str, metric: Metric, value: f64) -> EvaluationRecord {
        EvaluationRecord {
            dataset: dataset.to_string(),
            method: method.to_string(),
            shots: Shots::Full,
            seed: 0,
            metric,
            value,
        }
    }

    #[test]
    fn single_dataset_sorted_order() {
        let r = vec![
            rec("d", "a", Metric::Mae, 3.0),
            rec("d", "b", Metric::Mae, 1.0),
            rec("d", "c", Metric::Mae, 2.0),
        ];
        let out = aggregate_rank(&r).unwrap();
        assert_eq!(out, vec![("a".into(), 3.0), ("b".into(), 1.0), ("c".into(), 2.0)]);
    }

    #[test]
    fn consistent_winner_has_rank_one() {
        let mut r = Vec::new();
        for d in ["d1", "d2", "d3", "d4"] {
            r.push(rec(d, "best", Metric::Mae, 0.5));
            r.push(rec(d, "other", Metric::Mae, 0.9));
        }
        let out = aggregate_rank(&r).unwrap();
        assert_eq!(out[0], ("best".into(), 1.0));
        assert_eq!(out[1], ("other".into(), 2.0));
    }

    #[test]
    fn ties_share_average_rank() {
        assert_eq!(average_ranks(&[0.8, 0.8, 0.6], Metric::Auroc), vec![1.5, 1.5, 3.0]);
        assert_eq!(average_ranks(&[0.8, 0.8, 0.6], Metric::Mae), vec![2.5, 2.5, 1.0]);
    }

    #[test]
    fn missing_cell_reported() {
        let r = vec![rec("d1", "a", Metric::Auroc, 0.7), rec("d1", "b", Metric::Auroc, 0.6), rec("d2", "a", Metric::Auroc, 0.7)];
        assert!(matches!(aggregate_rank(&r), Err(Error::MissingCell { .. })));
    }
}
