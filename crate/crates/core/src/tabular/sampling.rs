use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{seeded, Stream};
use crate::tabular::Dataset;

/// `(feature value, target value)` pairs rendered as raw strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePairs {
    pub feature: String,
    pub pairs: Vec<(String, String)>,
    pub shots: usize,
}

const MISSING: &str = "NA";

/// Draws `k` distinct rows. Classification draws are stratified: per-class
/// counts follow the class proportions (largest remainder) and every present
/// class gets at least one row when `k` is at least the class count. The
/// result is grouped by class (class order), each group in shuffled order.
pub fn subsample_shots(d: &Dataset, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = d.n_rows();
    if k == 0 {
        return Err(Error::Config("shot count must be at least 1".into()));
    }
    if k > n {
        return Err(Error::TooManyShots {
            requested: k,
            available: n,
        });
    }
    let mut rng = seeded(seed, Stream::Shots);
    match d.class_codes() {
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            idx.truncate(k);
            Ok(idx)
        }
        Some(codes) => {
            let mut groups = class_groups(&codes);
            let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
            let quota = stratified_quota(&sizes, k);
            let mut out = Vec::with_capacity(k);
            for (group, take) in groups.iter_mut().zip(quota) {
                group.shuffle(&mut rng);
                out.extend_from_slice(&group[..take]);
            }
            Ok(out)
        }
    }
}

/// Row indices per class code, ascending. Classes with no rows are kept as
/// empty groups so positions line up with codes.
pub(crate) fn class_groups(codes: &[u32]) -> Vec<Vec<usize>> {
    let n_classes = codes.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
    let mut groups = alloc::vec![Vec::new(); n_classes];
    for (i, &c) in codes.iter().enumerate() {
        groups[c as usize].push(i);
    }
    groups
}

/// Splits `k` across groups of the given sizes proportionally, using the
/// largest-remainder rule. Non-empty groups get at least one slot when
/// `k` allows it. Ties resolve toward the lower group index.
pub(crate) fn stratified_quota(sizes: &[usize], k: usize) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    debug_assert!(k <= n);
    let present = sizes.iter().filter(|&&s| s > 0).count();
    let floor_one = k >= present;
    let exact: Vec<f64> = sizes.iter().map(|&s| k as f64 * s as f64 / n as f64).collect();
    let mut quota: Vec<usize> = sizes
        .iter()
        .zip(&exact)
        .map(|(&s, &q)| {
            let base = libm::floor(q) as usize;
            if floor_one && s > 0 {
                base.max(1).min(s)
            } else {
                base.min(s)
            }
        })
        .collect();
    let mut total: usize = quota.iter().sum();
    while total < k {
        // grow the group furthest below its exact share
        let pick = (0..sizes.len())
            .filter(|&i| quota[i] < sizes[i])
            .max_by(|&a, &b| {
                let (ra, rb) = (exact[a] - quota[a] as f64, exact[b] - quota[b] as f64);
                ra.partial_cmp(&rb).unwrap().then(b.cmp(&a))
            })
            .expect("k <= n leaves room");
        quota[pick] += 1;
        total += 1;
    }
    while total > k {
        // shrink the group furthest above its exact share, keeping the floor
        let min_keep = usize::from(floor_one);
        let pick = (0..sizes.len())
            .filter(|&i| quota[i] > min_keep)
            .max_by(|&a, &b| {
                let (ra, rb) = (quota[a] as f64 - exact[a], quota[b] as f64 - exact[b]);
                ra.partial_cmp(&rb).unwrap().then(b.cmp(&a))
            })
            .expect("total > k implies a shrinkable group");
        quota[pick] -= 1;
        total -= 1;
    }
    quota
}

/// Builds the sample pairs for one feature over `rows`, in the given order.
pub fn make_sample_pairs(d: &Dataset, feature: &str, rows: &[usize]) -> Result<SamplePairs> {
    let col = d.feature(d.feature_index(feature)?);
    let n = d.n_rows();
    let pairs = rows
        .iter()
        .map(|&r| {
            if r >= n {
                return Err(Error::RowOutOfRange(r));
            }
            let value = col.render(r).unwrap_or_else(|| MISSING.to_string());
            let target = d.target().render(r).unwrap_or_else(|| MISSING.to_string());
            Ok((value, target))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SamplePairs {
        feature: feature.to_string(),
        shots: pairs.len(),
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{Column, Task};
    use alloc::collections::BTreeSet;
    use alloc::vec;
    use proptest::prelude::*;

    fn cls_dataset(labels: &[&str]) -> Dataset {
        let x: Vec<Option<f64>> = (0..labels.len()).map(|i| Some(i as f64)).collect();
        let y: Vec<Option<&str>> = labels.iter().map(|&l| Some(l)).collect();
        Dataset::new(
            "cls",
            vec![Column::numeric("x", x).unwrap()],
            Column::categorical("y", &y),
            Task::Classification,
        )
        .unwrap()
    }

    #[test]
    fn full_sample_returns_every_row() {
        let d = cls_dataset(&["a", "b", "a", "b", "b"]);
        let idx = subsample_shots(&d, 5, 3).unwrap();
        let set: BTreeSet<usize> = idx.iter().copied().collect();
        assert_eq!(set, (0..5).collect());
    }

    #[test]
    fn too_many_shots() {
        let d = cls_dataset(&["a", "b"]);
        assert_eq!(
            subsample_shots(&d, 3, 0),
            Err(Error::TooManyShots {
                requested: 3,
                available: 2
            })
        );
    }

    #[test]
    fn same_seed_same_rows() {
        let labels: Vec<&str> = (0..100).map(|i| if i % 7 == 0 { "x" } else { "y" }).collect();
        let d = cls_dataset(&labels);
        assert_eq!(subsample_shots(&d, 16, 9).unwrap(), subsample_shots(&d, 16, 9).unwrap());
        assert_ne!(subsample_shots(&d, 16, 9).unwrap(), subsample_shots(&d, 16, 10).unwrap());
    }

    #[test]
    fn quota_gives_minority_a_slot() {
        assert_eq!(stratified_quota(&[99, 1], 16), vec![15, 1]);
        assert_eq!(stratified_quota(&[700, 300], 16), vec![11, 5]);
        assert_eq!(stratified_quota(&[5, 5], 10), vec![5, 5]);
        assert_eq!(stratified_quota(&[3, 0, 3], 2), vec![1, 0, 1]);
        // fewer slots than classes: largest groups first
        assert_eq!(stratified_quota(&[1, 5, 4], 2), vec![0, 1, 1]);
    }

    #[test]
    fn pairs_render_raw_values() {
        let d = Dataset::new(
            "r",
            vec![Column::numeric("x", vec![Some(3.5), Some(2.0)]).unwrap()],
            Column::numeric("y", vec![Some(1.0), Some(0.25)]).unwrap(),
            Task::Regression,
        )
        .unwrap();
        let sp = make_sample_pairs(&d, "x", &[0]).unwrap();
        assert_eq!(sp.pairs, vec![("3.5".to_string(), "1".to_string())]);
        assert_eq!(sp.shots, 1);
        // oracle: the stored scalar parses back from its rendering
        let back: f64 = sp.pairs[0].0.parse().unwrap();
        assert_eq!(back, 3.5);
        let sp = make_sample_pairs(&d, "x", &[1, 0]).unwrap();
        assert_eq!(sp.pairs[0], ("2".to_string(), "0.25".to_string()));
        assert!(matches!(make_sample_pairs(&d, "nope", &[0]), Err(Error::UnknownFeature(_))));
        assert_eq!(make_sample_pairs(&d, "x", &[7]), Err(Error::RowOutOfRange(7)));
    }

    proptest! {
        #[test]
        fn every_class_represented(
            labels in proptest::collection::vec(0u8..4, 4..120),
            seed in any::<u64>(),
            kfrac in 0.0f64..1.0,
        ) {
            let names = ["a", "b", "c", "d"];
            let lab: Vec<&str> = labels.iter().map(|&l| names[l as usize]).collect();
            let distinct: BTreeSet<&str> = lab.iter().copied().collect();
            prop_assume!(distinct.len() >= 2);
            let d = cls_dataset(&lab);
            let n = lab.len();
            let k = distinct.len() + ((n - distinct.len()) as f64 * kfrac) as usize;
            let idx = subsample_shots(&d, k, seed).unwrap();
            prop_assert_eq!(idx.len(), k);
            let uniq: BTreeSet<usize> = idx.iter().copied().collect();
            prop_assert_eq!(uniq.len(), k);
            let got: BTreeSet<&str> = idx.iter().map(|&i| lab[i]).collect();
            prop_assert_eq!(got, distinct);
        }
    }
}
