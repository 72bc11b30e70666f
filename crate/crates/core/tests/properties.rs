use std::collections::{BTreeMap, BTreeSet};

use featsel_core::classic::{entropy, mi_filter, mrmr, mutual_information, random_select, rfe, rfe_trace};
use featsel_core::eval::{auroc, fit_logistic, fit_ridge, fold_assignment, LogisticOptions};
use featsel_core::linalg::Matrix;
use featsel_core::llm::{build_data_driven_prompt, rank_and_select, DataDrivenTemplate, FeatureScore, ScoreMethod};
use featsel_core::tabular::{make_sample_pairs, subsample_shots};
use featsel_core::{selected_count, Column, Dataset, SelectionResult, Task};
use proptest::prelude::*;

fn table() -> impl Strategy<Value = Dataset> {
    (20usize..60, 2usize..7).prop_flat_map(|(n, l)| {
        let cols = prop::collection::vec(prop::collection::vec(0u8..6, n), l);
        let noise = prop::collection::vec(-1.0f64..1.0, n);
        let labels = prop::collection::vec(0u8..3, n);
        (cols, noise, labels).prop_map(move |(cols, noise, labels)| {
            let features = cols
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    // odd columns are continuous, even ones are small integers with ties
                    let v = c.iter().zip(&noise).map(|(&a, &e)| Some(if j % 2 == 1 { a as f64 + e } else { a as f64 }));
                    Column::numeric(format!("f{j}"), v.collect()).unwrap()
                })
                .collect();
            let mut y: Vec<Option<&str>> = labels.iter().map(|&c| Some(if c == 0 { "yes" } else { "no" })).collect();
            y[0] = Some("yes");
            y[1] = Some("no");
            Dataset::new("t", features, Column::categorical("y", &y), Task::Classification).unwrap()
        })
    })
}

fn check_selection(d: &Dataset, s: &SelectionResult, ratio: f64) {
    let k = selected_count(ratio, d.n_features()).unwrap();
    assert_eq!(s.selected.len(), k);
    assert_eq!(&s.ranking[..k], &s.selected[..]);
    let names: BTreeSet<&str> = s.ranking.iter().map(String::as_str).collect();
    assert_eq!(names.len(), s.ranking.len());
    assert_eq!(names, d.feature_names().into_iter().collect());
}

fn plug_in_mi(x: &[u32], y: &[u32]) -> f64 {
    let n = x.len() as f64;
    let mut joint: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    let mut px: BTreeMap<u32, f64> = BTreeMap::new();
    let mut py: BTreeMap<u32, f64> = BTreeMap::new();
    for (&a, &b) in x.iter().zip(y) {
        *joint.entry((a, b)).or_default() += 1.0;
        *px.entry(a).or_default() += 1.0;
        *py.entry(b).or_default() += 1.0;
    }
    joint.iter().map(|(&(a, b), &c)| c / n * ((c * n) / (px[&a] * py[&b])).ln()).sum()
}

/// Gauss-Seidel on the ridge normal equations with an unpenalised bias.
fn ridge_by_coordinate_descent(x: &Matrix, y: &[f64], lambda: f64) -> (Vec<f64>, f64) {
    let (n, p) = (x.rows(), x.cols());
    let mut w = vec![0.0; p];
    let mut b = 0.0;
    for _ in 0..100_000 {
        let mut moved: f64 = 0.0;
        let r: Vec<f64> = (0..n).map(|i| y[i] - b - (0..p).map(|j| x.get(i, j) * w[j]).sum::<f64>()).collect();
        let nb = b + r.iter().sum::<f64>() / n as f64;
        moved = moved.max((nb - b).abs());
        b = nb;
        for j in 0..p {
            let mut num = 0.0;
            let mut den = lambda;
            for i in 0..n {
                let ri = y[i] - b - (0..p).filter(|&c| c != j).map(|c| x.get(i, c) * w[c]).sum::<f64>();
                num += x.get(i, j) * ri;
                den += x.get(i, j) * x.get(i, j);
            }
            let nw = num / den;
            moved = moved.max((nw - w[j]).abs());
            w[j] = nw;
        }
        if moved < 1e-13 {
            break;
        }
    }
    (w, b)
}

fn matrix(rows: usize, cols: usize, vals: &[f64]) -> Matrix {
    Matrix::from_vec(rows, cols, vals[..rows * cols].to_vec()).unwrap()
}

fn score(feature: &str, s: f64) -> FeatureScore {
    FeatureScore {
        feature: feature.into(),
        score: s,
        rationale: None,
        method: ScoreMethod::TextBased,
        model_id: "m".into(),
        warning: None,
        error: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn count_rule_matches_integer_rounding(permille in 1u64..=1000, l in 1usize..300) {
        let expected = ((permille * l as u64 + 500) / 1000).max(1) as usize;
        prop_assert_eq!(selected_count(permille as f64 / 1000.0, l).unwrap(), expected);
    }

    #[test]
    fn every_selector_keeps_a_ranking_prefix(d in table(), permille in 50u64..=1000, seed in 0u64..1000) {
        let ratio = permille as f64 / 1000.0;
        check_selection(&d, &mi_filter(&d, ratio).unwrap(), ratio);
        check_selection(&d, &mrmr(&d, ratio).unwrap(), ratio);
        check_selection(&d, &rfe(&d, ratio, 1.0).unwrap(), ratio);
        check_selection(&d, &random_select(&d, ratio, seed).unwrap(), ratio);
    }

    #[test]
    fn mrmr_opens_with_the_filter_winner(d in table()) {
        prop_assert_eq!(&mrmr(&d, 1.0).unwrap().ranking[0], &mi_filter(&d, 1.0).unwrap().ranking[0]);
    }

    #[test]
    fn rfe_survivors_shrink_by_nesting(d in table(), permille in 50u64..=1000) {
        let t = rfe_trace(&d, permille as f64 / 1000.0, 1.0).unwrap();
        prop_assert_eq!(t.rounds[0].len(), d.n_features());
        for w in t.rounds.windows(2) {
            let (a, b): (BTreeSet<_>, BTreeSet<_>) = (w[0].iter().collect(), w[1].iter().collect());
            prop_assert!(b.is_subset(&a) && b.len() + 1 == a.len());
        }
    }

    #[test]
    fn mi_matches_direct_summation(pairs in prop::collection::vec((0u32..5, 0u32..5), 1..100)) {
        let (x, y): (Vec<u32>, Vec<u32>) = pairs.into_iter().unzip();
        let mi = mutual_information(&x, &y).unwrap();
        prop_assert!((mi - plug_in_mi(&x, &y)).abs() < 1e-9);
        prop_assert!(mi >= 0.0);
        prop_assert!((mutual_information(&x, &x).unwrap() - entropy(&x)).abs() < 1e-12);
        prop_assert!((mi - mutual_information(&y, &x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn auroc_ignores_increasing_transforms(pts in prop::collection::vec((-20i32..20, any::<bool>()), 2..80)) {
        prop_assume!(pts.iter().any(|p| p.1) && pts.iter().any(|p| !p.1));
        let labels: Vec<f64> = pts.iter().map(|p| if p.1 { 1.0 } else { 0.0 }).collect();
        let raw: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
        let cubed: Vec<f64> = raw.iter().map(|v| v * v * v + 3.0 * v - 7.0).collect();
        let scaled: Vec<f64> = raw.iter().map(|v| 0.25 * v + 100.0).collect();
        let a = auroc(&raw, &labels).unwrap();
        prop_assert_eq!(a, auroc(&cubed, &labels).unwrap());
        prop_assert_eq!(a, auroc(&scaled, &labels).unwrap());
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn ranking_ignores_increasing_transforms(raw in prop::collection::vec(0u8..=10, 1..25), permille in 1u64..=1000) {
        let ratio = permille as f64 / 1000.0;
        let plain: Vec<FeatureScore> = raw.iter().enumerate().map(|(i, &s)| score(&format!("f{i}"), s as f64 / 10.0)).collect();
        let squashed: Vec<FeatureScore> = plain.iter().map(|f| score(&f.feature, f.score.sqrt())).collect();
        let a = rank_and_select(&plain, ratio).unwrap();
        let b = rank_and_select(&squashed, ratio).unwrap();
        prop_assert_eq!(a.ranking, b.ranking);
        prop_assert_eq!(a.selected, b.selected);
    }

    #[test]
    fn ridge_shrinks_monotonically_and_matches_iteration(
        vals in prop::collection::vec(-2.0f64..2.0, 30 * 4),
        ys in prop::collection::vec(-3.0f64..3.0, 30),
    ) {
        let x = matrix(30, 4, &vals);
        let mut last = f64::INFINITY;
        for lambda in [0.1, 1.0, 10.0, 100.0] {
            let m = fit_ridge(&x, &ys, lambda).unwrap();
            let norm = m.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
            prop_assert!(norm <= last + 1e-12);
            last = norm;
            let (w, b) = ridge_by_coordinate_descent(&x, &ys, lambda);
            let gap = m.weights.iter().zip(&w).map(|(a, c)| (a - c).abs()).fold((m.bias - b).abs(), f64::max);
            prop_assert!(gap < 1e-6, "lambda {lambda}: gap {gap}");
        }
    }

    #[test]
    fn logistic_objective_never_increases(
        vals in prop::collection::vec(-2.0f64..2.0, 40 * 3),
        labels in prop::collection::vec(any::<bool>(), 40),
        lambda in prop::sample::select(vec![0.01, 0.1, 1.0, 10.0]),
    ) {
        let x = matrix(40, 3, &vals);
        let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
        let m = fit_logistic(&x, &y, lambda, LogisticOptions::default()).unwrap();
        prop_assert!(m.weights.iter().all(|w| w.is_finite()));
        for w in m.diagnostics.objective_path.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn folds_partition_and_balance(classes in prop::collection::vec(0u32..3, 10..150), folds in 2usize..8, seed: u64) {
        let counts = |rows: &mut dyn Iterator<Item = usize>| {
            let mut c = vec![0usize; folds];
            for f in rows {
                c[f] += 1;
            }
            c
        };
        let spread = |c: &[usize]| c.iter().max().unwrap() - c.iter().min().unwrap();
        let a = fold_assignment(classes.len(), Some(&classes), folds, seed).unwrap();
        prop_assert_eq!(a.len(), classes.len());
        prop_assert!(a.iter().all(|&f| f < folds));
        prop_assert!(spread(&counts(&mut a.iter().copied())) <= 1);
        for class in 0..3 {
            prop_assert!(spread(&counts(&mut a.iter().zip(&classes).filter(|p| *p.1 == class).map(|p| *p.0))) <= 1);
        }
        prop_assert_eq!(&a, &fold_assignment(classes.len(), Some(&classes), folds, seed).unwrap());
    }

    #[test]
    fn shots_are_distinct_stratified_and_seeded(d in table(), k in 1usize..20, seed: u64) {
        let rows = subsample_shots(&d, k, seed).unwrap();
        prop_assert_eq!(rows.len(), k);
        prop_assert_eq!(rows.iter().collect::<BTreeSet<_>>().len(), k);
        prop_assert_eq!(&rows, &subsample_shots(&d, k, seed).unwrap());
        if k >= 2 {
            let codes = d.class_codes().unwrap();
            prop_assert_eq!(rows.iter().map(|&r| codes[r]).collect::<BTreeSet<_>>().len(), 2);
        }
        let sp = make_sample_pairs(&d, "f0", &rows).unwrap();
        prop_assert_eq!(sp.pairs.len(), k);
        prop_assert_eq!(sp.shots, k);
        let tpl = DataDrivenTemplate::default();
        prop_assert_eq!(build_data_driven_prompt(&sp, &tpl).unwrap(), build_data_driven_prompt(&sp, &tpl).unwrap());
    }
}
