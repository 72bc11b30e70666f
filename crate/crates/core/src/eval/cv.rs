use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::linear::{fit_logistic, fit_ridge, LinearModel, LogisticOptions};
use super::metrics::{auroc, mae, Metric};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{seeded, Stream};
use crate::tabular::{class_groups, Dataset, Encoder, Task};

pub fn metric_for(task: Task) -> Metric {
    match task {
        Task::Classification => Metric::Auroc,
        Task::Regression => Metric::Mae,
    }
}

/// Fits the downstream model matching the task: logistic for
/// classification, ridge for regression.
pub fn fit_for_task(task: Task, x: &Matrix, y: &[f64], lambda: f64, opts: LogisticOptions) -> Result<LinearModel> {
    match task {
        Task::Classification => fit_logistic(x, y, lambda, opts),
        Task::Regression => fit_ridge(x, y, lambda),
    }
}

/// AUROC of the decision values, or MAE of the predictions.
pub fn score_model(task: Task, model: &LinearModel, x: &Matrix, y: &[f64]) -> Result<f64> {
    match task {
        Task::Classification => auroc(&model.decision(x), y),
        Task::Regression => mae(&model.predict(x), y),
    }
}

/// Assigns each of `n` positions to one of `folds` folds. With `strata`,
/// positions are shuffled within each stratum, the strata are laid end to
/// end in stratum order and dealt round-robin, so fold sizes differ by at
/// most one overall and within every stratum.
pub fn fold_assignment(n: usize, strata: Option<&[u32]>, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    if n < folds {
        return Err(Error::Config(format!("{n} rows cannot fill {folds} folds")));
    }
    let mut rng = seeded(seed, Stream::Folds);
    let order: Vec<usize> = match strata {
        Some(s) => {
            if s.len() != n {
                return Err(Error::LengthMismatch { left: s.len(), right: n });
            }
            let mut groups = class_groups(s);
            for g in &mut groups {
                g.shuffle(&mut rng);
            }
            groups.into_iter().flatten().collect()
        }
        None => {
            let mut v: Vec<usize> = (0..n).collect();
            v.shuffle(&mut rng);
            v
        }
    };
    let mut assign = alloc::vec![0usize; n];
    for (pos, idx) in order.into_iter().enumerate() {
        assign[idx] = pos % folds;
    }
    Ok(assign)
}

/// Seeded holdout split; stratified by class for classification. Each
/// class with at least two rows contributes at least one row to each side.
/// Both index lists come back ascending.
pub fn train_test_split(d: &Dataset, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let n = d.n_rows();
    if n < 2 {
        return Err(Error::Config("need at least two rows to split".into()));
    }
    let mut rng = seeded(seed, Stream::Split);
    let groups = match d.class_codes() {
        Some(codes) => class_groups(&codes),
        None => alloc::vec![(0..n).collect::<Vec<_>>()],
    };
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for mut g in groups {
        if g.is_empty() {
            continue;
        }
        g.shuffle(&mut rng);
        let m = g.len();
        let mut t = libm::round(test_fraction * m as f64) as usize;
        if m >= 2 {
            t = t.clamp(1, m - 1);
        } else {
            t = 0;
        }
        test.extend_from_slice(&g[..t]);
        train.extend_from_slice(&g[t..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvOutcome {
    pub best_lambda: f64,
    pub best_score: f64,
    pub metric: Metric,
    /// Mean validation metric per grid point, in grid order.
    pub scores: Vec<f64>,
}

/// K-fold grid search over `lambda` on `rows` of `d`, using only the
/// feature columns in `features`. Preprocessing is refitted on every
/// training fold. Ties go to the larger lambda.
pub fn grid_search_cv(
    d: &Dataset,
    features: &[usize],
    rows: &[usize],
    grid: &[f64],
    folds: usize,
    seed: u64,
    opts: LogisticOptions,
) -> Result<CvOutcome> {
    if grid.is_empty() {
        return Err(Error::Config("lambda grid is empty".into()));
    }
    let task = d.task();
    let metric = metric_for(task);
    let codes = d.class_codes();
    let strata: Option<Vec<u32>> = codes.as_ref().map(|c| rows.iter().map(|&r| c[r]).collect());
    let assign = fold_assignment(rows.len(), strata.as_deref(), folds, seed)?;

    let mut sums = alloc::vec![0.0f64; grid.len()];
    for fold in 0..folds {
        let train: Vec<usize> = rows.iter().zip(&assign).filter(|(_, &a)| a != fold).map(|(&r, _)| r).collect();
        let valid: Vec<usize> = rows.iter().zip(&assign).filter(|(_, &a)| a == fold).map(|(&r, _)| r).collect();
        if let Some(c) = &codes {
            let classes_in = |part: &[usize]| {
                let mut seen: Vec<u32> = part.iter().map(|&r| c[r]).collect();
                seen.sort_unstable();
                seen.dedup();
                seen
            };
            let all = classes_in(rows);
            if classes_in(&train) != all {
                return Err(Error::Config(format!(
                    "fold {fold}: a class is absent from the training part ({folds} folds exceed the minority count)"
                )));
            }
            if classes_in(&valid).len() < 2 {
                return Err(Error::Config(format!("fold {fold}: validation part holds a single class")));
            }
        }
        let enc = Encoder::fit(d, features, &train)?;
        let tr = enc.design(d, &train)?;
        let va = enc.design(d, &valid)?;
        for (slot, &lambda) in sums.iter_mut().zip(grid) {
            let model = fit_for_task(task, &tr.x, &tr.y, lambda, opts)?;
            *slot += score_model(task, &model, &va.x, &va.y)?;
        }
    }
    let scores: Vec<f64> = sums.into_iter().map(|s| s / folds as f64).collect();
    let mut best = 0;
    for i in 1..grid.len() {
        let (s, b) = (scores[i], scores[best]);
        let tie = libm::fabs(s - b) <= 1e-12 * b.abs().max(1.0);
        if (!tie && metric.better(s, b)) || (tie && grid[i] > grid[best]) {
            best = i;
        }
    }
    Ok(CvOutcome {
        best_lambda: grid[best],
        best_score: scores[best],
        metric,
        scores,
    })
}
