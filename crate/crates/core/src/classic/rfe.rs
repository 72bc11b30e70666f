use alloc::vec::Vec;

use crate::error::Result;
use crate::eval::{fit_for_task, LogisticOptions};
use crate::selection::{selected_count, SelectionResult};
use crate::tabular::{Dataset, Encoder};

pub const DEFAULT_RFE_LAMBDA: f64 = 1.0;

/// Survivor sets seen during elimination, as column indices in column
/// order; `rounds[0]` is the full feature set.
#[derive(Clone, Debug, PartialEq)]
pub struct RfeTrace {
    pub rounds: Vec<Vec<usize>>,
    pub eliminated: Vec<usize>,
    pub final_scores: Vec<(usize, f64)>,
}

/// Recursive feature elimination with the task's L2-penalised linear model
/// (logistic or ridge) refitted on all rows of `d` each round. A feature's
/// score is the largest |coefficient| over its encoded columns; the lowest
/// scorer is dropped (ties drop the higher column index) until `k` remain.
pub fn rfe(d: &Dataset, ratio: f64, lambda: f64) -> Result<SelectionResult> {
    let trace = rfe_trace(d, ratio, lambda)?;
    let mut survivors = trace.final_scores.clone();
    survivors.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let ranking = survivors
        .into_iter()
        .map(|(i, _)| i)
        .chain(trace.eliminated.iter().rev().copied())
        .map(|i| d.feature(i).name.clone())
        .collect();
    SelectionResult::from_ranking("rfe", ratio, None, ranking)
}

pub fn rfe_trace(d: &Dataset, ratio: f64, lambda: f64) -> Result<RfeTrace> {
    let k = selected_count(ratio, d.n_features())?;
    let rows: Vec<usize> = (0..d.n_rows()).collect();
    let mut alive: Vec<usize> = (0..d.n_features()).collect();
    let mut rounds = alloc::vec![alive.clone()];
    let mut eliminated = Vec::new();
    loop {
        let scores = group_scores(d, &alive, &rows, lambda)?;
        if alive.len() <= k {
            return Ok(RfeTrace {
                rounds,
                eliminated,
                final_scores: alive.into_iter().zip(scores).collect(),
            });
        }
        // lowest score; among equals the later column goes first
        let mut worst = 0;
        for i in 1..alive.len() {
            if scores[i] <= scores[worst] {
                worst = i;
            }
        }
        eliminated.push(alive.remove(worst));
        rounds.push(alive.clone());
    }
}

fn group_scores(d: &Dataset, features: &[usize], rows: &[usize], lambda: f64) -> Result<Vec<f64>> {
    let enc = Encoder::fit(d, features, rows)?;
    let design = enc.design(d, rows)?;
    let model = fit_for_task(d.task(), &design.x, &design.y, lambda, LogisticOptions::default())?;
    let mut scores = alloc::vec![0.0f64; features.len()];
    for (&g, w) in enc.groups().iter().zip(&model.weights) {
        scores[g] = scores[g].max(libm::fabs(*w));
    }
    Ok(scores)
}
