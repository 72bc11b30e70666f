//! Downstream evaluation: L2-penalised linear models, cross-validated
//! lambda search, holdout scoring and rank aggregation.

mod cv;
mod linear;
mod metrics;
mod protocol;
mod rank;

pub use cv::{fit_for_task, fold_assignment, grid_search_cv, metric_for, score_model, train_test_split, CvOutcome};
pub use linear::{
    fit_logistic, fit_ridge, sigmoid, FitDiagnostics, LinearModel, LogisticObjective, LogisticOptions, ModelKind,
};
pub use metrics::{auroc, mae, Metric};
pub use protocol::{
    evaluate_on_split, evaluate_selection, EvaluationRecord, HoldoutOutcome, Protocol, Shots, DEFAULT_GRID,
};
pub use rank::{aggregate_rank, average_ranks};
