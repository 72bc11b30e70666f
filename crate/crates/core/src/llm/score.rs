use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selection::SelectionResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMethod {
    DataDriven,
    TextBased,
    Rafs,
}

impl ScoreMethod {
    /// Method label used in selection results and reports.
    pub fn label(self) -> &'static str {
        match self {
            ScoreMethod::DataDriven => "llm_data",
            ScoreMethod::TextBased => "llm_text",
            ScoreMethod::Rafs => "rafs",
        }
    }
}

impl fmt::Display for ScoreMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Importance score for one feature. A feature whose completion could not
/// be obtained or parsed scores 0 and carries `error`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub feature: String,
    pub score: f64,
    pub rationale: Option<String>,
    pub method: ScoreMethod,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Completion request sent to a chat model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub system: String,
    pub user: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl CompletionRequest {
    pub fn greedy(system: impl Into<String>, user: impl Into<String>, max_tokens: u32) -> Self {
        CompletionRequest {
            system: system.into(),
            user: user.into(),
            temperature: 0.0,
            max_tokens,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    /// False when generation stopped on the token limit.
    pub finished: bool,
}

/// Ranks features by descending score, ties kept in list order, and keeps
/// the top `k(ratio, l)`. The list order is expected to be column order.
pub fn rank_and_select(scores: &[FeatureScore], ratio: f64) -> Result<SelectionResult> {
    let first = scores.first().ok_or(Error::EmptyInput)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].score.total_cmp(&scores[a].score).then(a.cmp(&b)));
    let ranking = order.into_iter().map(|i| scores[i].feature.clone()).collect();
    SelectionResult::from_ranking(first.method.label(), ratio, None, ranking)
}
