//! Prompt construction and completion parsing for LLM-based scoring.

mod parse;
mod prompt;
mod score;

pub use parse::{parse_score, ParsedScore};
pub use prompt::{
    build_data_driven_prompt, build_text_prompt, DataDrivenTemplate, Demonstration, MissingDescription, OutputMode,
    PromptBundle, TextTemplate, OUTPUT_SCHEMA,
};
pub(crate) use prompt::text_prompt_with_support;
pub use score::{rank_and_select, CompletionRequest, CompletionResponse, FeatureScore, ScoreMethod};
