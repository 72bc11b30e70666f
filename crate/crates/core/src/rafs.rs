//! Prompt side of retrieval-augmented scoring: retrieved per-feature
//! metadata is injected into the text-based prompt as a support document.

use alloc::format;
use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::llm::{text_prompt_with_support, PromptBundle, TextTemplate};
use crate::tabular::Descriptor;

/// Longest summary, in characters, copied into a support document.
pub const SUMMARY_BUDGET: usize = 1200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetadataSource {
    Ncbi,
    LocalFile,
}

/// Retrieved description of one feature.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMetadata {
    pub feature: String,
    pub official_name: String,
    pub summary: String,
    pub source: MetadataSource,
    /// Seconds since the Unix epoch.
    pub retrieved_at: u64,
    /// True when the source has no entry for the feature.
    #[serde(default)]
    pub missing: bool,
}

impl FeatureMetadata {
    pub fn missing(feature: impl Into<String>, source: MetadataSource, retrieved_at: u64) -> Self {
        FeatureMetadata {
            feature: feature.into(),
            official_name: String::new(),
            summary: String::new(),
            source,
            retrieved_at,
            missing: true,
        }
    }

    /// Usable for prompting: not flagged missing and at least one text field set.
    pub fn is_usable(&self) -> bool {
        !self.missing && (!self.official_name.trim().is_empty() || !self.summary.trim().is_empty())
    }
}

/// Cache key for a feature: trimmed and upper-cased.
pub fn normalize_symbol(feature: &str) -> String {
    feature.trim().to_uppercase()
}

/// The support-document block placed in the system text.
pub fn support_document(meta: &FeatureMetadata) -> String {
    let mut out = format!("Support document for \"{}\":", meta.feature);
    let name = meta.official_name.trim();
    if !name.is_empty() {
        out.push_str(&format!("\nOfficial full name: {name}"));
    }
    let summary = meta.summary.trim();
    if !summary.is_empty() {
        out.push_str(&format!("\nSummary: {}", truncate_chars(summary, SUMMARY_BUDGET)));
    }
    out
}

fn truncate_chars(s: &str, max: usize) -> String {
    match s.char_indices().nth(max) {
        Some((i, _)) => format!("{}...", s[..i].trim_end()),
        None => s.to_string(),
    }
}

/// Text-based prompt with the feature's support document. Unusable
/// metadata falls back to the plain text-based prompt, flagged degraded.
pub fn build_rafs_prompt(
    feature: &str,
    meta: &FeatureMetadata,
    desc: &Descriptor,
    feature_count: usize,
    tpl: &TextTemplate,
) -> Result<PromptBundle> {
    if !meta.is_usable() {
        let mut p = text_prompt_with_support(feature, desc, feature_count, tpl, None)?;
        p.degraded = true;
        return Ok(p);
    }
    text_prompt_with_support(feature, desc, feature_count, tpl, Some(&support_document(meta)))
}
