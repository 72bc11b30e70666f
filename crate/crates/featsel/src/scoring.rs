//! One completion per feature, parsed into importance scores.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use featsel_core::llm::{
    build_data_driven_prompt, build_text_prompt, parse_score, CompletionRequest, DataDrivenTemplate, FeatureScore,
    PromptBundle, ScoreMethod, TextTemplate,
};
use featsel_core::tabular::{make_sample_pairs, subsample_shots};
use featsel_core::{Dataset, Descriptor};

use crate::client::{ClientError, CompletionClient};
use crate::error::{Error, Result};
use crate::ratelimit::{backoff_delay, RateLimiter};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Prompts embed `shots` (value, target) pairs drawn with `seed`.
    DataDriven { shots: usize, seed: u64 },
    /// Prompts embed dataset and feature descriptions.
    TextBased,
}

#[derive(Clone, Debug)]
pub struct ScoringConfig {
    /// Attempts per feature before it is scored 0 with an error.
    pub max_attempts: u32,
    pub backoff: Duration,
    pub max_in_flight: usize,
    pub requests_per_second: Option<f64>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub data_template: DataDrivenTemplate,
    pub text_template: TextTemplate,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            max_attempts: 3,
            backoff: Duration::from_millis(500),
            max_in_flight: 4,
            requests_per_second: None,
            temperature: 0.0,
            max_tokens: 512,
            data_template: DataDrivenTemplate::default(),
            text_template: TextTemplate::default(),
        }
    }
}

/// Data-driven prompts over the same `shots` rows for every feature.
pub fn data_driven_prompts(d: &Dataset, shots: usize, seed: u64, tpl: &DataDrivenTemplate) -> Result<Vec<PromptBundle>> {
    let rows = subsample_shots(d, shots, seed)?;
    d.feature_names()
        .into_iter()
        .map(|f| Ok(build_data_driven_prompt(&make_sample_pairs(d, f, &rows)?, tpl)?))
        .collect()
}

pub fn text_prompts(d: &Dataset, desc: &Descriptor, tpl: &TextTemplate) -> Result<Vec<PromptBundle>> {
    d.feature_names()
        .into_iter()
        .map(|f| Ok(build_text_prompt(f, desc, d.n_features(), tpl)?))
        .collect()
}

/// Scores every feature of `d` in column order. All prompts are built
/// before the first request, so template or descriptor problems abort
/// without network traffic. Failed features score 0 and carry `error`.
pub fn score_all_features(
    d: &Dataset,
    desc: Option<&Descriptor>,
    strategy: Strategy,
    client: &dyn CompletionClient,
    cfg: &ScoringConfig,
) -> Result<Vec<FeatureScore>> {
    let (prompts, method) = match strategy {
        Strategy::DataDriven { shots, seed } => {
            (data_driven_prompts(d, shots, seed, &cfg.data_template)?, ScoreMethod::DataDriven)
        }
        Strategy::TextBased => {
            let desc = desc.ok_or_else(|| Error::Config("text-based scoring needs a descriptor".into()))?;
            (text_prompts(d, desc, &cfg.text_template)?, ScoreMethod::TextBased)
        }
    };
    Ok(score_prompts(&prompts, method, client, cfg))
}

/// Sends each prompt (concurrently, up to `max_in_flight`, through the rate
/// limiter) and parses the answers. Output order follows `prompts`.
pub fn score_prompts(
    prompts: &[PromptBundle],
    method: ScoreMethod,
    client: &dyn CompletionClient,
    cfg: &ScoringConfig,
) -> Vec<FeatureScore> {
    let limiter = RateLimiter::new(cfg.requests_per_second);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<FeatureScore>>> = Mutex::new(vec![None; prompts.len()]);
    let workers = cfg.max_in_flight.clamp(1, prompts.len().max(1));
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(p) = prompts.get(i) else { break };
                let fs = score_one(p, method, client, cfg, &limiter);
                results.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(fs);
            });
        }
    });
    results
        .into_inner()
        .unwrap_or_else(|e| e.into_inner())
        .into_iter()
        .map(|r| r.expect("every prompt scored"))
        .collect()
}

fn score_one(
    p: &PromptBundle,
    method: ScoreMethod,
    client: &dyn CompletionClient,
    cfg: &ScoringConfig,
    limiter: &RateLimiter,
) -> FeatureScore {
    let mut out = FeatureScore {
        feature: p.feature.clone(),
        score: 0.0,
        rationale: None,
        method,
        model_id: client.model_id().to_string(),
        warning: None,
        error: None,
    };
    let req = CompletionRequest {
        system: p.system.clone(),
        user: p.user.clone(),
        temperature: cfg.temperature,
        max_tokens: cfg.max_tokens,
    };
    let attempts = cfg.max_attempts.max(1);
    let mut last_err = String::new();
    for attempt in 1..=attempts {
        if attempt > 1 {
            thread::sleep(backoff_delay(cfg.backoff, attempt - 1));
        }
        limiter.acquire();
        match client.complete(&req) {
            Ok(resp) => {
                match parse_score(&resp.text, p.mode, &p.feature) {
                    Ok(parsed) => {
                        out.score = parsed.score;
                        out.rationale = parsed.rationale;
                        out.warning = parsed.warning;
                        if !resp.finished {
                            let note = "completion hit the token limit".to_string();
                            out.warning = Some(match out.warning.take() {
                                Some(w) => format!("{w}; {note}"),
                                None => note,
                            });
                        }
                    }
                    Err(e) => out.error = Some(e.to_string()),
                }
                return out;
            }
            Err(ClientError::Transient(m)) => last_err = m,
            Err(e) => {
                out.error = Some(e.to_string());
                return out;
            }
        }
    }
    out.error = Some(format!("gave up after {attempts} attempts: {last_err}"));
    out
}
