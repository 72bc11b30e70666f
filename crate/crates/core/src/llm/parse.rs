use alloc::format;
use alloc::string::{String, ToString};

use serde_json::Value;

use super::prompt::OutputMode;
use crate::error::{Error, Result};

/// Score pulled out of a completion.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedScore {
    /// Always within `[0, 1]`.
    pub score: f64,
    pub rationale: Option<String>,
    /// Set when the raw value was outside `[0, 1]` and got clamped.
    pub warning: Option<String>,
}

const ANSWER_PHRASE: &str = "importance score is";

/// Extracts an importance score from model output.
///
/// Plain mode takes the first number after "importance score is" (any
/// case), falling back to the first number anywhere. JSON mode takes the
/// first balanced `{...}` object that parses and carries a numeric `score`;
/// `reasoning` is optional.
pub fn parse_score(text: &str, mode: OutputMode, feature: &str) -> Result<ParsedScore> {
    let fail = |reason: &str| Error::ParseFailure {
        feature: feature.to_string(),
        reason: reason.to_string(),
    };
    let (raw, rationale) = match mode {
        OutputMode::PlainScore => {
            let lower = text.to_ascii_lowercase();
            let after = lower.find(ANSWER_PHRASE).map(|i| i + ANSWER_PHRASE.len());
            let v = after
                .and_then(|i| first_number(&text[i..]))
                .or_else(|| first_number(text))
                .ok_or_else(|| fail("no number in completion"))?;
            (v, None)
        }
        OutputMode::JsonScore => json_score(text).ok_or_else(|| fail("no JSON object with a numeric `score`"))?,
    };
    if !raw.is_finite() {
        return Err(fail("score is not finite"));
    }
    let score = raw.clamp(0.0, 1.0);
    let warning = (score != raw).then(|| format!("score {raw} clamped to {score}"));
    Ok(ParsedScore {
        score,
        rationale,
        warning,
    })
}

fn json_score(text: &str) -> Option<(f64, Option<String>)> {
    let bytes = text.as_bytes();
    let mut from = 0;
    while let Some(off) = text[from..].find('{') {
        let start = from + off;
        match balanced_end(bytes, start) {
            Some(end) => {
                if let Some(found) = score_from_object(&text[start..=end]) {
                    return Some(found);
                }
                from = end + 1;
            }
            None => from = start + 1,
        }
    }
    None
}

fn score_from_object(s: &str) -> Option<(f64, Option<String>)> {
    let v: Value = serde_json::from_str(s).ok()?;
    let obj = v.as_object()?;
    let score = match obj.get("score")? {
        Value::Number(n) => n.as_f64()?,
        Value::String(s) => s.trim().parse().ok()?,
        _ => return None,
    };
    let rationale = obj.get("reasoning").and_then(|r| match r {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        other => Some(other.to_string()),
    });
    Some((score, rationale))
}

/// Index of the brace closing the object opened at `start`, skipping
/// braces inside JSON strings.
fn balanced_end(bytes: &[u8], start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_str = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_str {
            match (escaped, b) {
                (true, _) => escaped = false,
                (false, b'\\') => escaped = true,
                (false, b'"') => in_str = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_str = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// First decimal number (optional sign, fraction, exponent) in `s`.
fn first_number(s: &str) -> Option<f64> {
    let b = s.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let starts_here = b[i].is_ascii_digit() || (b[i] == b'.' && b.get(i + 1).is_some_and(u8::is_ascii_digit));
        if !starts_here {
            i += 1;
            continue;
        }
        let mut start = i;
        if i > 0 && (b[i - 1] == b'-' || b[i - 1] == b'+') {
            start = i - 1;
        }
        let mut j = i;
        while j < b.len() && b[j].is_ascii_digit() {
            j += 1;
        }
        if j < b.len() && b[j] == b'.' {
            j += 1;
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
        }
        if j < b.len() && (b[j] == b'e' || b[j] == b'E') {
            let mut k = j + 1;
            if k < b.len() && (b[k] == b'-' || b[k] == b'+') {
                k += 1;
            }
            if k < b.len() && b[k].is_ascii_digit() {
                while k < b.len() && b[k].is_ascii_digit() {
                    k += 1;
                }
                j = k;
            }
        }
        let lit = s[start..j].trim_end_matches('.');
        return lit.parse().ok();
    }
    None
}
