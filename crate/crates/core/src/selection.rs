use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of any selector: the full ranking plus the kept prefix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: String,
    pub ratio: f64,
    pub seed: Option<u64>,
    /// Most important first.
    pub ranking: Vec<String>,
    pub selected: Vec<String>,
}

/// `max(1, round(ratio · l))`, rounding half up, capped at `l`.
pub fn selected_count(ratio: f64, n_features: usize) -> Result<usize> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidRatio(ratio));
    }
    // the nudge absorbs products like 0.15 · 10 = 1.4999999999999998
    let k = libm::floor(ratio * n_features as f64 + 0.5 + 1e-9) as usize;
    Ok(k.clamp(1, n_features.max(1)))
}

impl SelectionResult {
    pub fn from_ranking(
        method: impl Into<String>,
        ratio: f64,
        seed: Option<u64>,
        ranking: Vec<String>,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for name in &ranking {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateFeature(name.clone()));
            }
        }
        let k = selected_count(ratio, ranking.len())?;
        let selected = ranking[..k.min(ranking.len())].to_vec();
        Ok(SelectionResult {
            method: method.into(),
            ratio,
            seed,
            ranking,
            selected,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn count_rule() {
        assert_eq!(selected_count(0.3, 10).unwrap(), 3);
        assert_eq!(selected_count(0.3, 20).unwrap(), 6);
        assert_eq!(selected_count(0.3, 11).unwrap(), 3);
        assert_eq!(selected_count(0.3, 1).unwrap(), 1);
        assert_eq!(selected_count(0.3, 2).unwrap(), 1);
        assert_eq!(selected_count(0.25, 10).unwrap(), 3);
        assert_eq!(selected_count(0.15, 10).unwrap(), 2);
        assert_eq!(selected_count(1.0, 7).unwrap(), 7);
        assert!(selected_count(0.0, 7).is_err());
        assert!(selected_count(1.5, 7).is_err());
    }

    #[test]
    fn duplicate_names_rejected() {
        let r = SelectionResult::from_ranking("m", 0.5, None, vec!["a".to_string(), "a".to_string()]);
        assert_eq!(r, Err(Error::DuplicateFeature("a".into())));
    }

    #[test]
    fn json_field_order() {
        let r = SelectionResult::from_ranking("mi", 0.5, Some(3), vec!["b".into(), "a".into()]).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(
            s,
            r#"{"method":"mi","ratio":0.5,"seed":3,"ranking":["b","a"],"selected":["b"]}"#
        );
    }
}
