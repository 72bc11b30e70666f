use alloc::format;
use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{Descriptor, SamplePairs};

/// How the completion is expected to carry the score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputMode {
    /// Free text ending in "The importance score is <x>".
    PlainScore,
    /// A JSON object with `score` and optional `reasoning`.
    JsonScore,
}

/// A rendered prompt for one feature.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system: String,
    pub user: String,
    pub mode: OutputMode,
    pub feature: String,
    /// Set when the prompt was built from a fallback (bare feature name in
    /// place of a description, or no retrieved support document).
    #[serde(default)]
    pub degraded: bool,
}

/// Worked example shown to the model in text-based prompts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    pub variable: String,
    pub reasoning: String,
    pub score: f64,
}

impl Default for Demonstration {
    fn default() -> Self {
        Demonstration {
            variable: "Installment rate in percentage of disposable income".into(),
            reasoning: "The installment rate as a percentage of disposable income provides insight into a \
                        person’s financial responsibility and capability. This percentage can be seen as a \
                        measure of how much of a person’s available income is committed to repaying their \
                        debts. If this rate is high, it might indicate that the person is taking more debt \
                        than they can comfortably repay and may hint at a lack of financial responsibility, \
                        implying higher credit risk. If this rate is low, it likely indicates that the person \
                        can manage their current financial obligations comfortably, implying lower credit \
                        risk. Thus, the score is 0.9."
                .into(),
            score: 0.9,
        }
    }
}

impl Demonstration {
    /// `{"reasoning": "...", "score": 0.9}`
    pub fn render_json(&self) -> String {
        let reasoning = serde_json::to_string(&self.reasoning).expect("string serialises");
        format!("{{\"reasoning\": {reasoning}, \"score\": {}}}", self.score)
    }
}

/// Instruction context for data-driven prompts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataDrivenTemplate {
    pub instruction: String,
    pub samples_intro: String,
    pub example_score: f64,
    pub question: String,
    pub answer_prefix: String,
}

impl Default for DataDrivenTemplate {
    fn default() -> Self {
        DataDrivenTemplate {
            instruction: "For the given feature, your task is to provide a feature importance score (between 0 \
                          and 1; larger value indicates greater importance)."
                .into(),
            samples_intro: "Here are some data points in the format of (feature value, target value), please \
                            refer to this to determine how informative the feature is in predicting the target \
                            value:"
                .into(),
            example_score: 0.9,
            question: "Question: What is the importance score for the given feature".into(),
            answer_prefix: "Answer: The importance score is".into(),
        }
    }
}

/// What to do when a feature has no description.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingDescription {
    /// Fail with [`Error::MissingDescription`].
    Error,
    /// Use the bare feature name and mark the bundle degraded.
    #[default]
    UseName,
}

pub const OUTPUT_SCHEMA: &str = r#"{"description": "Langchain Pydantic output parsing structure.", "properties": {"reasoning": {"title": "Reasoning", "description": "Logical reasoning behind feature importance score", "type": "string"}, "score": {"title": "Score", "description": "Feature importance score", "type": "number"}}, "required": ["score"]}"#;

/// Instruction context for text-based (and retrieval-augmented) prompts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextTemplate {
    /// `{target}` is replaced by the descriptor's target phrase.
    pub instruction: String,
    pub format_instructions: String,
    pub default_target: String,
    pub on_missing_description: MissingDescription,
}

impl Default for TextTemplate {
    fn default() -> Self {
        TextTemplate {
            instruction: "For each feature input by the user, your task is to provide a feature importance \
                          score (between 0 and 1; larger value indicates greater importance) for predicting \
                          {target} and a reasoning behind how the importance score was assigned."
                .into(),
            format_instructions: format!(
                "The output should be formatted as a JSON instance that conforms to the JSON schema below.\n\n\
                 As an example, for the schema {{\"properties\": {{\"foo\": {{\"title\": \"Foo\", \"description\": \
                 \"a list of strings\", \"type\": \"array\", \"items\": {{\"type\": \"string\"}}}}}}, \"required\": \
                 [\"foo\"]}}\nthe object {{\"foo\": [\"bar\", \"baz\"]}} is a well formatted instance of the schema. \
                 The object {{\"properties\": {{\"foo\": [\"bar\", \"baz\"]}}}} is not well-formatted.\n\n\
                 Here is the output schema:\n```\n{OUTPUT_SCHEMA}\n```"
            ),
            default_target: "the target variable".into(),
            on_missing_description: MissingDescription::UseName,
        }
    }
}

/// Data-driven prompt: the scoring instruction, one `(value, target)` line
/// per sample pair in order, an answer-format demonstration and the open
/// answer scaffold.
pub fn build_data_driven_prompt(sp: &SamplePairs, tpl: &DataDrivenTemplate) -> Result<PromptBundle> {
    if sp.pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut user = String::new();
    user.push_str(&tpl.instruction);
    user.push_str("\n\n");
    user.push_str(&tpl.samples_intro);
    user.push('\n');
    for (value, target) in &sp.pairs {
        user.push_str(&format!("({value}, {target})\n"));
    }
    user.push_str(&format!(
        "\nHere is an example:\n```\n{q}\n{a} {s}\n```\n\n{q}\n{a}",
        q = tpl.question,
        a = tpl.answer_prefix,
        s = tpl.example_score,
    ));
    Ok(PromptBundle {
        system: tpl.instruction.clone(),
        user,
        mode: OutputMode::PlainScore,
        feature: sp.feature.clone(),
        degraded: false,
    })
}

/// Dataset context paragraph shared by text-based and retrieval prompts.
fn context_block(desc: &Descriptor, feature_count: usize) -> Result<String> {
    let description = desc.dataset_description.trim();
    if description.is_empty() {
        return Err(Error::InvalidDescriptor("dataset_description is empty".into()));
    }
    Ok(format!(
        "Context: {description} Prior to training the model, we first want to identify a subset of the \
         {feature_count} features that are most important for reliable prediction of the target variable."
    ))
}

pub(crate) fn text_prompt_with_support(
    feature: &str,
    desc: &Descriptor,
    feature_count: usize,
    tpl: &TextTemplate,
    support: Option<&str>,
) -> Result<PromptBundle> {
    let (subject, degraded) = match desc.description_of(feature) {
        Some(d) => (d.to_string(), false),
        None => match tpl.on_missing_description {
            MissingDescription::Error => return Err(Error::MissingDescription(feature.to_string())),
            MissingDescription::UseName => (feature.to_string(), true),
        },
    };
    let target = desc
        .target_description
        .as_deref()
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .unwrap_or(&tpl.default_target);
    let demo = desc.demonstration.clone().unwrap_or_default();

    let mut system = context_block(desc, feature_count)?;
    system.push_str("\n\n");
    if let Some(doc) = support {
        system.push_str(doc);
        system.push_str("\n\n");
    }
    system.push_str(&tpl.instruction.replace("{target}", target));
    system.push_str("\n\n");
    system.push_str(&tpl.format_instructions);
    system.push_str(&format!(
        "\n\nHere is an example output:\n-Variable: {}\n{}",
        demo.variable,
        demo.render_json()
    ));
    let user = format!(
        "Provide a score and reasoning for \"{subject}\" formatted according to the output schema above:"
    );
    Ok(PromptBundle {
        system,
        user,
        mode: OutputMode::JsonScore,
        feature: feature.to_string(),
        degraded,
    })
}

/// Text-based prompt built from the dataset and feature descriptions.
/// `feature_count` is the number of candidate features in the dataset.
pub fn build_text_prompt(
    feature: &str,
    desc: &Descriptor,
    feature_count: usize,
    tpl: &TextTemplate,
) -> Result<PromptBundle> {
    text_prompt_with_support(feature, desc, feature_count, tpl, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn credit_descriptor() -> Descriptor {
        let mut d = Descriptor {
            dataset_description: "Using data collected at a German bank, we wish to build a machine learning \
                                  model that can accurately predict whether a client carries high or low credit \
                                  risk (target variable). The dataset contains a total of 20 features (e.g., \
                                  credit history, savings account status)."
                .into(),
            target_description: Some("whether an individual carries high credit risk".into()),
            ..Default::default()
        };
        d.feature_descriptions.insert(
            "checking_status".into(),
            "Status of existing checking account, in Deutsche Mark.".into(),
        );
        d
    }

    #[test]
    fn data_driven_lists_pairs_and_scaffold() {
        let sp = SamplePairs {
            feature: "checking_status".into(),
            pairs: vec![("<0".into(), "no".into()), ("no checking".into(), "yes".into())],
            shots: 2,
        };
        let p = build_data_driven_prompt(&sp, &DataDrivenTemplate::default()).unwrap();
        assert_eq!(p.mode, OutputMode::PlainScore);
        assert!(p.user.contains("\n(<0, no)\n(no checking, yes)\n"));
        assert!(p.user.contains("a feature importance score (between 0 and 1"));
        assert!(p.user.contains("Answer: The importance score is 0.9\n```"));
        assert!(p.user.ends_with("Answer: The importance score is"));
        let first = p.user.find("(<0, no)").unwrap();
        assert!(p.user.find("feature importance score").unwrap() < first);
        assert_eq!(p, build_data_driven_prompt(&sp, &DataDrivenTemplate::default()).unwrap());
    }

    #[test]
    fn data_driven_single_pair_and_empty() {
        let sp = SamplePairs {
            feature: "f".into(),
            pairs: vec![("a".into(), "1".into())],
            shots: 1,
        };
        let p = build_data_driven_prompt(&sp, &DataDrivenTemplate::default()).unwrap();
        assert_eq!(p.user.lines().filter(|l| l.starts_with('(')).count(), 1);
        let empty = SamplePairs {
            pairs: vec![],
            shots: 0,
            ..sp
        };
        assert_eq!(build_data_driven_prompt(&empty, &DataDrivenTemplate::default()), Err(Error::EmptyInput));
    }

    #[test]
    fn text_prompt_matches_template() {
        let p = build_text_prompt("checking_status", &credit_descriptor(), 20, &TextTemplate::default()).unwrap();
        assert_eq!(p.mode, OutputMode::JsonScore);
        assert!(!p.degraded);
        assert!(p.system.starts_with("Context: Using data collected at a German bank"));
        assert!(p.system.contains("identify a subset of the 20 features"));
        assert!(p.system.contains("for predicting whether an individual carries high credit risk and a reasoning"));
        assert!(p.system.contains("formatted as a JSON instance"));
        assert!(p.system.contains(OUTPUT_SCHEMA));
        assert!(p.system.contains("\"reasoning\": {\"title\": \"Reasoning\""));
        assert!(p.system.contains("\"score\": {\"title\": \"Score\""));
        assert!(p.system.contains("-Variable: Installment rate in percentage of disposable income\n{\"reasoning\": "));
        assert!(p.system.ends_with("\"score\": 0.9}"));
        assert_eq!(
            p.user,
            "Provide a score and reasoning for \"Status of existing checking account, in Deutsche Mark.\" \
             formatted according to the output schema above:"
        );
        assert_eq!(p, build_text_prompt("checking_status", &credit_descriptor(), 20, &TextTemplate::default()).unwrap());
    }

    #[test]
    fn demonstration_json_parses() {
        let v: serde_json::Value = serde_json::from_str(&Demonstration::default().render_json()).unwrap();
        assert_eq!(v["score"], 0.9);
        let schema: serde_json::Value = serde_json::from_str(OUTPUT_SCHEMA).unwrap();
        assert_eq!(schema["required"][0], "score");
    }

    #[test]
    fn missing_description_fallback() {
        let desc = credit_descriptor();
        let p = build_text_prompt("age", &desc, 20, &TextTemplate::default()).unwrap();
        assert!(p.degraded);
        assert!(p.user.contains("\"age\""));
        let strict = TextTemplate {
            on_missing_description: MissingDescription::Error,
            ..TextTemplate::default()
        };
        assert_eq!(build_text_prompt("age", &desc, 20, &strict), Err(Error::MissingDescription("age".into())));
    }

    #[test]
    fn empty_dataset_description_rejected() {
        let desc = Descriptor::default();
        assert!(matches!(
            build_text_prompt("x", &desc, 3, &TextTemplate::default()),
            Err(Error::InvalidDescriptor(_))
        ));
    }
}
