//! Prompt templates for the sentiment tasks and the label-matching rule that
//! turns a raw completion into a correctness bit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("unknown prompt template {0:?}")]
    UnknownTemplate(String),
    #[error("sentence must be non-empty")]
    EmptySentence,
}

pub const TEMPLATE_IDS: [&str; 2] = ["openai_sst2", "bedrock_imdb"];

pub fn render_prompt(template_id: &str, sentence: &str) -> Result<String, PromptError> {
    if !TEMPLATE_IDS.contains(&template_id) {
        return Err(PromptError::UnknownTemplate(template_id.to_string()));
    }
    if sentence.is_empty() {
        return Err(PromptError::EmptySentence);
    }
    Ok(match template_id {
        "openai_sst2" => {
            format!("For the sentence: {sentence}, is the sentiment in this sentence positive or negative?")
        }
        _ => format!(
            "For the paragraph: '{sentence}', is the sentiment in this paragraph positive or negative? Answer in one word."
        ),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
    Abstain,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
            Label::Abstain => "abstain",
        }
    }

    /// Abstentions never match a gold label.
    pub fn matches(self, gold: Label) -> bool {
        self != Label::Abstain && self == gold
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" => Ok(Label::Positive),
            "negative" => Ok(Label::Negative),
            "abstain" => Ok(Label::Abstain),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

/// First of "positive" / "negative" to appear, ignoring ASCII case; abstain if neither does.
pub fn parse_label(raw: &str) -> Label {
    let lower = raw.to_ascii_lowercase();
    match (lower.find("positive"), lower.find("negative")) {
        (Some(p), Some(n)) if n < p => Label::Negative,
        (Some(_), _) => Label::Positive,
        (None, Some(_)) => Label::Negative,
        (None, None) => Label::Abstain,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_templates_exactly() {
        assert_eq!(
            render_prompt("openai_sst2", "great movie").unwrap(),
            "For the sentence: great movie, is the sentiment in this sentence positive or negative?"
        );
        assert_eq!(
            render_prompt("bedrock_imdb", "dull plot").unwrap(),
            "For the paragraph: 'dull plot', is the sentiment in this paragraph positive or negative? Answer in one word."
        );
        assert_eq!(render_prompt("gpt", "x"), Err(PromptError::UnknownTemplate("gpt".into())));
        assert_eq!(render_prompt("openai_sst2", ""), Err(PromptError::EmptySentence));
    }

    #[test]
    fn label_examples() {
        assert_eq!(parse_label("Positive."), Label::Positive);
        assert_eq!(parse_label("the sentiment is negative"), Label::Negative);
        assert_eq!(parse_label("it is positive, not negative"), Label::Positive);
        assert_eq!(parse_label("NEGATIVE, hardly positive"), Label::Negative);
        assert_eq!(parse_label("neutral"), Label::Abstain);
        assert_eq!(parse_label(""), Label::Abstain);
        assert_eq!(parse_label("nonpositive"), Label::Positive);
    }

    #[test]
    fn abstain_never_matches() {
        assert!(!Label::Abstain.matches(Label::Abstain));
        assert!(Label::Negative.matches(Label::Negative));
        assert!(!Label::Negative.matches(Label::Positive));
    }

    #[test]
    fn non_ascii_case_is_left_alone() {
        assert_eq!(parse_label("İ positive"), Label::Positive);
        assert_eq!(parse_label("ПОЗИТИВ"), Label::Abstain);
    }
}
