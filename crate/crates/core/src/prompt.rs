//! Prompt templates with a single `{}` query slot.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::token::{Codec, TokenId};

const SLOT: &str = "{}";
const BUILTIN_TEMPLATES: &str = include_str!("../config/templates.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Title,
    Passage,
    Eval,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    template: String,
    stage: Stage,
}

impl PromptTemplate {
    pub fn new(template: impl Into<String>, stage: Stage) -> Result<Self> {
        let template = template.into();
        if template.matches(SLOT).count() != 1 {
            return Err(Error::Template(template));
        }
        Ok(Self { template, stage })
    }

    pub fn text(&self) -> &str {
        &self.template
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn render(&self, query: &str) -> String {
        self.template.replacen(SLOT, query, 1)
    }

    pub fn render_tokens<C: Codec + ?Sized>(&self, codec: &C, query: &str) -> Vec<TokenId> {
        codec.encode(&self.render(query))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplatePair {
    pub title: String,
    pub passage: String,
}

/// Templates keyed by task form (`qa`, `fact`, `dialogue`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TemplateSet(BTreeMap<String, TemplatePair>);

impl TemplateSet {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_TEMPLATES).expect("built-in templates parse")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let set: TemplateSet =
            toml::from_str(text).map_err(|e| Error::Config(format!("templates: {e}")))?;
        for pair in set.0.values() {
            PromptTemplate::new(pair.title.clone(), Stage::Title)?;
            PromptTemplate::new(pair.passage.clone(), Stage::Passage)?;
        }
        Ok(set)
    }

    pub fn get(&self, task: &str) -> Option<&TemplatePair> {
        self.0.get(task)
    }

    pub fn tasks(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::TokenCodec;

    #[test]
    fn slot_is_replaced() {
        let tpl = PromptTemplate::new("Q: {} A:", Stage::Eval).unwrap();
        assert_eq!(tpl.render("x"), "Q: x A:");
        let mut codec = TokenCodec::new();
        codec.intern("Q: x A:").unwrap();
        codec.freeze();
        assert_eq!(tpl.render_tokens(&codec, "x"), codec.encode("Q: x A:"));
    }

    #[test]
    fn slot_count_is_checked() {
        assert!(matches!(
            PromptTemplate::new("no slot", Stage::Title),
            Err(Error::Template(_))
        ));
        assert!(PromptTemplate::new("{} {}", Stage::Title).is_err());
    }

    #[test]
    fn builtin_templates_cover_three_tasks() {
        let set = TemplateSet::builtin();
        assert_eq!(set.tasks().collect::<Vec<_>>(), ["dialogue", "fact", "qa"]);
        let qa = set.get("qa").unwrap();
        assert_eq!(
            qa.title,
            "Question: {}\n\nThe Wikipedia article corresponding to the above question is:\n\nTitle:"
        );
        assert_eq!(
            set.get("fact").unwrap().passage,
            "Claim: {}\n\nThe Wikipedia paragraph to support or refute the above claim is:\n\nAnswer:"
        );
    }

    #[test]
    fn rendering_is_length_additive() {
        let mut codec = TokenCodec::new();
        codec.intern("one two three X").unwrap();
        let set = TemplateSet::builtin();
        for task in ["qa", "fact", "dialogue"] {
            let pair = set.get(task).unwrap();
            for text in [&pair.title, &pair.passage] {
                let tpl = PromptTemplate::new(text.clone(), Stage::Title).unwrap();
                let query = "one two three";
                let with_query = tpl.render_tokens(&codec, query).len();
                // the slot counted as one placeholder token
                let template_len = codec.encode(&tpl.render("X")).len();
                assert_eq!(with_query, template_len - 1 + codec.encode(query).len());
            }
        }
    }
}
