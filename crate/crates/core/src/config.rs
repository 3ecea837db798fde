//! Recall hyperparameters and their layered sources.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prompt::{PromptTemplate, Stage, TemplateSet};

const BUILTIN_DEFAULTS: &str = include_str!("../config/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MindRefConfig {
    /// Weight of the title score in the combined score.
    pub alpha: f64,
    /// Documents kept after title recall.
    pub k: usize,
    /// Beam size for title recall.
    pub beam1: usize,
    /// Beam size for prefix recall.
    pub beam2: usize,
    /// Generated prefix length.
    pub prefix_len: usize,
    /// Extracted passage length.
    pub passage_len: usize,
    pub task: String,
    pub title_template: String,
    pub passage_template: String,
    /// Re-score the whole extracted passage instead of the prefix only.
    pub rescore_full_passage: bool,
    /// Prune live hypotheses by length-normalized score.
    pub normalize_pruning: bool,
}

/// Every field optional; used for config files and overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub alpha: Option<f64>,
    pub k: Option<usize>,
    pub beam1: Option<usize>,
    pub beam2: Option<usize>,
    pub prefix_len: Option<usize>,
    pub passage_len: Option<usize>,
    pub task: Option<String>,
    pub title_template: Option<String>,
    pub passage_template: Option<String>,
    pub rescore_full_passage: Option<bool>,
    pub normalize_pruning: Option<bool>,
}

impl ConfigOverrides {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

impl Default for MindRefConfig {
    fn default() -> Self {
        let base = ConfigOverrides::parse(BUILTIN_DEFAULTS).expect("built-in defaults parse");
        let task = base.task.clone().unwrap_or_else(|| "qa".into());
        let pair = TemplateSet::builtin()
            .get(&task)
            .cloned()
            .expect("built-in task has templates");
        Self {
            alpha: base.alpha.unwrap_or(0.9),
            k: base.k.unwrap_or(2),
            beam1: base.beam1.unwrap_or(15),
            beam2: base.beam2.unwrap_or(10),
            prefix_len: base.prefix_len.unwrap_or(16),
            passage_len: base.passage_len.unwrap_or(150),
            task,
            title_template: pair.title,
            passage_template: pair.passage,
            rescore_full_passage: base.rescore_full_passage.unwrap_or(false),
            normalize_pruning: base.normalize_pruning.unwrap_or(false),
        }
    }
}

impl MindRefConfig {
    /// Applies `overrides` on top of `self`. Changing the task swaps in that
    /// task's templates unless templates are overridden explicitly as well.
    pub fn apply(mut self, overrides: &ConfigOverrides) -> Result<Self> {
        if let Some(task) = &overrides.task {
            let pair = TemplateSet::builtin()
                .get(task)
                .cloned()
                .ok_or_else(|| Error::Config(format!("unknown task {task:?}")))?;
            self.task = task.clone();
            self.title_template = pair.title;
            self.passage_template = pair.passage;
        }
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &overrides.$field { self.$field = v.clone(); })*
            };
        }
        take!(
            alpha,
            k,
            beam1,
            beam2,
            prefix_len,
            passage_len,
            title_template,
            passage_template,
            rescore_full_passage,
            normalize_pruning
        );
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!(
                "alpha {} outside [0, 1]",
                self.alpha
            )));
        }
        if self.k == 0 || self.beam1 == 0 || self.beam2 == 0 {
            return Err(Error::Config("k and beam sizes must be at least 1".into()));
        }
        if self.prefix_len == 0 {
            return Err(Error::Config("prefix length must be at least 1".into()));
        }
        if self.prefix_len > self.passage_len {
            return Err(Error::Config(format!(
                "prefix length {} exceeds passage length {}",
                self.prefix_len, self.passage_len
            )));
        }
        self.title_prompt()?;
        self.passage_prompt()?;
        Ok(())
    }

    pub fn title_prompt(&self) -> Result<PromptTemplate> {
        PromptTemplate::new(self.title_template.clone(), Stage::Title)
    }

    pub fn passage_prompt(&self) -> Result<PromptTemplate> {
        PromptTemplate::new(self.passage_template.clone(), Stage::Passage)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = MindRefConfig::default();
        assert_eq!(c.alpha, 0.9);
        assert_eq!(c.k, 2);
        assert_eq!(c.beam1, 15);
        assert_eq!(c.beam2, 10);
        assert_eq!(c.prefix_len, 16);
        assert_eq!(c.passage_len, 150);
        assert!(!c.rescore_full_passage);
        c.validate().unwrap();
    }

    #[test]
    fn overrides_layer_and_validate() {
        let o = ConfigOverrides::parse("alpha = 0.5\ntask = \"fact\"").unwrap();
        let c = MindRefConfig::default().apply(&o).unwrap();
        assert_eq!(c.alpha, 0.5);
        assert!(c.title_template.starts_with("Claim:"));
        let bad = ConfigOverrides {
            alpha: Some(1.5),
            ..Default::default()
        };
        assert!(MindRefConfig::default().apply(&bad).is_err());
        let bad = ConfigOverrides {
            prefix_len: Some(200),
            ..Default::default()
        };
        assert!(MindRefConfig::default().apply(&bad).is_err());
        assert!(ConfigOverrides::parse("beam3 = 1").is_err());
    }
}
