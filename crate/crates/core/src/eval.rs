//! KILT-style retrieval metrics.
//!
//! Page level: R-Precision against the gold provenance pages. Passage level:
//! whether the top reference contains any gold answer (or gold entity) after
//! case folding and whitespace collapsing.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalItem {
    pub query: String,
    #[serde(default)]
    pub gold_provenance: Vec<String>,
    #[serde(default)]
    pub gold_answers: Vec<String>,
}

/// What the passage-level strings denote; only changes report labels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextMetric {
    #[default]
    Answer,
    Entity,
}

impl ContextMetric {
    pub fn label(self) -> &'static str {
        match self {
            ContextMetric::Answer => "Answer in Context",
            ContextMetric::Entity => "Entity in Context",
        }
    }
}

/// |top-R ∩ gold| / R with R = |gold|. Predictions are deduplicated in
/// order first. `None` for empty gold.
pub fn r_precision<S: AsRef<str>>(predicted: &[S], gold: &[String]) -> Option<f64> {
    let gold: HashSet<&str> = gold.iter().map(String::as_str).collect();
    if gold.is_empty() {
        return None;
    }
    let r = gold.len();
    let mut seen = HashSet::new();
    let hits = predicted
        .iter()
        .map(AsRef::as_ref)
        .filter(|p| seen.insert(*p))
        .take(r)
        .filter(|p| gold.contains(p))
        .count();
    Some(hits as f64 / r as f64)
}

pub fn normalize_for_match(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn answer_in_context<S: AsRef<str>>(passage: &str, gold: &[S]) -> bool {
    let passage = normalize_for_match(passage);
    gold.iter().any(|g| {
        let g = normalize_for_match(g.as_ref());
        !g.is_empty() && passage.contains(&g)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRow {
    pub query: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub in_context: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: ContextMetric,
    /// Percentage, two decimals.
    pub r_precision_mean: f64,
    /// Percentage, two decimals.
    pub in_context_rate: f64,
    pub page_items: usize,
    pub passage_items: usize,
    pub skipped_page: usize,
    pub skipped_passage: usize,
    pub rows: Vec<ItemRow>,
}

fn percent(sum: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (sum / n as f64 * 100.0 * 100.0).round() / 100.0
}

/// Per-item predictions: ranked doc ids and the top passage text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Prediction {
    pub doc_ids: Vec<String>,
    pub top_passage: Option<String>,
}

pub fn score_item(item: &EvalItem, prediction: &Prediction) -> ItemRow {
    let r_precision = r_precision(&prediction.doc_ids, &item.gold_provenance);
    let in_context = if item.gold_answers.is_empty() {
        None
    } else {
        Some(
            prediction
                .top_passage
                .as_deref()
                .is_some_and(|p| answer_in_context(p, &item.gold_answers)),
        )
    };
    ItemRow {
        query: item.query.clone(),
        r_precision,
        in_context,
    }
}

pub fn aggregate(rows: Vec<ItemRow>, metric: ContextMetric) -> Result<EvalReport> {
    let page: Vec<f64> = rows.iter().filter_map(|r| r.r_precision).collect();
    let passage: Vec<bool> = rows.iter().filter_map(|r| r.in_context).collect();
    if page.is_empty() && passage.is_empty() {
        return Err(Error::NoEvaluableItems);
    }
    Ok(EvalReport {
        metric,
        r_precision_mean: percent(page.iter().sum(), page.len()),
        in_context_rate: percent(passage.iter().filter(|&&b| b).count() as f64, passage.len()),
        page_items: page.len(),
        passage_items: passage.len(),
        skipped_page: rows.len() - page.len(),
        skipped_passage: rows.len() - passage.len(),
        rows,
    })
}

impl EvalReport {
    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let label = self.metric.label();
        let width = label.len().max("R-Precision".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>8}  {:>6}  {:>7}",
            "metric", "value", "items", "skipped"
        );
        let _ = writeln!(
            out,
            "{:<width$}  {:>8.2}  {:>6}  {:>7}",
            "R-Precision", self.r_precision_mean, self.page_items, self.skipped_page
        );
        let _ = writeln!(
            out,
            "{:<width$}  {:>8.2}  {:>6}  {:>7}",
            label, self.in_context_rate, self.passage_items, self.skipped_passage
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn r_precision_cases() {
        assert_eq!(r_precision(&s(&["a", "b"]), &s(&["a"])), Some(1.0));
        assert_eq!(
            r_precision(&s(&["a", "c", "b"]), &s(&["a", "b"])),
            Some(0.5)
        );
        assert_eq!(r_precision(&s(&["x", "y"]), &s(&["a"])), Some(0.0));
        assert_eq!(r_precision(&s(&["a"]), &[]), None);
        // repeats collapse before the top-R cut
        assert_eq!(
            r_precision(&s(&["a", "a", "b"]), &s(&["a", "b"])),
            Some(1.0)
        );
    }

    #[test]
    fn in_context_cases() {
        assert!(answer_in_context(
            "in 1961 that the marriage age in Australia is 18 years for both",
            &["18"]
        ));
        assert!(!answer_in_context("nothing here", &["18"]));
        assert!(answer_in_context(
            "signed with YG  Entertainment in",
            &["yg entertainment"]
        ));
        assert!(!answer_in_context("anything", &[""]));
    }

    #[test]
    fn aggregate_percentages() {
        let rows = |hits: usize, n: usize| -> Vec<ItemRow> {
            (0..n)
                .map(|i| ItemRow {
                    query: i.to_string(),
                    r_precision: Some((i < hits) as u8 as f64),
                    in_context: Some(i < hits),
                })
                .collect()
        };
        let all = aggregate(rows(3, 3), ContextMetric::Answer).unwrap();
        assert_eq!(all.in_context_rate, 100.0);
        assert_eq!(
            aggregate(rows(2, 4), ContextMetric::Answer)
                .unwrap()
                .in_context_rate,
            50.0
        );
        let r = aggregate(rows(7, 9), ContextMetric::Answer).unwrap();
        assert_eq!(r.in_context_rate, 77.78);
        assert_eq!(r.r_precision_mean, 77.78);
        assert!(matches!(
            aggregate(vec![], ContextMetric::Answer),
            Err(Error::NoEvaluableItems)
        ));
    }

    #[test]
    fn table_is_aligned() {
        let r = aggregate(
            vec![ItemRow {
                query: "q".into(),
                r_precision: Some(1.0),
                in_context: Some(false),
            }],
            ContextMetric::Entity,
        )
        .unwrap();
        let table = r.to_table();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.len() == lines[0].len()));
        assert!(lines[2].starts_with("Entity in Context"));
    }
}
