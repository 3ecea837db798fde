//! Two-stage recall with short-prefix localization.
//!
//! 1. Title recall under the [`TitleTrie`] constraint gives `score1` per title.
//! 2. The top `k` distinct documents form the candidate set.
//! 3. A short prefix (`prefix_len` tokens) is decoded under the union of the
//!    candidates' FM-indexes, giving `score2`.
//! 4. Each prefix is located with KMP at its first offset in the first
//!    candidate document (stage-one order) that contains it, and the passage
//!    `body[start..start + passage_len]` is cut out, clamped at the end.
//! 5. References rank by `alpha * score1 + (1 - alpha) * score2`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::MindRefConfig;
use crate::corpus::{Corpus, Document};
use crate::decode::{constrained_beam_search, BeamConfig, Constraint};
use crate::error::{Error, Result};
use crate::fmindex::{BwtIndex, DocSetConstraint};
use crate::kmp;
use crate::scorer::TokenScorer;
use crate::store::Artifacts;
use crate::token::TokenId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOneResult {
    pub title: String,
    pub doc_id: String,
    pub score1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrefixCandidate {
    pub prefix: Vec<TokenId>,
    pub score2: f64,
    /// Candidate documents still containing the prefix, stage-one order.
    pub live_docs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub doc_id: String,
    pub title: String,
    /// Token offset of the passage in the document body.
    pub start: usize,
    pub prefix: Vec<TokenId>,
    pub passage: Vec<TokenId>,
    pub score1: f64,
    pub score2: f64,
    pub combined: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recall {
    pub titles: Vec<StageOneResult>,
    pub documents: Vec<StageOneResult>,
    pub prefixes: Vec<PrefixCandidate>,
    pub references: Vec<Reference>,
    /// Scorer calls spent after title recall.
    pub stage2_calls: usize,
}

pub fn combine_scores(score1: f64, score2: f64, alpha: f64) -> f64 {
    alpha * score1 + (1.0 - alpha) * score2
}

/// Top `k` distinct documents in score order.
pub fn select_documents(results: &[StageOneResult], k: usize) -> Vec<StageOneResult> {
    let mut out: Vec<StageOneResult> = Vec::with_capacity(k);
    for r in results {
        if out.len() == k {
            break;
        }
        if !out.iter().any(|o| o.doc_id == r.doc_id) {
            out.push(r.clone());
        }
    }
    out
}

/// Passage of up to `passage_len` tokens starting at `start`.
pub fn extract_reference(doc: &Document, start: usize, passage_len: usize) -> Result<&[TokenId]> {
    let len = doc.body_tokens.len();
    if start >= len {
        return Err(Error::OutOfRange { offset: start, len });
    }
    let end = start.saturating_add(passage_len).min(len);
    Ok(&doc.body_tokens[start..end])
}

/// First candidate document (in the given order) containing `prefix`, and
/// the first offset of `prefix` in it.
pub fn localize<'d>(
    prefix: &[TokenId],
    candidates: &[&'d Document],
) -> Result<(&'d Document, usize)> {
    if prefix.is_empty() {
        return Err(Error::Inconsistency(
            "cannot localize an empty prefix".into(),
        ));
    }
    let matcher = kmp::Matcher::new(prefix);
    for doc in candidates {
        if let Some(st) = matcher.find_first(&doc.body_tokens) {
            return Ok((doc, st));
        }
    }
    Err(Error::Inconsistency(format!(
        "generated prefix {prefix:?} not found in any candidate document"
    )))
}

pub struct Pipeline<'a, S: ?Sized> {
    artifacts: &'a Artifacts,
    scorer: &'a S,
    config: MindRefConfig,
}

impl<'a, S: TokenScorer + ?Sized> Pipeline<'a, S> {
    pub fn new(artifacts: &'a Artifacts, scorer: &'a S, config: MindRefConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            artifacts,
            scorer,
            config,
        })
    }

    pub fn config(&self) -> &MindRefConfig {
        &self.config
    }

    fn corpus(&self) -> &'a Corpus {
        &self.artifacts.corpus
    }

    fn title_beam(&self) -> Result<BeamConfig> {
        Ok(
            BeamConfig::new(self.config.beam1, self.artifacts.trie.max_depth() + 1)?
                .with_normalized_pruning(self.config.normalize_pruning),
        )
    }

    fn prefix_beam(&self) -> Result<BeamConfig> {
        Ok(BeamConfig::new(self.config.beam2, self.config.prefix_len)?
            .with_normalized_pruning(self.config.normalize_pruning))
    }

    pub fn recall_titles(&self, query: &str) -> Result<Vec<StageOneResult>> {
        let corpus = self.corpus();
        let prompt = self
            .config
            .title_prompt()?
            .render_tokens(corpus.codec(), query);
        let out = constrained_beam_search(
            self.scorer,
            &prompt,
            self.artifacts.trie.cursor(),
            &self.title_beam()?,
        )?;
        if out.ranked.is_empty() {
            return Err(Error::DeadEnd(format!(
                "no title could be completed ({} dead hypotheses)",
                out.dead_ends
            )));
        }
        out.ranked
            .into_iter()
            .map(|s| {
                let doc_id = self
                    .artifacts
                    .trie
                    .resolve_title(&s.tokens)
                    .ok_or_else(|| {
                        Error::Inconsistency(format!(
                            "decoded title {:?} is not in the trie",
                            s.tokens
                        ))
                    })?;
                let doc = corpus.by_id(doc_id).ok_or_else(|| {
                    Error::Inconsistency(format!("trie names unknown document {doc_id:?}"))
                })?;
                Ok(StageOneResult {
                    title: doc.title.clone(),
                    doc_id: doc.doc_id.clone(),
                    score1: s.score,
                })
            })
            .collect()
    }

    fn constraint_for(&self, docs: &[StageOneResult]) -> Result<DocSetConstraint> {
        let indexed: Vec<(String, Arc<BwtIndex>)> = docs
            .iter()
            .map(|d| {
                self.artifacts
                    .indexes
                    .get(self.corpus(), &d.doc_id)
                    .map(|idx| (d.doc_id.clone(), idx))
            })
            .collect::<Result<_>>()?;
        DocSetConstraint::new(indexed)
    }

    /// Prefixes decoded over `docs` and the scorer calls spent.
    pub fn recall_prefixes(
        &self,
        query: &str,
        docs: &[StageOneResult],
    ) -> Result<(Vec<PrefixCandidate>, usize)> {
        let constraint = self.constraint_for(docs)?;
        if !constraint.is_live() {
            return Err(Error::DeadEnd("every candidate document is empty".into()));
        }
        let prompt = self
            .config
            .passage_prompt()?
            .render_tokens(self.corpus().codec(), query);
        let out = constrained_beam_search(
            self.scorer,
            &prompt,
            constraint.clone(),
            &self.prefix_beam()?,
        )?;
        let prefixes = out
            .ranked
            .into_iter()
            .filter(|s| !s.tokens.is_empty())
            .map(|s| {
                let state = s
                    .tokens
                    .iter()
                    .fold(constraint.clone(), |c, &t| c.advance(t));
                PrefixCandidate {
                    live_docs: state
                        .live_documents()
                        .into_iter()
                        .map(String::from)
                        .collect(),
                    prefix: s.tokens,
                    score2: s.score,
                }
            })
            .collect();
        Ok((prefixes, out.scorer_calls))
    }

    /// Length-normalized log-probability of `passage` under the stage-two
    /// prompt, each step normalized over the constraint's allowed set.
    pub fn rescore_passage(
        &self,
        query: &str,
        docs: &[StageOneResult],
        passage: &[TokenId],
    ) -> Result<(f64, usize)> {
        let mut state = self.constraint_for(docs)?;
        let mut context = self
            .config
            .passage_prompt()?
            .render_tokens(self.corpus().codec(), query);
        let mut total = 0.0;
        for &token in passage {
            let allowed = state.allowed();
            let slot = allowed.binary_search(&token).map_err(|_| {
                Error::Inconsistency(format!("passage token {token} not allowed while rescoring"))
            })?;
            total += self.scorer.log_probs(&context, &allowed)?[slot];
            state = state.step(token)?;
            context.push(token);
        }
        let n = passage.len().max(1) as f64;
        Ok((total / n, passage.len()))
    }

    pub fn recall(&self, query: &str) -> Result<Recall> {
        let corpus = self.corpus();
        let titles = self.recall_titles(query)?;
        let documents = select_documents(&titles, self.config.k);
        let (prefixes, mut stage2_calls) = self.recall_prefixes(query, &documents)?;

        let candidates: Vec<&Document> = documents
            .iter()
            .map(|d| {
                corpus
                    .by_id(&d.doc_id)
                    .ok_or_else(|| Error::MissingIndex(d.doc_id.clone()))
            })
            .collect::<Result<_>>()?;

        let mut references: Vec<(usize, Reference)> = Vec::new();
        for p in &prefixes {
            let (doc, start) = localize(&p.prefix, &candidates)?;
            if p.live_docs.first().map(String::as_str) != Some(doc.doc_id.as_str()) {
                return Err(Error::Inconsistency(format!(
                    "prefix localized to {:?} but the index keeps {:?} first",
                    doc.doc_id, p.live_docs
                )));
            }
            let rank = candidates
                .iter()
                .position(|d| d.doc_id == doc.doc_id)
                .expect("localized document is a candidate");
            let passage = extract_reference(doc, start, self.config.passage_len)?.to_vec();
            let score1 = documents[rank].score1;
            let score2 = if self.config.rescore_full_passage {
                let (s, calls) = self.rescore_passage(query, &documents, &passage)?;
                stage2_calls += calls;
                s
            } else {
                p.score2
            };
            let reference = Reference {
                doc_id: doc.doc_id.clone(),
                title: doc.title.clone(),
                start,
                prefix: p.prefix.clone(),
                passage,
                score1,
                score2,
                combined: combine_scores(score1, score2, self.config.alpha),
            };
            match references
                .iter_mut()
                .find(|(_, r)| r.doc_id == reference.doc_id && r.start == reference.start)
            {
                Some((_, existing)) => {
                    if reference.combined > existing.combined {
                        *existing = reference;
                    }
                }
                None => references.push((rank, reference)),
            }
        }

        references.sort_by(|(ra, a), (rb, b)| {
            b.combined
                .total_cmp(&a.combined)
                .then(ra.cmp(rb))
                .then(a.start.cmp(&b.start))
                .then_with(|| a.prefix.cmp(&b.prefix))
        });
        if references.is_empty() {
            return Err(Error::DeadEnd("no passage prefix could be decoded".into()));
        }
        Ok(Recall {
            titles,
            documents,
            prefixes,
            references: references.into_iter().map(|(_, r)| r).collect(),
            stage2_calls,
        })
    }
}
