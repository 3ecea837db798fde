//! Constrained beam search.
//!
//! Live hypotheses are pruned to `beam_size` by cumulative log-probability
//! (or by length-normalized score when [`BeamConfig::normalize_pruning`] is
//! set). A hypothesis finishes when it takes [`TokenId::END`] or reaches
//! `max_len`; finished hypotheses wait in a separate pool and only compete at
//! final ranking, which orders by `cum_logprob / generated length` with ties
//! going to the lexicographically smaller token sequence.
//!
//! A taken end marker counts as a generated step: its log-probability is
//! part of the sum and of the length, but it is not part of the returned
//! sequence.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scorer::TokenScorer;
use crate::token::TokenId;

/// A decoding-time restriction on which tokens may come next.
pub trait Constraint: Clone + Send + Sync {
    /// Tokens allowed next, ascending. Empty means the hypothesis is dead.
    fn allowed(&self) -> Vec<TokenId>;
    /// State after taking `token`; errors if `token` is not allowed.
    fn step(&self, token: TokenId) -> Result<Self>;
    /// Whether the sequence generated so far is a complete output.
    fn is_terminal(&self) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeamConfig {
    pub beam_size: usize,
    pub max_len: usize,
    pub normalize_pruning: bool,
}

impl BeamConfig {
    pub fn new(beam_size: usize, max_len: usize) -> Result<Self> {
        if beam_size == 0 {
            return Err(Error::Config("beam size must be at least 1".into()));
        }
        if max_len == 0 {
            return Err(Error::Config("max length must be at least 1".into()));
        }
        Ok(Self {
            beam_size,
            max_len,
            normalize_pruning: false,
        })
    }

    pub fn with_normalized_pruning(mut self, on: bool) -> Self {
        self.normalize_pruning = on;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Hypothesis<C> {
    pub generated: Vec<TokenId>,
    pub cum_logprob: f64,
    /// Scored steps, including a taken end marker.
    pub steps: usize,
    pub state: C,
    pub finished: bool,
}

impl<C> Hypothesis<C> {
    pub fn normalized(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.cum_logprob / self.steps as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub tokens: Vec<TokenId>,
    pub score: f64,
    pub cum_logprob: f64,
    pub steps: usize,
    pub ended: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamOutput {
    pub ranked: Vec<Scored>,
    /// Hypotheses dropped because their constraint allowed nothing.
    pub dead_ends: usize,
    /// Scorer invocations made by this search.
    pub scorer_calls: usize,
}

fn by_key_then_tokens(a_key: f64, a: &[TokenId], b_key: f64, b: &[TokenId]) -> Ordering {
    b_key.total_cmp(&a_key).then_with(|| a.cmp(b))
}

pub fn constrained_beam_search<S, C>(
    scorer: &S,
    prompt: &[TokenId],
    constraint: C,
    config: &BeamConfig,
) -> Result<BeamOutput>
where
    S: TokenScorer + ?Sized,
    C: Constraint,
{
    if config.beam_size == 0 || config.max_len == 0 {
        return Err(Error::Config(
            "beam size and max length must be positive".into(),
        ));
    }
    if constraint.allowed().is_empty() {
        return Err(Error::DeadConstraint);
    }

    let mut live = vec![Hypothesis {
        generated: Vec::new(),
        cum_logprob: 0.0,
        steps: 0,
        state: constraint,
        finished: false,
    }];
    let mut finished: Vec<Hypothesis<C>> = Vec::new();
    let mut dead_ends = 0;
    let mut scorer_calls = 0;

    for _ in 0..config.max_len {
        if live.is_empty() {
            break;
        }
        let expansions: Vec<Result<Option<Vec<Hypothesis<C>>>>> = live
            .par_iter()
            .map(|hyp| expand(scorer, prompt, hyp))
            .collect();

        let mut candidates = Vec::new();
        for e in expansions {
            match e? {
                Some(children) => {
                    scorer_calls += 1;
                    candidates.extend(children);
                }
                None => dead_ends += 1,
            }
        }

        let (done, mut open): (Vec<_>, Vec<_>) = candidates.into_iter().partition(|h| h.finished);
        finished.extend(done);
        rank_finished(&mut finished, config.beam_size);

        if config.normalize_pruning {
            open.sort_by(|a, b| {
                by_key_then_tokens(a.normalized(), &a.generated, b.normalized(), &b.generated)
            });
        } else {
            open.sort_by(|a, b| {
                by_key_then_tokens(a.cum_logprob, &a.generated, b.cum_logprob, &b.generated)
            });
        }
        open.truncate(config.beam_size);
        live = open;
    }

    // survivors of the length limit are complete only if the constraint says so
    for mut hyp in live {
        if hyp.state.is_terminal() {
            hyp.finished = true;
            finished.push(hyp);
        }
    }
    rank_finished(&mut finished, config.beam_size);

    Ok(BeamOutput {
        ranked: finished
            .into_iter()
            .map(|h| Scored {
                score: h.normalized(),
                ended: h.generated.len() < h.steps,
                tokens: h.generated,
                cum_logprob: h.cum_logprob,
                steps: h.steps,
            })
            .collect(),
        dead_ends,
        scorer_calls,
    })
}

fn rank_finished<C>(finished: &mut Vec<Hypothesis<C>>, keep: usize) {
    finished.sort_by(|a, b| {
        by_key_then_tokens(a.normalized(), &a.generated, b.normalized(), &b.generated)
    });
    finished.truncate(keep);
}

/// `None` when the hypothesis is dead.
fn expand<S, C>(
    scorer: &S,
    prompt: &[TokenId],
    hyp: &Hypothesis<C>,
) -> Result<Option<Vec<Hypothesis<C>>>>
where
    S: TokenScorer + ?Sized,
    C: Constraint,
{
    let allowed = hyp.state.allowed();
    if allowed.is_empty() {
        return Ok(None);
    }
    let mut context = Vec::with_capacity(prompt.len() + hyp.generated.len());
    context.extend_from_slice(prompt);
    context.extend_from_slice(&hyp.generated);
    let log_probs = scorer.log_probs(&context, &allowed)?;
    if log_probs.len() != allowed.len() {
        return Err(Error::Inconsistency(format!(
            "scorer returned {} values for {} candidates",
            log_probs.len(),
            allowed.len()
        )));
    }
    let mut children = Vec::with_capacity(allowed.len());
    for (&token, &lp) in allowed.iter().zip(&log_probs) {
        if lp.is_nan() {
            return Err(Error::Inconsistency(format!(
                "NaN log-probability for token {token}"
            )));
        }
        if lp == f64::NEG_INFINITY {
            continue;
        }
        let state = hyp.state.step(token)?;
        let ended = token == TokenId::END;
        let mut generated = hyp.generated.clone();
        if !ended {
            generated.push(token);
        }
        children.push(Hypothesis {
            generated,
            cum_logprob: hyp.cum_logprob + lp,
            steps: hyp.steps + 1,
            state,
            finished: ended,
        });
    }
    Ok(Some(children))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorer::UniformScorer;
    use crate::trie::TitleTrie;

    fn t(v: &[u32]) -> Vec<TokenId> {
        v.iter().copied().map(TokenId).collect()
    }

    #[test]
    fn single_title_is_the_only_result() {
        let trie = TitleTrie::from_titles([(t(&[3, 4, 5]), "d".into())]).unwrap();
        let out = constrained_beam_search(
            &UniformScorer,
            &[],
            trie.cursor(),
            &BeamConfig::new(5, 8).unwrap(),
        )
        .unwrap();
        assert_eq!(out.ranked.len(), 1);
        assert_eq!(out.ranked[0].tokens, t(&[3, 4, 5]));
        assert_eq!(out.ranked[0].score, 0.0);
        assert!(out.ranked[0].ended);
        assert_eq!(out.ranked[0].steps, 4);
    }

    #[test]
    fn ties_break_lexicographically() {
        let trie = TitleTrie::from_titles([
            (t(&[4]), "b".into()),
            (t(&[3]), "a".into()),
            (t(&[5]), "c".into()),
        ])
        .unwrap();
        let out = constrained_beam_search(
            &UniformScorer,
            &[],
            trie.cursor(),
            &BeamConfig::new(2, 4).unwrap(),
        )
        .unwrap();
        let tokens: Vec<_> = out.ranked.iter().map(|s| s.tokens.clone()).collect();
        assert_eq!(tokens, vec![t(&[3]), t(&[4])]);
    }

    #[derive(Clone)]
    struct Dead;
    impl Constraint for Dead {
        fn allowed(&self) -> Vec<TokenId> {
            Vec::new()
        }
        fn step(&self, token: TokenId) -> Result<Self> {
            Err(Error::InvalidStep(token))
        }
        fn is_terminal(&self) -> bool {
            false
        }
    }

    #[test]
    fn dead_start_is_an_error() {
        let err =
            constrained_beam_search(&UniformScorer, &[], Dead, &BeamConfig::new(1, 1).unwrap());
        assert!(matches!(err, Err(Error::DeadConstraint)));
    }

    /// Allows 3 once, then nothing: every hypothesis dies unfinished.
    #[derive(Clone)]
    struct OneThenDead(bool);
    impl Constraint for OneThenDead {
        fn allowed(&self) -> Vec<TokenId> {
            if self.0 {
                Vec::new()
            } else {
                vec![TokenId(3)]
            }
        }
        fn step(&self, _: TokenId) -> Result<Self> {
            Ok(OneThenDead(true))
        }
        fn is_terminal(&self) -> bool {
            false
        }
    }

    #[test]
    fn all_dead_reports_dead_ends() {
        let out = constrained_beam_search(
            &UniformScorer,
            &[],
            OneThenDead(false),
            &BeamConfig::new(3, 5).unwrap(),
        )
        .unwrap();
        assert!(out.ranked.is_empty());
        assert_eq!(out.dead_ends, 1);
    }

    #[test]
    fn zero_beam_rejected() {
        assert!(BeamConfig::new(0, 3).is_err());
    }
}
