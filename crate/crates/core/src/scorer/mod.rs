//! The model boundary: log-probabilities of candidate next tokens.
//!
//! Decoding only ever compares tokens within one allowed set, so scorers
//! here normalize over the candidate set they are given.

mod ngram;
mod remote;

use std::sync::atomic::{AtomicUsize, Ordering};

pub use ngram::NGramScorer;
pub use remote::{RemoteScorer, ScoreRequest, ScoreResponse, ScorerServer};

use crate::error::{Error, Result};
use crate::token::TokenId;

pub trait TokenScorer: Send + Sync {
    /// One log-probability per candidate, aligned with `candidates`.
    /// Values are finite or negative infinity, never NaN.
    fn log_probs(&self, context: &[TokenId], candidates: &[TokenId]) -> Result<Vec<f64>>;
}

impl<S: TokenScorer + ?Sized> TokenScorer for &S {
    fn log_probs(&self, context: &[TokenId], candidates: &[TokenId]) -> Result<Vec<f64>> {
        (**self).log_probs(context, candidates)
    }
}

impl<S: TokenScorer + ?Sized> TokenScorer for Box<S> {
    fn log_probs(&self, context: &[TokenId], candidates: &[TokenId]) -> Result<Vec<f64>> {
        (**self).log_probs(context, candidates)
    }
}

impl<S: TokenScorer + ?Sized> TokenScorer for std::sync::Arc<S> {
    fn log_probs(&self, context: &[TokenId], candidates: &[TokenId]) -> Result<Vec<f64>> {
        (**self).log_probs(context, candidates)
    }
}

/// Every candidate equally likely.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformScorer;

impl TokenScorer for UniformScorer {
    fn log_probs(&self, _context: &[TokenId], candidates: &[TokenId]) -> Result<Vec<f64>> {
        if candidates.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        let lp = -(candidates.len() as f64).ln();
        Ok(vec![lp; candidates.len()])
    }
}

/// Counts calls to the wrapped scorer.
#[derive(Debug, Default)]
pub struct CountingScorer<S> {
    inner: S,
    calls: AtomicUsize,
}

impl<S> CountingScorer<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }
}

impl<S: TokenScorer> TokenScorer for CountingScorer<S> {
    fn log_probs(&self, context: &[TokenId], candidates: &[TokenId]) -> Result<Vec<f64>> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.log_probs(context, candidates)
    }
}
