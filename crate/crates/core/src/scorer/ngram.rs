use std::collections::{BTreeMap, HashMap};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::token::TokenId;

use super::TokenScorer;

/// Default weight of in-context evidence for [`NGramScorer::for_corpus`].
pub const DEFAULT_CACHE_WEIGHT: f64 = 4.0;
/// Default weight of title association for [`NGramScorer::for_corpus`].
pub const DEFAULT_ASSOCIATION_WEIGHT: f64 = 16.0;

/// Deterministic n-gram scorer with add-one smoothing over the candidate set.
///
/// Each candidate `c` collects evidence
///
/// ```text
/// e(c) = sum_j j * (train_j(h_j, c) + cache * ctx_j(h_j, c))
///      + cache * ctx_0(c)
///      + assoc * a(c)
/// ```
///
/// where `h_j` is the last `j` context tokens (`1 <= j < order`),
/// `train_j` counts the n-gram in the training stream and `ctx_j` counts it
/// inside the context itself. `a(c)` sums, over distinct context tokens
/// `q`, the fraction of documents containing `q` whose title contains `c`.
/// Then `p(c) = (1 + e(c)) / sum_c' (1 + e(c'))`.
///
/// With both weights at zero this is a plain add-one n-gram model.
#[derive(Debug, Clone)]
pub struct NGramScorer {
    order: usize,
    /// `tables[j - 1]`: history of length `j` to follower counts.
    tables: Vec<HashMap<Vec<TokenId>, HashMap<TokenId, u32>>>,
    cache_weight: f64,
    association_weight: f64,
    /// Context token to `(title token, weight)`, sorted by title token.
    association: HashMap<TokenId, Vec<(TokenId, f64)>>,
}

impl Default for NGramScorer {
    fn default() -> Self {
        Self::untrained(3)
    }
}

impl NGramScorer {
    pub fn untrained(order: usize) -> Self {
        let order = order.max(1);
        Self {
            order,
            tables: vec![HashMap::new(); order - 1],
            cache_weight: 0.0,
            association_weight: 0.0,
            association: HashMap::new(),
        }
    }

    /// Counts n-grams within each sequence; nothing spans two sequences.
    pub fn train<'a, I>(order: usize, sequences: I) -> Self
    where
        I: IntoIterator<Item = &'a [TokenId]>,
    {
        let mut scorer = Self::untrained(order);
        for seq in sequences {
            scorer.add_sequence(seq);
        }
        scorer
    }

    fn add_sequence(&mut self, seq: &[TokenId]) {
        for j in 1..self.order {
            let table = &mut self.tables[j - 1];
            for w in seq.windows(j + 1) {
                *table
                    .entry(w[..j].to_vec())
                    .or_default()
                    .entry(w[j])
                    .or_insert(0) += 1;
            }
        }
    }

    /// Trained on every title and body of the corpus.
    pub fn from_corpus(corpus: &Corpus, order: usize) -> Self {
        Self::train(
            order,
            corpus
                .documents()
                .iter()
                .flat_map(|d| [d.title_tokens.as_slice(), d.body_tokens.as_slice()]),
        )
    }

    /// Trigram model with in-context and title-association evidence at the
    /// default weights; the stand-in used by the pipeline and CLI.
    pub fn for_corpus(corpus: &Corpus) -> Self {
        Self::from_corpus(corpus, 3)
            .with_cache(DEFAULT_CACHE_WEIGHT)
            .with_title_association(corpus, DEFAULT_ASSOCIATION_WEIGHT)
    }

    pub fn with_cache(mut self, weight: f64) -> Self {
        self.cache_weight = weight.max(0.0);
        self
    }

    /// Links body tokens to the title tokens of the documents they occur in.
    pub fn with_title_association(mut self, corpus: &Corpus, weight: f64) -> Self {
        let mut df: BTreeMap<TokenId, u32> = BTreeMap::new();
        let mut pairs: BTreeMap<(TokenId, TokenId), u32> = BTreeMap::new();
        for doc in corpus.documents() {
            let mut body = doc.body_tokens.clone();
            body.sort_unstable();
            body.dedup();
            let mut title = doc.title_tokens.clone();
            title.sort_unstable();
            title.dedup();
            for &q in &body {
                *df.entry(q).or_insert(0) += 1;
                for &c in &title {
                    *pairs.entry((q, c)).or_insert(0) += 1;
                }
            }
        }
        let mut association: HashMap<TokenId, Vec<(TokenId, f64)>> = HashMap::new();
        for ((q, c), n) in pairs {
            association
                .entry(q)
                .or_default()
                .push((c, n as f64 / df[&q] as f64));
        }
        self.association = association;
        self.association_weight = weight.max(0.0);
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn evidence(&self, context: &[TokenId], candidates: &[TokenId]) -> Vec<f64> {
        let mut evidence = vec![0.0; candidates.len()];

        for j in 1..self.order.min(context.len() + 1) {
            let history = &context[context.len() - j..];
            let weight = j as f64;
            if let Some(followers) = self.tables[j - 1].get(history) {
                for (e, c) in evidence.iter_mut().zip(candidates) {
                    if let Some(&n) = followers.get(c) {
                        *e += weight * n as f64;
                    }
                }
            }
            if self.cache_weight > 0.0 {
                let followers = in_context_followers(context, j);
                for (e, c) in evidence.iter_mut().zip(candidates) {
                    if let Some(&n) = followers.get(c) {
                        *e += weight * self.cache_weight * n as f64;
                    }
                }
            }
        }

        if self.cache_weight > 0.0 {
            let mut unigrams: BTreeMap<TokenId, u32> = BTreeMap::new();
            for &t in context {
                *unigrams.entry(t).or_insert(0) += 1;
            }
            for (e, c) in evidence.iter_mut().zip(candidates) {
                if let Some(&n) = unigrams.get(c) {
                    *e += self.cache_weight * n as f64;
                }
            }
        }

        if self.association_weight > 0.0 && !self.association.is_empty() {
            let slot: HashMap<TokenId, usize> = candidates
                .iter()
                .enumerate()
                .map(|(i, &c)| (c, i))
                .collect();
            let mut acc = vec![0.0; candidates.len()];
            let mut seen = std::collections::HashSet::new();
            for &q in context {
                if !seen.insert(q) {
                    continue;
                }
                if let Some(links) = self.association.get(&q) {
                    for (c, w) in links {
                        if let Some(&i) = slot.get(c) {
                            acc[i] += w;
                        }
                    }
                }
            }
            for (e, a) in evidence.iter_mut().zip(acc) {
                *e += self.association_weight * a;
            }
        }
        evidence
    }
}

/// Followers of every earlier occurrence of the final `j` context tokens.
fn in_context_followers(context: &[TokenId], j: usize) -> BTreeMap<TokenId, u32> {
    let mut out = BTreeMap::new();
    let history = &context[context.len() - j..];
    for i in 0..context.len() - j {
        if &context[i..i + j] == history {
            *out.entry(context[i + j]).or_insert(0) += 1;
        }
    }
    out
}

impl TokenScorer for NGramScorer {
    fn log_probs(&self, context: &[TokenId], candidates: &[TokenId]) -> Result<Vec<f64>> {
        if candidates.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        let weights: Vec<f64> = self
            .evidence(context, candidates)
            .into_iter()
            .map(|e| 1.0 + e)
            .collect();
        let total: f64 = weights.iter().sum();
        Ok(weights.into_iter().map(|w| (w / total).ln()).collect())
    }
}
