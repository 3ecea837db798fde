//! Seeded synthetic corpora and excerpt queries for desk-scale runs.
//!
//! Bodies are uniform draws from a pseudo-word vocabulary; titles are
//! two capitalized pseudo-words whose first word is shared by several
//! documents, so title recall needs more than one decoding step.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::SourceRecord;
use crate::eval::EvalItem;

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
/// Coprime with the number of three-syllable words.
const SPREAD: usize = 7919;

fn syllable_word(index: usize) -> String {
    let syllables = CONSONANTS.len() * VOWELS.len();
    let space = syllables * syllables * syllables;
    let mut code = (index * SPREAD + 1) % space;
    let mut out = String::with_capacity(6);
    for _ in 0..3 {
        let s = code % syllables;
        code /= syllables;
        out.push(CONSONANTS[s / VOWELS.len()] as char);
        out.push(VOWELS[s % VOWELS.len()] as char);
    }
    out
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub documents: usize,
    pub tokens_per_doc: usize,
    pub vocabulary: usize,
    /// Distinct first title words.
    pub title_heads: usize,
    /// Passage fragments per record.
    pub fragments: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            documents: 50,
            tokens_per_doc: 300,
            vocabulary: 3000,
            title_heads: 10,
            fragments: 3,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcerptQuery {
    pub id: String,
    pub query: String,
    pub doc_id: String,
    pub start: usize,
    pub answer: String,
}

impl ExcerptQuery {
    pub fn eval_item(&self) -> EvalItem {
        EvalItem {
            query: self.query.clone(),
            gold_provenance: vec![self.doc_id.clone()],
            gold_answers: vec![self.answer.clone()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticCorpus {
    pub spec: SyntheticSpec,
    pub records: Vec<SourceRecord>,
    bodies: Vec<Vec<String>>,
}

impl SyntheticCorpus {
    pub fn generate(spec: SyntheticSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let vocab: Vec<String> = (0..spec.vocabulary.max(1)).map(syllable_word).collect();
        let name_base = spec.vocabulary.max(1);
        let heads: Vec<String> = (0..spec.title_heads.max(1))
            .map(|i| capitalize(&syllable_word(name_base + i)))
            .collect();
        let tail_base = name_base + heads.len();

        let mut records = Vec::with_capacity(spec.documents);
        let mut bodies = Vec::with_capacity(spec.documents);
        for d in 0..spec.documents {
            let body: Vec<String> = (0..spec.tokens_per_doc)
                .map(|_| vocab[rng.random_range(0..vocab.len())].clone())
                .collect();
            let title = format!(
                "{} {}",
                heads[d % heads.len()],
                capitalize(&syllable_word(tail_base + d))
            );
            let parts = spec.fragments.clamp(1, body.len().max(1));
            let chunk = body.len().div_ceil(parts).max(1);
            let text = body.chunks(chunk).map(|c| c.join(" ")).collect();
            records.push(SourceRecord {
                id: format!("doc-{d:04}"),
                title,
                text,
            });
            bodies.push(body);
        }
        Self {
            spec,
            records,
            bodies,
        }
    }

    pub fn body_words(&self, doc: usize) -> &[String] {
        &self.bodies[doc]
    }

    /// `n` queries, each `len` consecutive body words of a random document.
    /// The gold answer is the excerpt's middle word.
    pub fn excerpt_queries(&self, n: usize, len: usize, seed: u64) -> Vec<ExcerptQuery> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let doc = i % self.records.len();
                let words = &self.bodies[doc];
                let len = len.clamp(1, words.len());
                let start = rng.random_range(0..=words.len() - len);
                ExcerptQuery {
                    id: format!("q{i:04}"),
                    query: words[start..start + len].join(" "),
                    doc_id: self.records[doc].id.clone(),
                    start,
                    answer: words[start + len / 2].clone(),
                }
            })
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}
