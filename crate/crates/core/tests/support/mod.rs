//! Independent oracles shared by the integration suites. Nothing here calls
//! into the index or trie internals; everything is recomputed by brute force.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use mindref::decode::Constraint;
use mindref::fmindex::{build_suffix_array, BwtIndex, DocSetConstraint};
use mindref::scorer::TokenScorer;
use mindref::{constrained_beam_search, BeamConfig, Result, TitleTrie, TokenId};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const END: TokenId = TokenId::END;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ids(v: &[u32]) -> Vec<TokenId> {
    v.iter().copied().map(TokenId).collect()
}

/// Log-uniform integer in `[lo, hi]`.
pub fn log_uniform(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    let (a, b) = ((lo as f64).ln(), (hi as f64 + 1.0).ln());
    let x = rng.random_range(a..b).exp() as usize;
    x.clamp(lo, hi)
}

pub fn random_text(rng: &mut ChaCha8Rng, alphabet: usize, len: usize) -> Vec<TokenId> {
    (0..len)
        .map(|_| TokenId(TokenId::FIRST_FREE + rng.random_range(0..alphabet as u32)))
        .collect()
}

// --- suffix array / BWT ----------------------------------------------------

/// Suffix array of `text + [sentinel]` by direct comparison of suffixes.
pub fn naive_suffix_array(text: &[TokenId]) -> Vec<u32> {
    let mut full: Vec<u32> = text.iter().map(|t| t.0).collect();
    full.push(TokenId::SENTINEL.0);
    let mut sa: Vec<u32> = (0..full.len() as u32).collect();
    sa.sort_by(|&a, &b| full[a as usize..].cmp(&full[b as usize..]));
    sa
}

/// Original text recovered from a BWT (with one sentinel) by LF walking.
pub fn inverse_bwt(bwt: &[TokenId]) -> Vec<TokenId> {
    let n = bwt.len();
    // stable sort of the L column gives the F column; lf[i] = row of bwt[i] in F
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| bwt[i]);
    let mut lf = vec![0usize; n];
    for (f_row, &l_row) in order.iter().enumerate() {
        lf[l_row] = f_row;
    }
    // row 0 starts with the sentinel, so its L symbol is the last text token
    let mut out = Vec::with_capacity(n - 1);
    let mut row = 0;
    for _ in 0..n - 1 {
        out.push(bwt[row]);
        row = lf[row];
    }
    out.reverse();
    out
}

pub fn naive_locate(text: &[TokenId], pattern: &[TokenId]) -> Vec<usize> {
    if pattern.is_empty() || pattern.len() > text.len() {
        return Vec::new();
    }
    (0..=text.len() - pattern.len())
        .filter(|&i| &text[i..i + pattern.len()] == pattern)
        .collect()
}

/// Tokens that follow some occurrence of `pattern`, ascending.
pub fn naive_successors(text: &[TokenId], pattern: &[TokenId]) -> Vec<TokenId> {
    let m = pattern.len();
    let set: BTreeSet<TokenId> = (0..text.len().saturating_sub(m))
        .filter(|&i| &text[i..i + m] == pattern)
        .map(|i| text[i + m])
        .collect();
    set.into_iter().collect()
}

/// Random query patterns for `text`: present substrings, perturbed
/// substrings and fully random strings.
pub fn patterns(
    rng: &mut ChaCha8Rng,
    text: &[TokenId],
    alphabet: usize,
    count: usize,
) -> Vec<Vec<TokenId>> {
    (0..count)
        .map(|i| {
            let m = rng.random_range(0..=8usize.min(text.len()));
            match i % 3 {
                0 if text.len() >= m => {
                    let s = rng.random_range(0..=text.len() - m);
                    text[s..s + m].to_vec()
                }
                1 if text.len() >= m && m > 0 => {
                    let s = rng.random_range(0..=text.len() - m);
                    let mut p = text[s..s + m].to_vec();
                    let j = rng.random_range(0..m);
                    p[j] = TokenId(TokenId::FIRST_FREE + rng.random_range(0..alphabet as u32 + 1));
                    p
                }
                _ => random_text(rng, alphabet + 1, m),
            }
        })
        .collect()
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SuiteStats {
    pub instances: usize,
    pub checks: usize,
}

fn instance_text(rng: &mut ChaCha8Rng) -> (usize, Vec<TokenId>) {
    let alphabet = rng.random_range(2..=100);
    let len = log_uniform(rng, 1, 10_000);
    (alphabet, random_text(rng, alphabet, len))
}

/// Suffix array vs naive suffix sort, plus BWT inversion.
pub fn suffix_array_suite(seed: u64, instances: usize) -> std::result::Result<SuiteStats, String> {
    let mut rng = rng(seed);
    let mut stats = SuiteStats::default();
    for case in 0..instances {
        let (_, text) = instance_text(&mut rng);
        let sa = build_suffix_array(&text).map_err(|e| e.to_string())?;
        let naive = naive_suffix_array(&text);
        if sa.0 != naive {
            return Err(format!(
                "case {case}: suffix array differs (len {})",
                text.len()
            ));
        }
        let index = BwtIndex::build_forward(&text).map_err(|e| e.to_string())?;
        if inverse_bwt(index.bwt()) != text {
            return Err(format!("case {case}: BWT does not invert to the text"));
        }
        stats.instances += 1;
        stats.checks += 2;
    }
    Ok(stats)
}

/// count / locate / successor sets vs naive scans.
pub fn fm_index_suite(seed: u64, instances: usize) -> std::result::Result<SuiteStats, String> {
    let mut rng = rng(seed);
    let mut stats = SuiteStats::default();
    for case in 0..instances {
        let (alphabet, text) = instance_text(&mut rng);
        let index = BwtIndex::build(&text).map_err(|e| e.to_string())?;
        let forward = BwtIndex::build_forward(&text).map_err(|e| e.to_string())?;
        for p in patterns(&mut rng, &text, alphabet, 12) {
            let expected = naive_locate(&text, &p);
            if !p.is_empty() {
                if index.count(&p) != expected.len() || forward.count(&p) != expected.len() {
                    return Err(format!(
                        "case {case}: count({p:?}) = {} / {}, naive {}",
                        index.count(&p),
                        forward.count(&p),
                        expected.len()
                    ));
                }
                if index.locate_all(&p) != expected || forward.locate_all(&p) != expected {
                    return Err(format!("case {case}: locate({p:?}) differs"));
                }
            }
            let allowed = index.distinct_in(index.forward_range(&p));
            let naive = naive_successors(&text, &p);
            if allowed != naive {
                return Err(format!(
                    "case {case}: successors of {p:?}: {allowed:?} vs {naive:?}"
                ));
            }
            stats.checks += 3;
        }
        stats.instances += 1;
    }
    Ok(stats)
}

/// Random title set; titles may nest (one a prefix of another).
pub fn random_titles(
    rng: &mut ChaCha8Rng,
    count: usize,
    alphabet: usize,
    max_len: usize,
) -> Vec<Vec<TokenId>> {
    let mut set = BTreeSet::new();
    let mut attempts = 0;
    while set.len() < count && attempts < count * 20 {
        attempts += 1;
        let len = rng.random_range(1..=max_len);
        let title = if !set.is_empty() && rng.random_bool(0.3) {
            // extend or truncate an existing title to force shared prefixes
            let base: &Vec<TokenId> = set.iter().nth(rng.random_range(0..set.len())).unwrap();
            let mut t: Vec<TokenId> = base[..rng.random_range(1..=base.len())].to_vec();
            let extra = rng.random_range(0..=2);
            t.extend(random_text(rng, alphabet, extra));
            t
        } else {
            random_text(rng, alphabet, len)
        };
        set.insert(title);
    }
    set.into_iter().collect()
}

/// `{END if prefix is a title} ∪ {next token of titles extending prefix}`.
pub fn brute_allowed_next(titles: &[Vec<TokenId>], prefix: &[TokenId]) -> Vec<TokenId> {
    let mut out = BTreeSet::new();
    for t in titles {
        if t.as_slice() == prefix {
            out.insert(END);
        } else if t.len() > prefix.len() && t.starts_with(prefix) {
            out.insert(t[prefix.len()]);
        }
    }
    out.into_iter().collect()
}

pub fn build_trie(titles: &[Vec<TokenId>]) -> TitleTrie {
    TitleTrie::from_titles(
        titles
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), format!("doc{i}"))),
    )
    .unwrap()
}

/// Trie allowed_next vs brute-force prefix filter.
pub fn trie_suite(seed: u64, instances: usize) -> std::result::Result<SuiteStats, String> {
    let mut rng = rng(seed);
    let mut stats = SuiteStats::default();
    for case in 0..instances {
        let alphabet = rng.random_range(2..=100);
        let count = log_uniform(&mut rng, 1, 2000);
        let titles = random_titles(&mut rng, count, alphabet, 12);
        let trie = build_trie(&titles);
        for q in 0..24 {
            let prefix: Vec<TokenId> = if q % 2 == 0 {
                let t = &titles[rng.random_range(0..titles.len())];
                t[..rng.random_range(0..=t.len())].to_vec()
            } else {
                let len = rng.random_range(0..4);
                random_text(&mut rng, alphabet, len)
            };
            let got = trie.allowed_next(&prefix);
            let want = brute_allowed_next(&titles, &prefix);
            if got != want {
                return Err(format!(
                    "case {case}: allowed_next({prefix:?}) = {got:?}, want {want:?}"
                ));
            }
            stats.checks += 1;
        }
        stats.instances += 1;
    }
    Ok(stats)
}

// --- decoding oracles --------------------------------------------------------

/// Context-sensitive pseudo-random scorer: logits from a hash of the last two
/// context tokens and the candidate, normalized over the candidate set.
#[derive(Debug, Clone, Copy)]
pub struct HashScorer {
    pub salt: u64,
}

fn mix(mut x: u64) -> u64 {
    x ^= x >> 33;
    x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
    x ^= x >> 33;
    x = x.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    x ^ (x >> 33)
}

impl TokenScorer for HashScorer {
    fn log_probs(&self, context: &[TokenId], candidates: &[TokenId]) -> Result<Vec<f64>> {
        let a = context.last().map_or(0, |t| t.0 as u64);
        let b = context
            .len()
            .checked_sub(2)
            .map_or(0, |i| context[i].0 as u64);
        let logits: Vec<f64> = candidates
            .iter()
            .map(|c| {
                let h = mix(self.salt ^ mix(a << 32 | b) ^ mix(c.0 as u64 + 0x9e37));
                (h % 10_000) as f64 / 2_000.0
            })
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logits.iter().map(|l| (l - max).exp()).sum();
        Ok(logits.iter().map(|l| l - max - z.ln()).collect())
    }
}

/// Successor union over documents by naive scan; `{END}` at a document tail
/// where nothing can follow; empty when the prefix occurs nowhere.
pub fn brute_doc_allowed(docs: &[Vec<TokenId>], prefix: &[TokenId]) -> Vec<TokenId> {
    if prefix.is_empty() {
        let set: BTreeSet<TokenId> = docs.iter().flatten().copied().collect();
        return set.into_iter().collect();
    }
    let mut out = BTreeSet::new();
    let mut present = false;
    for d in docs {
        if !naive_locate(d, prefix).is_empty() {
            present = true;
        }
        out.extend(naive_successors(d, prefix));
    }
    if out.is_empty() && present {
        out.insert(END);
    }
    out.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Complete {
    pub tokens: Vec<TokenId>,
    pub cum: f64,
    pub steps: usize,
}

impl Complete {
    pub fn score(&self) -> f64 {
        self.cum / self.steps as f64
    }
}

/// Every complete sequence reachable under `allowed`, scored from scratch.
/// A sequence completes on END, or at `max_len` steps when `terminal` holds.
pub fn enumerate<S, A, T>(
    scorer: &S,
    prompt: &[TokenId],
    max_len: usize,
    allowed: A,
    terminal: T,
) -> Vec<Complete>
where
    S: TokenScorer,
    A: Fn(&[TokenId]) -> Vec<TokenId>,
    T: Fn(&[TokenId]) -> bool,
{
    fn go<S: TokenScorer, A: Fn(&[TokenId]) -> Vec<TokenId>, T: Fn(&[TokenId]) -> bool>(
        scorer: &S,
        prompt: &[TokenId],
        max_len: usize,
        allowed: &A,
        terminal: &T,
        prefix: &mut Vec<TokenId>,
        cum: f64,
        out: &mut Vec<Complete>,
    ) {
        if prefix.len() == max_len {
            if terminal(prefix) {
                out.push(Complete {
                    tokens: prefix.clone(),
                    cum,
                    steps: prefix.len(),
                });
            }
            return;
        }
        let cands = allowed(prefix);
        if cands.is_empty() {
            return;
        }
        let mut context = prompt.to_vec();
        context.extend_from_slice(prefix);
        let lps = scorer.log_probs(&context, &cands).unwrap();
        for (&c, &lp) in cands.iter().zip(&lps) {
            if lp == f64::NEG_INFINITY {
                continue;
            }
            if c == END {
                out.push(Complete {
                    tokens: prefix.clone(),
                    cum: cum + lp,
                    steps: prefix.len() + 1,
                });
            } else {
                prefix.push(c);
                go(
                    scorer,
                    prompt,
                    max_len,
                    allowed,
                    terminal,
                    prefix,
                    cum + lp,
                    out,
                );
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(
        scorer,
        prompt,
        max_len,
        &allowed,
        &terminal,
        &mut Vec::new(),
        0.0,
        &mut out,
    );
    out
}

pub fn rank(mut all: Vec<Complete>) -> Vec<Complete> {
    all.sort_by(|a, b| {
        b.score()
            .total_cmp(&a.score())
            .then_with(|| a.tokens.cmp(&b.tokens))
    });
    all
}

/// Score of a fixed output sequence recomputed step by step.
pub fn rescore<S: TokenScorer, A: Fn(&[TokenId]) -> Vec<TokenId>>(
    scorer: &S,
    prompt: &[TokenId],
    tokens: &[TokenId],
    ended: bool,
    allowed: A,
) -> Option<f64> {
    let mut cum = 0.0;
    let mut seq: Vec<TokenId> = tokens.to_vec();
    if ended {
        seq.push(END);
    }
    for i in 0..seq.len() {
        let cands = allowed(&tokens[..i.min(tokens.len())]);
        let slot = cands.iter().position(|&c| c == seq[i])?;
        let mut context = prompt.to_vec();
        context.extend_from_slice(&tokens[..i.min(tokens.len())]);
        cum += scorer.log_probs(&context, &cands).unwrap()[slot];
    }
    Some(cum / seq.len() as f64)
}

pub fn doc_constraint(docs: &[Vec<TokenId>]) -> DocSetConstraint {
    DocSetConstraint::new(
        docs.iter()
            .enumerate()
            .map(|(i, d)| (format!("d{i}"), Arc::new(BwtIndex::build(d).unwrap())))
            .collect(),
    )
    .unwrap()
}

pub fn title_search<S: TokenScorer>(
    scorer: &S,
    prompt: &[TokenId],
    trie: &TitleTrie,
    beam: usize,
) -> mindref::BeamOutput {
    let config = BeamConfig::new(beam, trie.max_depth() + 1).unwrap();
    constrained_beam_search(scorer, prompt, trie.cursor(), &config).unwrap()
}

pub fn prefix_search<S: TokenScorer>(
    scorer: &S,
    prompt: &[TokenId],
    docs: &[Vec<TokenId>],
    beam: usize,
    max_len: usize,
) -> mindref::BeamOutput {
    let config = BeamConfig::new(beam, max_len).unwrap();
    constrained_beam_search(scorer, prompt, doc_constraint(docs), &config).unwrap()
}

pub fn doc_terminal(docs: &[Vec<TokenId>]) -> impl Fn(&[TokenId]) -> bool + '_ {
    move |p: &[TokenId]| !p.is_empty() && docs.iter().any(|d| !naive_locate(d, p).is_empty())
}

/// The constraint state is only used to sanity-check the oracle itself.
pub fn constraint_agrees(docs: &[Vec<TokenId>], prefix: &[TokenId]) -> bool {
    let mut c = doc_constraint(docs);
    for &t in prefix {
        match c.step(t) {
            Ok(next) => c = next,
            Err(_) => return false,
        }
    }
    c.allowed() == brute_doc_allowed(docs, prefix)
}

/// Random documents and a prompt for a decoding trial.
pub fn random_docs(
    rng: &mut ChaCha8Rng,
    n: usize,
    alphabet: usize,
    len: usize,
) -> Vec<Vec<TokenId>> {
    (0..n)
        .map(|_| {
            let l = rng.random_range(1..=len);
            random_text(rng, alphabet, l)
        })
        .collect()
}
