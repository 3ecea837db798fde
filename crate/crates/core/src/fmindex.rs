//! Per-document FM-indexes.
//!
//! Each [`BwtIndex`] is built over the *reversed* body so that extending the
//! generated prefix to the right is a native backward-search step. The
//! second decoding stage keeps one [`SearchRange`] per candidate document in
//! a [`DocSetConstraint`]; the allowed successors are the union over the
//! documents whose range is still nonempty.

use std::path::Path;
use std::sync::Arc;

use crate::decode::Constraint;
use crate::error::{Error, Result};
use crate::persist::{self, ArtifactKind, Reader, Writer};
use crate::token::TokenId;

/// Ranges at most this wide are enumerated by scanning the BWT directly.
pub const SCAN_THRESHOLD: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixArray(pub Vec<u32>);

impl SuffixArray {
    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_text(tokens: &[TokenId]) -> Result<()> {
    match tokens
        .iter()
        .find(|&&t| t == TokenId::SENTINEL || t == TokenId::END)
    {
        Some(&t) => Err(Error::ReservedToken(t)),
        None => Ok(()),
    }
}

/// Suffix array of `tokens` followed by the sentinel, by prefix doubling.
/// The result has `tokens.len() + 1` entries; entry 0 is always the
/// sentinel position.
pub fn build_suffix_array(tokens: &[TokenId]) -> Result<SuffixArray> {
    check_text(tokens)?;
    let n = tokens.len() + 1;
    if n > u32::MAX as usize {
        return Err(Error::Format("text too long for 32-bit positions".into()));
    }
    let mut rank: Vec<u64> = tokens
        .iter()
        .map(|t| t.0 as u64)
        .chain(std::iter::once(TokenId::SENTINEL.0 as u64))
        .collect();
    let mut sa: Vec<u32> = (0..n as u32).collect();
    let mut next = vec![0u64; n];
    let mut k = 1usize;
    loop {
        // second key 0 means "past the end", below every real rank
        let key = |i: u32| {
            let i = i as usize;
            (rank[i], if i + k < n { rank[i + k] + 1 } else { 0 })
        };
        sa.sort_unstable_by_key(|&i| key(i));
        next[sa[0] as usize] = 0;
        for w in 1..n {
            let bump = (key(sa[w - 1]) != key(sa[w])) as u64;
            next[sa[w] as usize] = next[sa[w - 1] as usize] + bump;
        }
        std::mem::swap(&mut rank, &mut next);
        if rank[sa[n - 1] as usize] as usize == n - 1 {
            break;
        }
        k *= 2;
    }
    Ok(SuffixArray(sa))
}

/// Last column of the sorted rotations: the symbol preceding each suffix,
/// with the sentinel standing in for the suffix that starts the text.
pub fn bwt_from_sa(tokens: &[TokenId], sa: &SuffixArray) -> Vec<TokenId> {
    sa.0.iter()
        .map(|&p| match p {
            0 => TokenId::SENTINEL,
            p => tokens[p as usize - 1],
        })
        .collect()
}

/// Half-open row interval `[lo, hi)` of the suffix array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SearchRange {
    pub lo: usize,
    pub hi: usize,
}

impl SearchRange {
    pub const EMPTY: SearchRange = SearchRange { lo: 0, hi: 0 };

    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    pub fn width(&self) -> usize {
        self.hi.saturating_sub(self.lo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Forward,
    Reversed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BwtIndex {
    bwt: Vec<TokenId>,
    sa: SuffixArray,
    /// Distinct symbols of the text, ascending; sentinel excluded.
    symbols: Vec<TokenId>,
    /// Rows whose suffix starts with a symbol smaller than `symbols[i]`.
    c_table: Vec<usize>,
    /// Sorted BWT positions of `symbols[i]`.
    occ: Vec<Vec<u32>>,
    text_len: usize,
    orientation: Orientation,
}

impl BwtIndex {
    /// Index over the reversed token sequence (the decoding orientation).
    pub fn build(tokens: &[TokenId]) -> Result<Self> {
        let reversed: Vec<TokenId> = tokens.iter().rev().copied().collect();
        Self::build_oriented(&reversed, Orientation::Reversed)
    }

    /// Index over the text as given.
    pub fn build_forward(tokens: &[TokenId]) -> Result<Self> {
        Self::build_oriented(tokens, Orientation::Forward)
    }

    fn build_oriented(indexed: &[TokenId], orientation: Orientation) -> Result<Self> {
        let sa = build_suffix_array(indexed)?;
        let bwt = bwt_from_sa(indexed, &sa);
        Ok(Self::from_bwt_and_sa(bwt, sa, orientation))
    }

    fn from_bwt_and_sa(bwt: Vec<TokenId>, sa: SuffixArray, orientation: Orientation) -> Self {
        let mut symbols: Vec<TokenId> = bwt
            .iter()
            .copied()
            .filter(|&t| t != TokenId::SENTINEL)
            .collect();
        symbols.sort_unstable();
        symbols.dedup();
        let mut occ = vec![Vec::new(); symbols.len()];
        for (i, &t) in bwt.iter().enumerate() {
            if t != TokenId::SENTINEL {
                let s = symbols.binary_search(&t).unwrap();
                occ[s].push(i as u32);
            }
        }
        // the sentinel row sorts first
        let mut c_table = Vec::with_capacity(symbols.len());
        let mut acc = 1;
        for list in &occ {
            c_table.push(acc);
            acc += list.len();
        }
        Self {
            text_len: bwt.len() - 1,
            bwt,
            sa,
            symbols,
            c_table,
            occ,
            orientation,
        }
    }

    pub fn bwt(&self) -> &[TokenId] {
        &self.bwt
    }

    /// First column: the BWT symbols in sorted order.
    pub fn f_column(&self) -> Vec<TokenId> {
        let mut f = self.bwt.clone();
        f.sort_unstable();
        f
    }

    pub fn suffix_array(&self) -> &SuffixArray {
        &self.sa
    }

    pub fn text_len(&self) -> usize {
        self.text_len
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Distinct symbols occurring in the text, ascending.
    pub fn symbols(&self) -> &[TokenId] {
        &self.symbols
    }

    pub fn full_range(&self) -> SearchRange {
        SearchRange {
            lo: 0,
            hi: self.bwt.len(),
        }
    }

    /// Occurrences of `symbol` in `bwt[..i]`.
    fn rank(&self, slot: usize, i: usize) -> usize {
        self.occ[slot].partition_point(|&p| (p as usize) < i)
    }

    pub fn count_of(&self, symbol: TokenId) -> usize {
        self.symbols
            .binary_search(&symbol)
            .map_or(0, |s| self.occ[s].len())
    }

    /// Rows whose suffix starts with `symbol` followed by the pattern of `range`.
    pub fn backward_extend(&self, range: SearchRange, symbol: TokenId) -> SearchRange {
        if range.is_empty() {
            return SearchRange::EMPTY;
        }
        let Ok(slot) = self.symbols.binary_search(&symbol) else {
            return SearchRange::EMPTY;
        };
        let base = self.c_table[slot];
        let lo = base + self.rank(slot, range.lo);
        let hi = base + self.rank(slot, range.hi);
        if lo >= hi {
            SearchRange::EMPTY
        } else {
            SearchRange { lo, hi }
        }
    }

    /// Range of rows prefixed by `pattern` read in index orientation from
    /// last symbol to first.
    pub fn backward_search(&self, pattern: &[TokenId]) -> SearchRange {
        pattern
            .iter()
            .rev()
            .fold(self.full_range(), |r, &s| self.backward_extend(r, s))
    }

    /// Range for a left-to-right `pattern` of the original text. Only
    /// meaningful for reversed indexes.
    pub fn forward_range(&self, pattern: &[TokenId]) -> SearchRange {
        pattern
            .iter()
            .fold(self.full_range(), |r, &s| self.backward_extend(r, s))
    }

    /// Number of occurrences of `pattern` (given in original text order).
    pub fn count(&self, pattern: &[TokenId]) -> usize {
        match self.orientation {
            Orientation::Reversed => self.forward_range(pattern).width(),
            Orientation::Forward => self.backward_search(pattern).width(),
        }
    }

    /// Distinct symbols that precede the suffixes of `range`, ascending.
    /// For a reversed index these are the tokens that follow the pattern in
    /// the original text.
    pub fn distinct_in(&self, range: SearchRange) -> Vec<TokenId> {
        if range.is_empty() {
            return Vec::new();
        }
        if range.width() <= SCAN_THRESHOLD {
            let mut out: Vec<TokenId> = self.bwt[range.lo..range.hi]
                .iter()
                .copied()
                .filter(|&t| t != TokenId::SENTINEL)
                .collect();
            out.sort_unstable();
            out.dedup();
            out
        } else {
            (0..self.symbols.len())
                .filter(|&s| self.rank(s, range.hi) > self.rank(s, range.lo))
                .map(|s| self.symbols[s])
                .collect()
        }
    }

    /// Sorted start positions of `pattern` in the original text.
    pub fn locate_all(&self, pattern: &[TokenId]) -> Vec<usize> {
        if pattern.is_empty() {
            return Vec::new();
        }
        let m = pattern.len();
        let mut out: Vec<usize> = match self.orientation {
            Orientation::Reversed => {
                let r = self.forward_range(pattern);
                self.sa.0[r.lo..r.hi]
                    .iter()
                    .map(|&p| self.text_len - p as usize - m)
                    .collect()
            }
            Orientation::Forward => {
                let r = self.backward_search(pattern);
                self.sa.0[r.lo..r.hi].iter().map(|&p| p as usize).collect()
            }
        };
        out.sort_unstable();
        out
    }

    pub fn to_bytes(&self, doc_id: &str) -> Vec<u8> {
        let mut w = Writer::new(ArtifactKind::Index);
        w.str(doc_id);
        w.u8(match self.orientation {
            Orientation::Forward => 0,
            Orientation::Reversed => 1,
        });
        w.len(self.text_len);
        w.tokens(&self.bwt);
        w.u32s(&self.sa.0);
        w.finish()
    }

    /// Returns the stored doc_id with the index.
    pub fn from_bytes(bytes: &[u8]) -> Result<(String, Self)> {
        let mut r = Reader::new(bytes, ArtifactKind::Index)?;
        let doc_id = r.str()?;
        let orientation = match r.u8()? {
            0 => Orientation::Forward,
            1 => Orientation::Reversed,
            other => return Err(Error::Format(format!("bad orientation {other}"))),
        };
        let text_len = r.len()?;
        let bwt = r.tokens()?;
        let sa = SuffixArray(r.u32s()?);
        r.finish()?;
        if bwt.len() != text_len + 1 || sa.len() != bwt.len() {
            return Err(Error::Format(format!(
                "index for {doc_id:?} has inconsistent lengths"
            )));
        }
        if bwt.iter().filter(|&&t| t == TokenId::SENTINEL).count() != 1
            || sa.0.iter().any(|&p| p as usize > text_len)
        {
            return Err(Error::Format(format!("index for {doc_id:?} is corrupt")));
        }
        Ok((doc_id, Self::from_bwt_and_sa(bwt, sa, orientation)))
    }

    pub fn save(&self, doc_id: &str, path: &Path) -> Result<()> {
        persist::write_file(path, &self.to_bytes(doc_id))
    }

    pub fn load(path: &Path) -> Result<(String, Self)> {
        Self::from_bytes(&persist::read_file(path)?)
    }
}

/// Stage-two constraint: the candidate documents in stage-one order and one
/// live range per document for the current prefix.
///
/// Once no document offers a successor but some document still contains the
/// prefix (it ends there), the only allowed token is [`TokenId::END`].
#[derive(Debug, Clone)]
pub struct DocSetConstraint {
    docs: Arc<[(String, Arc<BwtIndex>)]>,
    ranges: Vec<SearchRange>,
    depth: usize,
    ended: bool,
}

impl DocSetConstraint {
    pub fn new(docs: Vec<(String, Arc<BwtIndex>)>) -> Result<Self> {
        if let Some((id, _)) = docs
            .iter()
            .find(|(_, idx)| idx.orientation() != Orientation::Reversed)
        {
            return Err(Error::Config(format!(
                "index for {id:?} is not built over the reversed text"
            )));
        }
        let ranges = docs.iter().map(|(_, idx)| idx.full_range()).collect();
        Ok(Self {
            docs: docs.into(),
            ranges,
            depth: 0,
            ended: false,
        })
    }

    pub fn is_live(&self) -> bool {
        self.ranges.iter().any(|r| !r.is_empty())
    }

    /// Doc ids whose range is nonempty, in stage-one order.
    pub fn live_documents(&self) -> Vec<&str> {
        self.docs
            .iter()
            .zip(&self.ranges)
            .filter(|(_, r)| !r.is_empty())
            .map(|((id, _), _)| id.as_str())
            .collect()
    }

    pub fn ranges(&self) -> &[SearchRange] {
        &self.ranges
    }

    /// Union of the tokens that follow the current prefix in some live
    /// document, ascending.
    pub fn allowed_successors(&self) -> Vec<TokenId> {
        let mut out = Vec::new();
        for ((_, idx), &range) in self.docs.iter().zip(&self.ranges) {
            if !range.is_empty() {
                out.extend(idx.distinct_in(range));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Extends every live range by `symbol`. Dead documents stay dead.
    pub fn advance(&self, symbol: TokenId) -> Self {
        let ranges = self
            .docs
            .iter()
            .zip(&self.ranges)
            .map(|((_, idx), &r)| idx.backward_extend(r, symbol))
            .collect();
        Self {
            docs: Arc::clone(&self.docs),
            ranges,
            depth: self.depth + 1,
            ended: self.ended,
        }
    }
}

impl Constraint for DocSetConstraint {
    fn allowed(&self) -> Vec<TokenId> {
        if self.ended || !self.is_live() {
            return Vec::new();
        }
        let out = self.allowed_successors();
        if out.is_empty() && self.depth > 0 {
            vec![TokenId::END]
        } else {
            out
        }
    }

    fn step(&self, token: TokenId) -> Result<Self> {
        if self.ended {
            return Err(Error::InvalidStep(token));
        }
        if token == TokenId::END {
            if !self.allowed().contains(&TokenId::END) {
                return Err(Error::InvalidStep(token));
            }
            let mut next = self.clone();
            next.ended = true;
            return Ok(next);
        }
        let next = self.advance(token);
        if !next.is_live() {
            return Err(Error::InvalidStep(token));
        }
        Ok(next)
    }

    /// Every live prefix is itself a valid output.
    fn is_terminal(&self) -> bool {
        self.ended || (self.depth > 0 && self.is_live())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: &[u32]) -> Vec<TokenId> {
        v.iter().copied().map(TokenId).collect()
    }

    #[test]
    fn single_symbol() {
        let sa = build_suffix_array(&t(&[5])).unwrap();
        assert_eq!(sa.0, vec![1, 0]);
        assert_eq!(bwt_from_sa(&t(&[5]), &sa), t(&[5, 1]));
    }

    #[test]
    fn sentinel_in_input_rejected() {
        assert!(matches!(
            build_suffix_array(&t(&[3, 1, 4])),
            Err(Error::ReservedToken(TokenId(1)))
        ));
        assert!(BwtIndex::build(&t(&[0])).is_err());
    }

    #[test]
    fn absent_symbol_gives_empty_range() {
        let idx = BwtIndex::build(&t(&[3, 4, 5])).unwrap();
        assert!(idx.backward_extend(idx.full_range(), TokenId(9)).is_empty());
        assert!(idx
            .backward_extend(SearchRange::EMPTY, TokenId(3))
            .is_empty());
    }

    #[test]
    fn locate_by_inspection() {
        // x x a b c x x a b c
        let text = t(&[9, 9, 3, 4, 5, 9, 9, 3, 4, 5]);
        let idx = BwtIndex::build(&text).unwrap();
        assert_eq!(idx.locate_all(&t(&[3, 4, 5])), vec![2, 7]);
        assert_eq!(idx.locate_all(&text), vec![0]);
        assert_eq!(idx.locate_all(&t(&[5, 3])), Vec::<usize>::new());
        assert_eq!(idx.count(&t(&[9, 9])), 2);
        let fwd = BwtIndex::build_forward(&text).unwrap();
        assert_eq!(fwd.locate_all(&t(&[3, 4, 5])), vec![2, 7]);
    }

    #[test]
    fn wide_ranges_use_symbol_probes() {
        let text: Vec<TokenId> = (0..2000u32).map(|i| TokenId(3 + (i * 7919) % 37)).collect();
        let idx = BwtIndex::build(&text).unwrap();
        let full = idx.full_range();
        assert!(full.width() > SCAN_THRESHOLD);
        let mut expected: Vec<TokenId> = text.clone();
        expected.sort_unstable();
        expected.dedup();
        assert_eq!(idx.distinct_in(full), expected);
    }

    #[test]
    fn doc_set_ends_at_document_tail() {
        let idx = Arc::new(BwtIndex::build(&t(&[3, 4])).unwrap());
        let c = DocSetConstraint::new(vec![("d".into(), idx)]).unwrap();
        assert_eq!(c.allowed(), t(&[3, 4]));
        let c = c.step(TokenId(4)).unwrap();
        assert_eq!(c.allowed(), t(&[0]));
        assert!(c.is_terminal());
        let c = c.step(TokenId::END).unwrap();
        assert!(c.allowed().is_empty());
    }

    #[test]
    fn advancing_dead_stays_dead() {
        let idx = Arc::new(BwtIndex::build(&t(&[3, 4, 5])).unwrap());
        let c = DocSetConstraint::new(vec![("d".into(), idx)]).unwrap();
        let dead = c.advance(TokenId(5)).advance(TokenId(3));
        assert!(!dead.is_live());
        assert!(!dead.advance(TokenId(4)).is_live());
        assert!(dead.allowed().is_empty());
    }

    #[test]
    fn forward_index_rejected_by_constraint() {
        let idx = Arc::new(BwtIndex::build_forward(&t(&[3])).unwrap());
        assert!(DocSetConstraint::new(vec![("d".into(), idx)]).is_err());
    }

    #[test]
    fn index_bytes_round_trip() {
        let idx = BwtIndex::build(&t(&[3, 4, 3, 5])).unwrap();
        let bytes = idx.to_bytes("doc");
        let (id, back) = BwtIndex::from_bytes(&bytes).unwrap();
        assert_eq!(id, "doc");
        assert_eq!(back, idx);
    }
}
