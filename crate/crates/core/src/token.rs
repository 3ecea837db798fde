//! Token alphabet and the text codecs that produce it.
//!
//! Ids `0`, `1` and `2` are reserved: `0` ends a generated sequence, `1` is
//! the index sentinel (lexicographically smallest symbol) and `2` stands in
//! for surface forms a frozen codec has never seen.
//!
//! The reference [`TokenCodec`] is word level: a token is either a maximal
//! run of alphanumeric characters or a single other non-space character. A
//! token that directly follows the previous one without whitespace is stored
//! with a [`GLUE`] prefix so decoding restores the original spacing.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    pub const END: TokenId = TokenId(0);
    pub const SENTINEL: TokenId = TokenId(1);
    pub const UNKNOWN: TokenId = TokenId(2);
    pub const FIRST_FREE: u32 = 3;

    pub fn is_reserved(self) -> bool {
        self.0 < Self::FIRST_FREE
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for TokenId {
    fn from(v: u32) -> Self {
        TokenId(v)
    }
}

/// Marks a piece that attaches to the previous piece without a space.
pub const GLUE: &str = "##";

const UNKNOWN_SURFACE: &str = "<unk>";

/// Anything that turns text into token ids and back.
pub trait Codec {
    fn encode(&self, text: &str) -> Vec<TokenId>;
    fn decode(&self, tokens: &[TokenId]) -> Result<String>;
    fn token_id(&self, surface: &str) -> Option<TokenId>;
    fn surface(&self, id: TokenId) -> Option<&str>;
    fn vocab_size(&self) -> usize;

    /// Hex SHA-256 over the id-ordered surfaces; two sides of a remote
    /// scorer must agree on it.
    fn vocab_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for id in TokenId::FIRST_FREE..self.vocab_size() as u32 {
            if let Some(s) = self.surface(TokenId(id)) {
                hasher.update(s.as_bytes());
            }
            hasher.update([0u8]);
        }
        hex(&hasher.finalize())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// NFC, collapse whitespace runs to one space, trim. Case is preserved
/// unless `lowercase` is set.
pub fn normalize(text: &str, lowercase: bool) -> String {
    let nfc: String = text.nfc().collect();
    let mut out = String::with_capacity(nfc.len());
    for word in nfc.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        if lowercase {
            out.push_str(&word.to_lowercase());
        } else {
            out.push_str(word);
        }
    }
    out
}

/// Splits normalized text into surface pieces, glued pieces prefixed.
fn segment(text: &str) -> Vec<String> {
    let mut pieces = Vec::new();
    let mut current = String::new();
    let mut glued = false;
    let mut after_space = true;

    let flush = |pieces: &mut Vec<String>, current: &mut String, glued: bool| {
        if !current.is_empty() {
            if glued {
                pieces.push(format!("{GLUE}{current}"));
            } else {
                pieces.push(std::mem::take(current));
            }
            current.clear();
        }
    };

    for ch in text.chars() {
        if ch.is_whitespace() {
            flush(&mut pieces, &mut current, glued);
            after_space = true;
        } else if ch.is_alphanumeric() {
            if current.is_empty() {
                glued = !after_space && !pieces.is_empty();
            }
            current.push(ch);
            after_space = false;
        } else {
            flush(&mut pieces, &mut current, glued);
            let single = ch.to_string();
            let is_glued = !after_space && !pieces.is_empty();
            if is_glued {
                pieces.push(format!("{GLUE}{single}"));
            } else {
                pieces.push(single);
            }
            after_space = false;
        }
    }
    flush(&mut pieces, &mut current, glued);
    pieces
}

/// Joins surface pieces, attaching glued ones to their predecessor.
fn join_pieces<'a>(pieces: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for piece in pieces {
        match piece.strip_prefix(GLUE) {
            Some(rest) if !rest.is_empty() => out.push_str(rest),
            _ => {
                if !out.is_empty() {
                    out.push(' ');
                }
                out.push_str(piece);
            }
        }
    }
    out
}

fn check_decodable(id: TokenId, size: usize) -> Result<()> {
    if id == TokenId::END || id == TokenId::SENTINEL {
        return Err(Error::ReservedToken(id));
    }
    if id.index() >= size {
        return Err(Error::UnknownToken(id));
    }
    Ok(())
}

/// Word-level reference codec. Grows through [`TokenCodec::intern`] until
/// frozen; [`Codec::encode`] never grows it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenCodec {
    surfaces: Vec<String>,
    ids: HashMap<String, TokenId>,
    lowercase: bool,
    frozen: bool,
}

impl TokenCodec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_lowercase(mut self, lowercase: bool) -> Self {
        self.lowercase = lowercase;
        self
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    /// Rebuilds a codec from persisted surfaces (ids `3..`).
    pub(crate) fn from_parts(surfaces: Vec<String>, lowercase: bool, frozen: bool) -> Result<Self> {
        let mut ids = HashMap::with_capacity(surfaces.len());
        for (i, s) in surfaces.iter().enumerate() {
            let id = TokenId(TokenId::FIRST_FREE + i as u32);
            if ids.insert(s.clone(), id).is_some() {
                return Err(Error::Format(format!(
                    "duplicate surface {s:?} in vocabulary"
                )));
            }
        }
        Ok(Self {
            surfaces,
            ids,
            lowercase,
            frozen,
        })
    }

    pub(crate) fn surfaces(&self) -> &[String] {
        &self.surfaces
    }

    /// Encodes, adding unseen surfaces to the vocabulary.
    pub fn intern(&mut self, text: &str) -> Result<Vec<TokenId>> {
        if self.frozen {
            return Err(Error::FrozenCodec);
        }
        let normalized = normalize(text, self.lowercase);
        Ok(segment(&normalized)
            .into_iter()
            .map(|piece| self.intern_piece(piece))
            .collect())
    }

    fn intern_piece(&mut self, piece: String) -> TokenId {
        if let Some(&id) = self.ids.get(&piece) {
            return id;
        }
        let id = TokenId(TokenId::FIRST_FREE + self.surfaces.len() as u32);
        self.ids.insert(piece.clone(), id);
        self.surfaces.push(piece);
        id
    }

    pub fn normalize(&self, text: &str) -> String {
        normalize(text, self.lowercase)
    }
}

impl Codec for TokenCodec {
    fn encode(&self, text: &str) -> Vec<TokenId> {
        let normalized = normalize(text, self.lowercase);
        segment(&normalized)
            .iter()
            .map(|piece| self.ids.get(piece).copied().unwrap_or(TokenId::UNKNOWN))
            .collect()
    }

    fn decode(&self, tokens: &[TokenId]) -> Result<String> {
        let size = self.vocab_size();
        let mut pieces = Vec::with_capacity(tokens.len());
        for &id in tokens {
            check_decodable(id, size)?;
            pieces.push(self.surface(id).unwrap_or(UNKNOWN_SURFACE));
        }
        Ok(join_pieces(pieces))
    }

    fn token_id(&self, surface: &str) -> Option<TokenId> {
        self.ids.get(surface).copied()
    }

    fn surface(&self, id: TokenId) -> Option<&str> {
        if id == TokenId::UNKNOWN {
            return Some(UNKNOWN_SURFACE);
        }
        id.0.checked_sub(TokenId::FIRST_FREE)
            .and_then(|i| self.surfaces.get(i as usize))
            .map(String::as_str)
    }

    fn vocab_size(&self) -> usize {
        TokenId::FIRST_FREE as usize + self.surfaces.len()
    }
}

/// Subword codec over a fixed piece inventory. Each word is split by greedy
/// longest match; pieces after the first are looked up with the glue prefix.
/// A word that cannot be covered maps to [`TokenId::UNKNOWN`].
#[derive(Debug, Clone)]
pub struct PieceCodec {
    surfaces: Vec<String>,
    ids: HashMap<String, TokenId>,
}

impl PieceCodec {
    pub fn new<I, S>(pieces: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut surfaces = Vec::new();
        let mut ids = HashMap::new();
        for piece in pieces {
            let piece = piece.into();
            if ids.contains_key(&piece) {
                continue;
            }
            let id = TokenId(TokenId::FIRST_FREE + surfaces.len() as u32);
            ids.insert(piece.clone(), id);
            surfaces.push(piece);
        }
        Self { surfaces, ids }
    }

    fn split_word(&self, word: &str, glued_start: bool, out: &mut Vec<TokenId>) {
        let chars: Vec<(usize, char)> = word.char_indices().collect();
        let mut start = 0;
        let mut first = true;
        while start < chars.len() {
            let from = chars[start].0;
            let mut matched = None;
            for end in (start + 1..=chars.len()).rev() {
                let to = chars.get(end).map_or(word.len(), |c| c.0);
                let glue = !first || glued_start;
                let key = if glue {
                    format!("{GLUE}{}", &word[from..to])
                } else {
                    word[from..to].to_string()
                };
                if let Some(&id) = self.ids.get(&key) {
                    matched = Some((id, end));
                    break;
                }
            }
            match matched {
                Some((id, end)) => {
                    out.push(id);
                    start = end;
                    first = false;
                }
                None => {
                    out.push(TokenId::UNKNOWN);
                    return;
                }
            }
        }
    }
}

impl Codec for PieceCodec {
    fn encode(&self, text: &str) -> Vec<TokenId> {
        let mut out = Vec::new();
        for piece in segment(&normalize(text, false)) {
            match piece.strip_prefix(GLUE) {
                Some(rest) => self.split_word(rest, true, &mut out),
                None => self.split_word(&piece, false, &mut out),
            }
        }
        out
    }

    fn decode(&self, tokens: &[TokenId]) -> Result<String> {
        let size = self.vocab_size();
        let mut pieces = Vec::with_capacity(tokens.len());
        for &id in tokens {
            check_decodable(id, size)?;
            pieces.push(self.surface(id).unwrap_or(UNKNOWN_SURFACE));
        }
        Ok(join_pieces(pieces))
    }

    fn token_id(&self, surface: &str) -> Option<TokenId> {
        self.ids.get(surface).copied()
    }

    fn surface(&self, id: TokenId) -> Option<&str> {
        if id == TokenId::UNKNOWN {
            return Some(UNKNOWN_SURFACE);
        }
        id.0.checked_sub(TokenId::FIRST_FREE)
            .and_then(|i| self.surfaces.get(i as usize))
            .map(String::as_str)
    }

    fn vocab_size(&self) -> usize {
        TokenId::FIRST_FREE as usize + self.surfaces.len()
    }
}
