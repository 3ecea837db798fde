//! Versioned binary artifact format shared by corpus, trie and index files.
//!
//! Layout: magic `MREF`, format version (u32 LE), artifact kind (u32 LE),
//! then the payload. Every variable-length field carries a u64 LE length
//! prefix. Token ids are written as u32 LE.

use std::path::Path;

use crate::error::{Error, Result};
use crate::token::TokenId;

pub const MAGIC: &[u8; 4] = b"MREF";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum ArtifactKind {
    Corpus = 1,
    Trie = 2,
    Index = 3,
}

impl ArtifactKind {
    fn from_u32(v: u32) -> Option<Self> {
        match v {
            1 => Some(Self::Corpus),
            2 => Some(Self::Trie),
            3 => Some(Self::Index),
            _ => None,
        }
    }
}

pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(kind: ArtifactKind) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.extend_from_slice(&(kind as u32).to_le_bytes());
        Self { buf }
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn len(&mut self, n: usize) {
        self.u64(n as u64);
    }

    pub fn str(&mut self, s: &str) {
        self.len(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub fn tokens(&mut self, tokens: &[TokenId]) {
        self.len(tokens.len());
        for t in tokens {
            self.u32(t.0);
        }
    }

    pub fn u32s(&mut self, values: &[u32]) {
        self.len(values.len());
        for &v in values {
            self.u32(v);
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8], expected: ArtifactKind) -> Result<Self> {
        if buf.len() < 12 || &buf[..4] != MAGIC {
            return Err(Error::Format("missing MREF header".into()));
        }
        let mut r = Self { buf, pos: 4 };
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format version {version}"
            )));
        }
        let kind = r.u32()?;
        match ArtifactKind::from_u32(kind) {
            Some(k) if k == expected => Ok(r),
            _ => Err(Error::Format(format!(
                "expected artifact kind {:?}, found {kind}",
                expected
            ))),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format("truncated artifact".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        let remaining = (self.buf.len() - self.pos) as u64;
        // any element is at least one byte wide
        if n > remaining {
            return Err(Error::Format(format!(
                "length {n} exceeds remaining {remaining} bytes"
            )));
        }
        Ok(n as usize)
    }

    pub fn str(&mut self) -> Result<String> {
        let n = self.len()?;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn tokens(&mut self) -> Result<Vec<TokenId>> {
        Ok(self.u32s()?.into_iter().map(TokenId).collect())
    }

    pub fn u32s(&mut self) -> Result<Vec<u32>> {
        let n = self.len()?;
        let bytes = self.take(
            n.checked_mul(4)
                .ok_or_else(|| Error::Format("overflow".into()))?,
        )?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}
