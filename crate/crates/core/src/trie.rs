//! Prefix tree over title token sequences.
//!
//! Constrains the first decoding stage to titles that exist in the corpus.
//! A node that completes a title offers [`TokenId::END`] among its
//! continuations; a title that is a strict prefix of another title therefore
//! yields a node offering both.

use std::collections::HashMap;
use std::path::Path;

use crate::corpus::Corpus;
use crate::decode::Constraint;
use crate::error::{Error, Result};
use crate::persist::{self, ArtifactKind, Reader, Writer};
use crate::token::TokenId;

const SMALL_CHILDREN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Children {
    /// Sorted by token id.
    Small(Vec<(TokenId, u32)>),
    Large(HashMap<TokenId, u32>),
}

impl Default for Children {
    fn default() -> Self {
        Children::Small(Vec::new())
    }
}

impl Children {
    fn get(&self, token: TokenId) -> Option<u32> {
        match self {
            Children::Small(v) => v
                .binary_search_by_key(&token, |&(t, _)| t)
                .ok()
                .map(|i| v[i].1),
            Children::Large(m) => m.get(&token).copied(),
        }
    }

    fn insert(&mut self, token: TokenId, child: u32) {
        match self {
            Children::Small(v) => {
                if let Err(i) = v.binary_search_by_key(&token, |&(t, _)| t) {
                    v.insert(i, (token, child));
                }
                if v.len() > SMALL_CHILDREN {
                    *self = Children::Large(v.iter().copied().collect());
                }
            }
            Children::Large(m) => {
                m.entry(token).or_insert(child);
            }
        }
    }

    fn len(&self) -> usize {
        match self {
            Children::Small(v) => v.len(),
            Children::Large(m) => m.len(),
        }
    }

    fn sorted(&self) -> Vec<(TokenId, u32)> {
        match self {
            Children::Small(v) => v.clone(),
            Children::Large(m) => {
                let mut v: Vec<_> = m.iter().map(|(&t, &c)| (t, c)).collect();
                v.sort_unstable();
                v
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Node {
    children: Children,
    terminal: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TitleTrie {
    nodes: Vec<Node>,
    max_depth: usize,
    terminals: usize,
}

impl TitleTrie {
    const ROOT: u32 = 0;

    pub fn build(corpus: &Corpus) -> Result<Self> {
        Self::from_titles(
            corpus
                .documents()
                .iter()
                .map(|d| (d.title_tokens.clone(), d.doc_id.clone())),
        )
    }

    /// Builds from `(title tokens, doc_id)` pairs.
    pub fn from_titles<I>(titles: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<TokenId>, String)>,
    {
        let mut trie = TitleTrie {
            nodes: vec![Node::default()],
            max_depth: 0,
            terminals: 0,
        };
        for (tokens, doc_id) in titles {
            trie.insert(&tokens, doc_id)?;
        }
        if trie.terminals == 0 {
            return Err(Error::EmptyCorpus);
        }
        Ok(trie)
    }

    fn insert(&mut self, tokens: &[TokenId], doc_id: String) -> Result<()> {
        if tokens.is_empty() {
            return Err(Error::Format(format!(
                "document {doc_id:?} has an empty title"
            )));
        }
        if let Some(&t) = tokens
            .iter()
            .find(|t| **t == TokenId::END || **t == TokenId::SENTINEL)
        {
            return Err(Error::ReservedToken(t));
        }
        let mut node = Self::ROOT;
        for &token in tokens {
            node = match self.nodes[node as usize].children.get(token) {
                Some(child) => child,
                None => {
                    let child = self.nodes.len() as u32;
                    self.nodes.push(Node::default());
                    self.nodes[node as usize].children.insert(token, child);
                    child
                }
            };
        }
        let slot = &mut self.nodes[node as usize].terminal;
        if let Some(existing) = slot {
            return Err(Error::DuplicateTitle {
                title: format!("{tokens:?}"),
                first: existing.clone(),
                second: doc_id,
            });
        }
        *slot = Some(doc_id);
        self.terminals += 1;
        self.max_depth = self.max_depth.max(tokens.len());
        Ok(())
    }

    fn walk(&self, prefix: &[TokenId]) -> Option<u32> {
        prefix.iter().try_fold(Self::ROOT, |node, &t| {
            self.nodes[node as usize].children.get(t)
        })
    }

    /// Child labels of the node reached by `prefix`, ascending, plus
    /// [`TokenId::END`] when that node completes a title. Empty when the
    /// prefix leaves the trie.
    pub fn allowed_next(&self, prefix: &[TokenId]) -> Vec<TokenId> {
        self.walk(prefix)
            .map(|n| self.allowed_at(n))
            .unwrap_or_default()
    }

    fn allowed_at(&self, node: u32) -> Vec<TokenId> {
        let node = &self.nodes[node as usize];
        let mut out = Vec::with_capacity(node.children.len() + 1);
        if node.terminal.is_some() {
            out.push(TokenId::END);
        }
        out.extend(node.children.sorted().into_iter().map(|(t, _)| t));
        out
    }

    pub fn resolve_title(&self, tokens: &[TokenId]) -> Option<&str> {
        self.walk(tokens)
            .and_then(|n| self.nodes[n as usize].terminal.as_deref())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn terminal_count(&self) -> usize {
        self.terminals
    }

    /// Token length of the longest title.
    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn cursor(&self) -> TrieCursor<'_> {
        TrieCursor {
            trie: self,
            node: Some(Self::ROOT),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(ArtifactKind::Trie);
        w.len(self.nodes.len());
        for node in &self.nodes {
            match &node.terminal {
                Some(doc_id) => {
                    w.u8(1);
                    w.str(doc_id);
                }
                None => w.u8(0),
            }
            let children = node.children.sorted();
            w.len(children.len());
            for (t, c) in children {
                w.u32(t.0);
                w.u32(c);
            }
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, ArtifactKind::Trie)?;
        let n = r.len()?;
        let mut nodes = Vec::with_capacity(n);
        let mut terminals = 0;
        for _ in 0..n {
            let terminal = match r.u8()? {
                0 => None,
                1 => {
                    terminals += 1;
                    Some(r.str()?)
                }
                other => return Err(Error::Format(format!("bad terminal flag {other}"))),
            };
            let m = r.len()?;
            let mut children = Children::default();
            for _ in 0..m {
                let t = TokenId(r.u32()?);
                let c = r.u32()?;
                if c as usize >= n || c == 0 {
                    return Err(Error::Format(format!("child reference {c} out of range")));
                }
                children.insert(t, c);
            }
            nodes.push(Node { children, terminal });
        }
        r.finish()?;
        if nodes.is_empty() {
            return Err(Error::Format("trie has no root".into()));
        }
        let mut trie = TitleTrie {
            nodes,
            max_depth: 0,
            terminals,
        };
        trie.max_depth = trie.compute_depth()?;
        Ok(trie)
    }

    fn compute_depth(&self) -> Result<usize> {
        let mut depth = 0;
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![(Self::ROOT, 0usize)];
        while let Some((node, d)) = stack.pop() {
            if std::mem::replace(&mut seen[node as usize], true) {
                return Err(Error::Format("trie node reachable twice".into()));
            }
            if self.nodes[node as usize].terminal.is_some() {
                depth = depth.max(d);
            }
            for (_, c) in self.nodes[node as usize].children.sorted() {
                stack.push((c, d + 1));
            }
        }
        Ok(depth)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        persist::write_file(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&persist::read_file(path)?)
    }
}

/// Decoding state over a [`TitleTrie`]; `None` once the end marker was taken.
#[derive(Debug, Clone, Copy)]
pub struct TrieCursor<'a> {
    trie: &'a TitleTrie,
    node: Option<u32>,
}

impl Constraint for TrieCursor<'_> {
    fn allowed(&self) -> Vec<TokenId> {
        self.node
            .map(|n| self.trie.allowed_at(n))
            .unwrap_or_default()
    }

    fn step(&self, token: TokenId) -> Result<Self> {
        let node = self.node.ok_or(Error::InvalidStep(token))?;
        let next = if token == TokenId::END {
            if self.trie.nodes[node as usize].terminal.is_none() {
                return Err(Error::InvalidStep(token));
            }
            None
        } else {
            Some(
                self.trie.nodes[node as usize]
                    .children
                    .get(token)
                    .ok_or(Error::InvalidStep(token))?,
            )
        };
        Ok(TrieCursor {
            trie: self.trie,
            node: next,
        })
    }

    fn is_terminal(&self) -> bool {
        match self.node {
            Some(n) => self.trie.nodes[n as usize].terminal.is_some(),
            None => true,
        }
    }
}
