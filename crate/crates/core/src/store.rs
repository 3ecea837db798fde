//! Built artifacts and their on-disk layout.
//!
//! ```text
//! <dir>/corpus.mref
//! <dir>/trie.mref
//! <dir>/index/<ordinal>.mref     one FM-index per document
//! <dir>/manifest.json            doc_id -> index file
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::fmindex::BwtIndex;
use crate::persist::{self, FORMAT_VERSION};
use crate::trie::TitleTrie;

pub const CORPUS_FILE: &str = "corpus.mref";
pub const TRIE_FILE: &str = "trie.mref";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const INDEX_DIR: &str = "index";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub doc_id: String,
    /// Relative to the artifact directory.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub documents: Vec<ManifestEntry>,
}

/// One reversed-text FM-index per corpus document, in corpus order.
#[derive(Debug, Clone)]
pub struct IndexStore {
    indexes: Vec<Arc<BwtIndex>>,
}

impl IndexStore {
    pub fn build(corpus: &Corpus) -> Result<Self> {
        let indexes = corpus
            .documents()
            .par_iter()
            .map(|d| BwtIndex::build(&d.body_tokens).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { indexes })
    }

    /// Index of the document at corpus position `pos`.
    pub fn at(&self, pos: usize) -> Option<&Arc<BwtIndex>> {
        self.indexes.get(pos)
    }

    pub fn get(&self, corpus: &Corpus, doc_id: &str) -> Result<Arc<BwtIndex>> {
        corpus
            .position(doc_id)
            .and_then(|p| self.indexes.get(p))
            .cloned()
            .ok_or_else(|| Error::MissingIndex(doc_id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.indexes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indexes.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Artifacts {
    pub corpus: Corpus,
    pub trie: TitleTrie,
    pub indexes: IndexStore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildSummary {
    pub documents: usize,
    pub vocab_size: usize,
    pub index_bytes: u64,
}

fn index_file_name(ordinal: usize) -> String {
    format!("{INDEX_DIR}/{ordinal:06}.mref")
}

impl Artifacts {
    pub fn build(corpus: Corpus) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let trie = TitleTrie::build(&corpus)?;
        let indexes = IndexStore::build(&corpus)?;
        Ok(Self {
            corpus,
            trie,
            indexes,
        })
    }

    pub fn save(&self, dir: &Path) -> Result<BuildSummary> {
        let index_dir = dir.join(INDEX_DIR);
        std::fs::create_dir_all(&index_dir).map_err(|e| Error::io(&index_dir, e))?;
        self.corpus.save(&dir.join(CORPUS_FILE))?;
        self.trie.save(&dir.join(TRIE_FILE))?;

        let mut entries = Vec::with_capacity(self.corpus.len());
        let mut index_bytes = 0u64;
        for (i, doc) in self.corpus.documents().iter().enumerate() {
            let rel = index_file_name(i);
            let bytes = self.indexes.indexes[i].to_bytes(&doc.doc_id);
            index_bytes += bytes.len() as u64;
            persist::write_file(&dir.join(&rel), &bytes)?;
            entries.push(ManifestEntry {
                doc_id: doc.doc_id.clone(),
                path: rel,
            });
        }
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            documents: entries,
        };
        let mut json =
            serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
        json.push('\n');
        persist::write_file(&dir.join(MANIFEST_FILE), json.as_bytes())?;

        Ok(BuildSummary {
            documents: self.corpus.len(),
            vocab_size: crate::token::Codec::vocab_size(self.corpus.codec()),
            index_bytes,
        })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let corpus = Corpus::load(&dir.join(CORPUS_FILE))?;
        let trie = TitleTrie::load(&dir.join(TRIE_FILE))?;
        let manifest_path = dir.join(MANIFEST_FILE);
        let raw = persist::read_file(&manifest_path)?;
        let manifest: Manifest =
            serde_json::from_slice(&raw).map_err(|e| Error::Format(format!("manifest: {e}")))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "manifest format version {} unsupported",
                manifest.format_version
            )));
        }
        let paths: std::collections::HashMap<&str, &str> = manifest
            .documents
            .iter()
            .map(|e| (e.doc_id.as_str(), e.path.as_str()))
            .collect();

        let indexes = corpus
            .documents()
            .par_iter()
            .map(|doc| {
                let rel = paths
                    .get(doc.doc_id.as_str())
                    .ok_or_else(|| Error::MissingIndex(doc.doc_id.clone()))?;
                let path: PathBuf = dir.join(rel);
                if !path.is_file() {
                    return Err(Error::MissingIndex(doc.doc_id.clone()));
                }
                let (stored_id, index) = BwtIndex::load(&path)?;
                if stored_id != doc.doc_id || index.text_len() != doc.body_tokens.len() {
                    return Err(Error::Format(format!(
                        "index file {} does not belong to document {:?}",
                        path.display(),
                        doc.doc_id
                    )));
                }
                Ok(Arc::new(index))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            corpus,
            trie,
            indexes: IndexStore { indexes },
        })
    }
}
