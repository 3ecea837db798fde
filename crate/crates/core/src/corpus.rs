//! KILT-style document ingestion.
//!
//! Each input line is a JSON object `{"id": .., "title": .., "text": [..]}`
//! whose `text` fragments are merged, in array order and joined by a single
//! space, into one document body.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persist::{self, ArtifactKind, Reader, Writer};
use crate::token::{Codec, TokenCodec, TokenId};

/// One input record prior to merging.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SourceRecord {
    pub id: String,
    pub title: String,
    pub text: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub title_tokens: Vec<TokenId>,
    pub body_tokens: Vec<TokenId>,
    pub body_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    title_index: HashMap<String, usize>,
    doc_index: HashMap<String, usize>,
    codec: TokenCodec,
    skipped_empty: usize,
}

impl Corpus {
    /// Reads newline-delimited JSON records. Blank lines are ignored.
    pub fn ingest_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let record: SourceRecord =
                serde_json::from_str(&line).map_err(|e| Error::Malformed {
                    line: line_no,
                    message: e.to_string(),
                })?;
            if record.title.trim().is_empty() {
                return Err(Error::Malformed {
                    line: line_no,
                    message: format!("record {:?} has an empty title", record.id),
                });
            }
            records.push(record);
        }
        Self::ingest(records)
    }

    pub fn ingest_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::ingest_reader(std::io::BufReader::new(file))
    }

    pub fn ingest<I>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = SourceRecord>,
    {
        Self::ingest_with(records, TokenCodec::new())
    }

    /// Ingests with a caller-supplied (unfrozen) codec, e.g. one that lowercases.
    pub fn ingest_with<I>(records: I, mut codec: TokenCodec) -> Result<Self>
    where
        I: IntoIterator<Item = SourceRecord>,
    {
        let mut documents: Vec<Document> = Vec::new();
        let mut title_index: HashMap<String, usize> = HashMap::new();
        let mut doc_index: HashMap<String, usize> = HashMap::new();
        let mut skipped_empty = 0;

        for record in records {
            let title = codec.normalize(&record.title);
            if title.is_empty() {
                return Err(Error::Format(format!(
                    "record {:?} has an empty title",
                    record.id
                )));
            }
            let body_text = codec.normalize(&record.text.join(" "));
            if body_text.is_empty() {
                warn!("skipping record {:?}: empty body", record.id);
                skipped_empty += 1;
                continue;
            }
            if let Some(&prev) = title_index.get(&title) {
                return Err(Error::DuplicateTitle {
                    title,
                    first: documents[prev].doc_id.clone(),
                    second: record.id,
                });
            }
            if doc_index.contains_key(&record.id) {
                return Err(Error::DuplicateDocId(record.id));
            }
            let title_tokens = codec.intern(&title)?;
            let body_tokens = codec.intern(&body_text)?;
            title_index.insert(title.clone(), documents.len());
            doc_index.insert(record.id.clone(), documents.len());
            documents.push(Document {
                doc_id: record.id,
                title,
                title_tokens,
                body_tokens,
                body_text,
            });
        }
        codec.freeze();
        Ok(Self {
            documents,
            title_index,
            doc_index,
            codec,
            skipped_empty,
        })
    }

    pub(crate) fn from_parts(documents: Vec<Document>, codec: TokenCodec) -> Result<Self> {
        let mut title_index = HashMap::new();
        let mut doc_index = HashMap::new();
        for (i, doc) in documents.iter().enumerate() {
            if let Some(prev) = title_index.insert(doc.title.clone(), i) {
                return Err(Error::DuplicateTitle {
                    title: doc.title.clone(),
                    first: documents[prev].doc_id.clone(),
                    second: doc.doc_id.clone(),
                });
            }
            if doc_index.insert(doc.doc_id.clone(), i).is_some() {
                return Err(Error::DuplicateDocId(doc.doc_id.clone()));
            }
            if let Some(&t) = doc.body_tokens.iter().find(|t| t.is_reserved()) {
                return Err(Error::ReservedToken(t));
            }
        }
        Ok(Self {
            documents,
            title_index,
            doc_index,
            codec,
            skipped_empty: 0,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn codec(&self) -> &TokenCodec {
        &self.codec
    }

    /// Records dropped during ingestion because their body was empty.
    pub fn skipped_empty(&self) -> usize {
        self.skipped_empty
    }

    pub fn by_title(&self, title: &str) -> Option<&Document> {
        self.title_index.get(title).map(|&i| &self.documents[i])
    }

    pub fn position(&self, doc_id: &str) -> Option<usize> {
        self.doc_index.get(doc_id).copied()
    }

    pub fn by_id(&self, doc_id: &str) -> Option<&Document> {
        self.position(doc_id).map(|i| &self.documents[i])
    }

    pub fn encode(&self, text: &str) -> Vec<TokenId> {
        self.codec.encode(text)
    }

    pub fn decode(&self, tokens: &[TokenId]) -> Result<String> {
        self.codec.decode(tokens)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(ArtifactKind::Corpus);
        w.u8(self.codec.lowercase() as u8);
        w.u8(self.codec.is_frozen() as u8);
        w.len(self.codec.surfaces().len());
        for s in self.codec.surfaces() {
            w.str(s);
        }
        w.len(self.documents.len());
        for doc in &self.documents {
            w.str(&doc.doc_id);
            w.str(&doc.title);
            w.tokens(&doc.title_tokens);
            w.tokens(&doc.body_tokens);
            w.str(&doc.body_text);
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, ArtifactKind::Corpus)?;
        let lowercase = r.u8()? != 0;
        let frozen = r.u8()? != 0;
        let n = r.len()?;
        let mut surfaces = Vec::with_capacity(n);
        for _ in 0..n {
            surfaces.push(r.str()?);
        }
        let codec = TokenCodec::from_parts(surfaces, lowercase, frozen)?;
        let n = r.len()?;
        let mut documents = Vec::with_capacity(n);
        for _ in 0..n {
            documents.push(Document {
                doc_id: r.str()?,
                title: r.str()?,
                title_tokens: r.tokens()?,
                body_tokens: r.tokens()?,
                body_text: r.str()?,
            });
        }
        r.finish()?;
        let size = codec.vocab_size();
        for doc in &documents {
            if let Some(t) = doc
                .title_tokens
                .iter()
                .chain(&doc.body_tokens)
                .find(|t| t.index() >= size)
            {
                return Err(Error::UnknownToken(*t));
            }
        }
        Self::from_parts(documents, codec)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        persist::write_file(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&persist::read_file(path)?)
    }
}
