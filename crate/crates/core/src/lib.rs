//! Chunkless passage recall with a constrained language-model scorer.
//!
//! Titles are decoded under a prefix tree of corpus titles, a short passage
//! prefix is decoded under the FM-indexes of the recalled documents, and the
//! prefix is located with KMP to cut a fixed-length passage out of the
//! source document. See the `examples/` directory for one runnable program
//! per capability.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod decode;
pub mod error;
pub mod eval;
pub mod fmindex;
pub mod kmp;
pub mod persist;
pub mod pipeline;
pub mod prompt;
pub mod scorer;
pub mod store;
pub mod synthetic;
pub mod token;
pub mod trie;

pub use config::{ConfigOverrides, MindRefConfig};
pub use corpus::{Corpus, Document, SourceRecord};
pub use decode::{constrained_beam_search, BeamConfig, BeamOutput, Constraint, Scored};
pub use error::{Error, Result};
pub use eval::{ContextMetric, EvalItem, EvalReport};
pub use fmindex::{BwtIndex, DocSetConstraint, SearchRange};
pub use pipeline::{Pipeline, Recall, Reference, StageOneResult};
pub use scorer::{NGramScorer, RemoteScorer, TokenScorer};
pub use store::Artifacts;
pub use token::{Codec, PieceCodec, TokenCodec, TokenId};
pub use trie::TitleTrie;
