//! Corpus ingestion, label descriptions, pretrained embeddings, unigram
//! statistics, task splits and episode sampling.

mod corpus;
mod embeddings;
mod split;
mod stats;

pub use corpus::{load_corpus, tokenize, ClassId, Corpus, IntentLabel, LoadReport, Utterance};
pub use embeddings::{
    load_embeddings, EmbedLoadReport, EmbeddingTable, OovPolicy, Vocab,
};
pub use split::{sample_episode, split_generalized, split_standard, DataSplit, Episode};
pub use stats::{label_embedding, unigram_stats, UnigramStats};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{path}:{line}: unknown label name `{name}`")]
    UnknownLabel {
        path: String,
        line: usize,
        name: String,
    },
    #[error("invalid input: {0}")]
    Invalid(String),
}
