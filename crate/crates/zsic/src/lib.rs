//! Zero-shot intent classification.
//!
//! Utterances are encoded by a BiLSTM and pooled with a mixture of two
//! attention mechanisms: a distributional-signature attention driven by
//! corpus statistics and a ridge classifier over label descriptions, and
//! an MLP attention over the hidden states. A projection network maps
//! label-description embeddings into the utterance space; training runs
//! in episodes that simulate zero-shot tasks on the seen classes
//! (meta-training on meta-seen classes, meta-adapting the projection on
//! meta-unseen classes). Prediction assigns the nearest projected label,
//! with a confidence threshold falling back to unseen classes in the
//! generalized task.

pub mod attention;
pub mod data;
pub mod harness;
pub mod metalearn;
pub mod numerics;

pub use attention::{Ablations, Dims};
pub use data::{Corpus, DataSplit, EmbeddingTable, Episode, IntentLabel, Utterance};
pub use harness::{ExperimentConfig, MetricsReport, Task};
pub use metalearn::{Model, TrainConfig};
pub use numerics::Matrix;
