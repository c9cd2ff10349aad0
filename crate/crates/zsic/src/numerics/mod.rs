//! Numerical substrate: dense matrices, a reverse-mode tape, LSTM cells,
//! the ridge closed-form solver and the Adam optimizer.

mod checkpoint;
mod lstm;
mod matrix;
mod ops;
mod optim;
mod tape;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use lstm::{bilstm_forward, bilstm_graph, lstm_vars, LstmParams, LstmRef, LstmVars};
pub use matrix::Matrix;
pub use ops::{entropy, euclidean, ridge_solve, softmax};
pub use optim::{adam_step, AdamState, ParamStore};
pub use tape::{Tape, TapeBinding, Var};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("linear solve failed on a near-singular system (condition estimate {cond_estimate:.3e})")]
    SingularSystem { cond_estimate: f64 },
    #[error("invalid argument: {0}")]
    InvalidArg(String),
    #[error("checkpoint i/o: {0}")]
    CheckpointIo(#[from] std::io::Error),
    #[error("checkpoint format: {0}")]
    CheckpointFormat(String),
}
