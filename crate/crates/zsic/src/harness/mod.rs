//! Experiment harness: metrics, synthetic corpora, configuration,
//! reports, gradient checking and the CLI.

pub mod cli;
mod config;
mod experiment;
mod gradcheck;
mod metrics;
mod report;
mod synth;

pub use config::{build_config, ConfigOverrides, DimOverrides, ExperimentConfig, Task};
pub use experiment::{
    evaluate, prepare_data, resolve_dims, run_eval, run_experiment, run_train, train_model,
    ExperimentOutcome, PreparedData,
};
pub use gradcheck::{run_gradcheck, GroupCheck, GRADCHECK_TOLERANCE};
pub use metrics::{
    partition_report, weighted_accuracy, weighted_f1, ClassReport, MetricsReport, PartitionReport,
};
pub use report::{emit_csv, parse_csv, render_table};
pub use synth::{synth_corpus, write_synth_files, DirectionScheme, SynthDesign};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error(transparent)]
    Meta(#[from] crate::metalearn::MetaError),
    #[error(transparent)]
    Numerics(#[from] crate::numerics::NumericsError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// 1 for usage problems, 2 for data/runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 1,
            _ => 2,
        }
    }
}
