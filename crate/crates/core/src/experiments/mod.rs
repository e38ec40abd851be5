//! Experiment orchestration: dataset handles, the five robustness and
//! comparison experiments, synthetic corpora, reproducible reports and
//! table renderings.

mod data;
mod report;
mod run;
pub mod synthetic;
pub mod tables;

pub use data::{Dataset, DatasetFingerprint, TestSet, TrainingData};
pub use report::{
    load_report, run_experiment, DataRef, ExperimentKind, ExperimentReport, ExperimentResult, ExperimentSpec, VERSION,
};
pub use run::{
    derive_seed, run_agreement, topic_folds, AgreementResult, AveragedRow, ComparisonResult, DeltaRow, DomainResult,
    FitSummary, FoldPlan, Runner, TemporalResult, TopicFold, TopicResult,
};

use crate::corpus::CorpusError;
use crate::eval::EvalError;
use crate::models::ModelError;
use crate::tensor::CheckpointError;
use crate::text::TextError;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Process exit code of an error: 2 usage, 3 data or format, 4 numeric.
pub fn exit_code(err: &ExperimentError) -> i32 {
    match err {
        ExperimentError::Usage(_) => 2,
        ExperimentError::Format(_) | ExperimentError::Io(_) => 3,
        ExperimentError::Corpus(e) => match e {
            CorpusError::Usage(_) => 2,
            _ => 3,
        },
        ExperimentError::Model(e) => model_exit_code(e),
        ExperimentError::Eval(e) => match e {
            EvalError::Usage(_) | EvalError::SingleClass(_) => 2,
            EvalError::Format(_) => 3,
            EvalError::Undefined(_) => 4,
        },
    }
}

pub fn model_exit_code(err: &ModelError) -> i32 {
    match err {
        ModelError::Usage(_) => 2,
        ModelError::Format(_) | ModelError::Io(_) | ModelError::Checkpoint(_) => 3,
        ModelError::Text(TextError::Usage(_)) => 2,
        ModelError::Text(_) => 3,
        ModelError::Tensor(_) | ModelError::Diverged { .. } => 4,
    }
}

impl From<TextError> for ExperimentError {
    fn from(e: TextError) -> Self {
        ExperimentError::Model(ModelError::Text(e))
    }
}

impl From<CheckpointError> for ExperimentError {
    fn from(e: CheckpointError) -> Self {
        ExperimentError::Model(ModelError::Checkpoint(e))
    }
}
