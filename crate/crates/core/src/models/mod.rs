//! The four full-text classifiers (CNN, HAN, tf-idf margin, unigram LM),
//! their shared training loop, threshold calibration and persistence.

mod calibrate;
mod classifier;
pub mod cnn;
pub mod han;
pub mod lm;
pub mod tfidf;
mod train;

pub use calibrate::{calibrate_threshold, threshold_candidates, Calibration};
pub use classifier::{
    fit, Classifier, FitReport, ModelBody, ModelKind, ModelSpec, Prediction, ThresholdMode, EMPTY_SCORE,
};
pub use cnn::{cnn_input, cnn_logits, CnnConfig, CnnIds, CnnModel};
pub use han::{attend, han_forward, AttentionIds, HanConfig, HanIds, HanModel, HanOutput, HanPrediction};
pub use lm::{lm_train, LmConfig, LmModel};
pub use tfidf::{tfidf_train, TfIdfConfig, TfIdfModel};
pub use train::{train_neural, validation_metrics, EpochRecord, NeuralNet, TrainConfig, TrainLog};

use crate::tensor::{CheckpointError, TensorError};
use crate::text::TextError;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("training diverged in epoch {epoch}: {message}")]
    Diverged {
        epoch: usize,
        message: String,
        log: Box<TrainLog>,
    },
    #[error("numeric error: {0}")]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}
