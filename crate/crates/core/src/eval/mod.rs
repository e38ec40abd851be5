//! Metrics, bootstrap significance and human-agreement analysis.

mod agreement;
mod bootstrap;
mod metrics;
mod report;

pub use agreement::{agreement_report, mean, population_std, AgreementReport, AnnotationScale, MIN_ANNOTATIONS};
pub use bootstrap::{
    bootstrap_ci, compare, metric_on, percentile, resample_indices, BootstrapConfig, Comparison, Interval, Metric,
};
pub use metrics::{auc, average_ranks, f1_from, pearson, prf, roc_points, spearman, Confusion, Prf};
pub use report::{evaluate, write_roc_csv, EvalReport, ModelEval};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("usage error: AUC needs both classes; no {0} examples present")]
    SingleClass(&'static str),
    #[error("undefined metric: {0}")]
    Undefined(String),
    #[error("format error: {0}")]
    Format(String),
}

/// Aligned per-document predictions of one model on one test set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub model: String,
    pub tag: String,
    pub ids: Vec<String>,
    pub scores: Vec<f64>,
    pub predicted: Vec<bool>,
    pub actual: Vec<bool>,
}

impl PredictionSet {
    pub fn new(
        model: &str,
        tag: &str,
        ids: Vec<String>,
        scores: Vec<f64>,
        predicted: Vec<bool>,
        actual: Vec<bool>,
    ) -> Self {
        PredictionSet {
            model: model.into(),
            tag: tag.into(),
            ids,
            scores,
            predicted,
            actual,
        }
    }

    /// Ids `0..n`, hard labels from `score ≥ threshold`.
    pub fn from_scores(model: &str, tag: &str, scores: &[f64], actual: &[bool], threshold: f64) -> Self {
        PredictionSet::new(
            model,
            tag,
            (0..scores.len()).map(|i| i.to_string()).collect(),
            scores.to_vec(),
            scores.iter().map(|&s| s >= threshold).collect(),
            actual.to_vec(),
        )
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let n = self.ids.len();
        if self.scores.len() != n || self.predicted.len() != n || self.actual.len() != n {
            return Err(EvalError::Usage(format!(
                "prediction set {} has misaligned arrays",
                self.model
            )));
        }
        if self.scores.iter().any(|s| !s.is_finite()) {
            return Err(EvalError::Usage(format!(
                "prediction set {} has non-finite scores",
                self.model
            )));
        }
        Ok(())
    }
}
