//! Correlation of model error with human controversy annotations.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::metrics::spearman;
use super::{EvalError, PredictionSet};
use crate::corpus::AnnotationRecord;

/// Allowed annotation values and the midpoint used for certainty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotationScale {
    pub values: Vec<f64>,
    pub midpoint: f64,
}

impl Default for AnnotationScale {
    fn default() -> Self {
        AnnotationScale {
            values: vec![1.0, 2.0, 3.0, 4.0],
            midpoint: 2.5,
        }
    }
}

/// Minimum annotations per page, and minimum joined pages.
pub const MIN_ANNOTATIONS: usize = 3;

/// Spearman ρ of per-document model error against mean annotation,
/// certainty (|mean − midpoint|) and disagreement (population std).
/// `None` marks an undefined correlation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub model: String,
    pub n: usize,
    pub mean_annotation: Option<f64>,
    pub certainty: Option<f64>,
    pub disagreement: Option<f64>,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn population_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

pub fn agreement_report(
    preds: &PredictionSet,
    annotations: &[AnnotationRecord],
    scale: &AnnotationScale,
) -> Result<AgreementReport, EvalError> {
    preds.validate()?;
    let mut by_id: HashMap<&str, &AnnotationRecord> = HashMap::new();
    for rec in annotations {
        if rec.scores.is_empty() {
            return Err(EvalError::Format(format!("annotation record {} has no scores", rec.id)));
        }
        if let Some(bad) = rec.scores.iter().find(|s| !scale.values.contains(s)) {
            return Err(EvalError::Format(format!(
                "annotation {bad} for {} is not on the scale",
                rec.id
            )));
        }
        if rec.scores.len() >= MIN_ANNOTATIONS {
            by_id.insert(rec.id.as_str(), rec);
        }
    }
    let (mut error, mut mean_score, mut certainty, mut disagreement) = (vec![], vec![], vec![], vec![]);
    for (i, id) in preds.ids.iter().enumerate() {
        let Some(rec) = by_id.get(id.as_str()) else { continue };
        let truth = if preds.actual[i] { 1.0 } else { 0.0 };
        error.push((preds.scores[i] - truth).abs());
        let m = mean(&rec.scores);
        mean_score.push(m);
        certainty.push((m - scale.midpoint).abs());
        disagreement.push(population_std(&rec.scores));
    }
    if error.len() < MIN_ANNOTATIONS {
        return Err(EvalError::Usage(format!(
            "only {} predicted documents have at least {MIN_ANNOTATIONS} annotations; need {MIN_ANNOTATIONS}",
            error.len()
        )));
    }
    Ok(AgreementReport {
        model: preds.model.clone(),
        n: error.len(),
        mean_annotation: spearman(&error, &mean_score)?,
        certainty: spearman(&error, &certainty)?,
        disagreement: spearman(&error, &disagreement)?,
    })
}
