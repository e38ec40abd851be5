//! Multi-model evaluation report.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_ci, compare, BootstrapConfig, Interval, Metric};
use super::metrics::{auc, prf, roc_points, Prf};
use super::{EvalError, PredictionSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelEval {
    pub model: String,
    pub n: usize,
    pub prf: Prf,
    /// `None` when the test set holds a single class.
    pub auc: Option<f64>,
    pub intervals: BTreeMap<Metric, Interval>,
}

impl ModelEval {
    pub fn value(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Precision => Some(self.prf.precision),
            Metric::Recall => Some(self.prf.recall),
            Metric::F1 => Some(self.prf.f1),
            Metric::Auc => self.auc,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub seed: u64,
    pub resamples: usize,
    pub level: f64,
    pub workers: usize,
    pub models: Vec<ModelEval>,
    /// Per metric, symmetric matrix: entry (i, j) is true when models i and j
    /// differ significantly under the paired bootstrap.
    pub significance: BTreeMap<Metric, Vec<Vec<bool>>>,
}

/// Point metrics, bootstrap intervals and pairwise significance for models
/// scored on the same documents.
pub fn evaluate(sets: &[PredictionSet], config: &BootstrapConfig) -> Result<EvalReport, EvalError> {
    let Some(first) = sets.first() else {
        return Err(EvalError::Usage("no prediction sets to evaluate".into()));
    };
    let mut models = Vec::with_capacity(sets.len());
    for set in sets {
        set.validate()?;
        if set.ids != first.ids {
            return Err(EvalError::Usage(format!(
                "{} and {} cover different documents",
                first.model, set.model
            )));
        }
        let point = prf(&set.predicted, &set.actual)?;
        let area = auc(&set.scores, &set.actual).ok();
        let mut intervals = BTreeMap::new();
        for metric in Metric::ALL {
            if metric == Metric::Auc && area.is_none() {
                continue;
            }
            intervals.insert(metric, bootstrap_ci(set, metric, config)?);
        }
        models.push(ModelEval {
            model: set.model.clone(),
            n: set.len(),
            prf: point,
            auc: area,
            intervals,
        });
    }
    let mut significance = BTreeMap::new();
    for metric in Metric::ALL {
        let mut matrix = vec![vec![false; sets.len()]; sets.len()];
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                let sig = match compare(&sets[i], &sets[j], metric, config) {
                    Ok(c) => c.significant,
                    Err(EvalError::Undefined(_)) => false,
                    Err(e) => return Err(e),
                };
                matrix[i][j] = sig;
                matrix[j][i] = sig;
            }
        }
        significance.insert(metric, matrix);
    }
    Ok(EvalReport {
        n: first.len(),
        seed: config.seed,
        resamples: config.resamples,
        level: config.level,
        workers: config.workers,
        models,
        significance,
    })
}

/// Writes `fpr,tpr` rows with a header line.
pub fn write_roc_csv<W: Write>(mut w: W, set: &PredictionSet) -> Result<(), EvalError> {
    let io = |e: std::io::Error| EvalError::Format(e.to_string());
    writeln!(w, "fpr,tpr").map_err(io)?;
    for (fpr, tpr) in roc_points(&set.scores, &set.actual)? {
        writeln!(w, "{fpr},{tpr}").map_err(io)?;
    }
    Ok(())
}
