//! Point metrics: precision/recall/F1, ROC AUC, rank correlation.

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn of(predicted: &[bool], actual: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p, a) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn prf(&self) -> Prf {
        let predicted = self.tp + self.fp;
        let actual = self.tp + self.fn_;
        let precision = if predicted == 0 {
            0.0
        } else {
            self.tp as f64 / predicted as f64
        };
        let recall = if actual == 0 {
            0.0
        } else {
            self.tp as f64 / actual as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
            no_predicted_positives: predicted == 0,
            no_actual_positives: actual == 0,
            zero_f1: precision + recall == 0.0,
        }
    }
}

/// Precision, recall and F1 with flags for the degenerate conventions
/// (P = 0 without predicted positives, R = 0 without actual positives,
/// F1 = 0 when P + R = 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub no_predicted_positives: bool,
    pub no_actual_positives: bool,
    pub zero_f1: bool,
}

pub fn prf(predicted: &[bool], actual: &[bool]) -> Result<Prf, EvalError> {
    if predicted.len() != actual.len() {
        return Err(EvalError::Usage(format!(
            "{} predictions for {} labels",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.is_empty() {
        return Err(EvalError::Usage("no predictions".into()));
    }
    Ok(Confusion::of(predicted, actual).prf())
}

/// Harmonic mean of precision and recall.
pub fn f1_from(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Mann–Whitney AUC: the fraction of (positive, negative) pairs ranked
/// correctly, tied pairs counting one half. O(n log n) via tie groups.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::Usage(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(EvalError::Usage("scores must be finite".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 {
        return Err(EvalError::SingleClass("positive"));
    }
    if neg == 0 {
        return Err(EvalError::SingleClass("negative"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the count of correctly ordered pairs, to stay in integers.
    let mut doubled: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let group_pos = order[i..j].iter().filter(|&&k| labels[k]).count() as u128;
        let group_neg = (j - i) as u128 - group_pos;
        doubled += group_pos * (2 * neg_below + group_neg);
        neg_below += group_neg;
        i = j;
    }
    Ok(doubled as f64 / (2.0 * pos as f64 * neg as f64))
}

/// (fpr, tpr) points of the ROC curve, one per distinct threshold, starting at (0, 0).
pub fn roc_points(scores: &[f64], labels: &[bool]) -> Result<Vec<(f64, f64)>, EvalError> {
    auc(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    let neg = labels.len() as f64 - pos;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            j += 1;
        }
        points.push((fp / neg, tp / pos));
        i = j;
    }
    Ok(points)
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && x[order[j]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Pearson correlation; `None` when either input has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's ρ: Pearson correlation of average ranks. `Ok(None)` flags an
/// undefined correlation (zero variance).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::Usage(format!("lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(EvalError::Usage("spearman needs at least 3 pairs".into()));
    }
    Ok(pearson(&average_ranks(x), &average_ranks(y)))
}
