//! Decision-threshold selection on validation scores.

use serde::{Deserialize, Serialize};

use crate::eval::Confusion;

use super::ModelError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub threshold: f64,
    pub f1: f64,
}

/// Candidate thresholds: one below the lowest score, midpoints between
/// consecutive distinct scores, one above the highest.
pub fn threshold_candidates(scores: &[f64]) -> Vec<f64> {
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut out = Vec::with_capacity(distinct.len() + 1);
    if let (Some(&lo), Some(&hi)) = (distinct.first(), distinct.last()) {
        out.push(lo - 1.0);
        for w in distinct.windows(2) {
            out.push(w[0] + (w[1] - w[0]) / 2.0);
        }
        out.push(hi + 1.0);
    }
    out
}

/// Threshold maximizing F1 of `score ≥ threshold`; ties go to the lowest.
pub fn calibrate_threshold(scores: &[f64], labels: &[bool]) -> Result<Calibration, ModelError> {
    if scores.len() != labels.len() {
        return Err(ModelError::Usage("scores and labels differ in length".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(ModelError::Usage("validation scores must be finite".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(ModelError::Usage(
            "threshold calibration needs both classes in validation".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let candidates = threshold_candidates(scores);
    // Sweep upward: everything at or above the candidate is predicted positive.
    let mut c = Confusion {
        tp: positives,
        fp: labels.len() - positives,
        tn: 0,
        fn_: 0,
    };
    let mut k = 0;
    let mut best = Calibration {
        threshold: candidates[0],
        f1: c.prf().f1,
    };
    for &t in &candidates[1..] {
        while k < order.len() && scores[order[k]] < t {
            if labels[order[k]] {
                c.tp -= 1;
                c.fn_ += 1;
            } else {
                c.fp -= 1;
                c.tn += 1;
            }
            k += 1;
        }
        let f1 = c.prf().f1;
        if f1 > best.f1 {
            best = Calibration { threshold: t, f1 };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_scores_pick_the_gap() {
        let c = calibrate_threshold(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap();
        assert_eq!(c.threshold, 0.5);
        assert_eq!(c.f1, 1.0);
    }

    #[test]
    fn equal_scores() {
        let c = calibrate_threshold(&[0.4; 4], &[true, false, false, false]).unwrap();
        assert_eq!(c.threshold, 0.4 - 1.0);
        assert!((c.f1 - 0.4).abs() < 1e-12);
    }

    #[test]
    fn single_class_rejected() {
        assert!(calibrate_threshold(&[0.1, 0.2], &[true, true]).is_err());
    }
}
