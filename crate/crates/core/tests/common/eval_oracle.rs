//! Brute-force reference implementations of the evaluation metrics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// (precision, recall, f1) by enumerating the confusion table cell by cell.
pub fn prf(predicted: &[bool], actual: &[bool]) -> (f64, f64, f64) {
    let mut cells = [[0usize; 2]; 2];
    for (&p, &a) in predicted.iter().zip(actual) {
        cells[usize::from(p)][usize::from(a)] += 1;
    }
    let tp = cells[1][1];
    let fp = cells[1][0];
    let fn_ = cells[0][1];
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

/// Fraction of (positive, negative) pairs ordered correctly, ties one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let mut halves = 0u64;
    let mut pairs = 0u64;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] && !labels[j] {
                pairs += 1;
                if scores[i] > scores[j] {
                    halves += 2;
                } else if scores[i] == scores[j] {
                    halves += 1;
                }
            }
        }
    }
    (pairs > 0).then(|| halves as f64 / (2.0 * pairs as f64))
}

/// 1-based average ranks by counting smaller and equal values.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let below = x.iter().filter(|w| *w < v).count();
            let equal = x.iter().filter(|w| *w == v).count();
            below as f64 + (equal as f64 + 1.0) / 2.0
        })
        .collect()
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
    }
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&ranks(x), &ranks(y))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleMetric {
    Precision,
    Recall,
    F1,
    Auc,
}

fn metric(m: OracleMetric, scores: &[f64], predicted: &[bool], actual: &[bool]) -> Option<f64> {
    let (p, r, f) = prf(predicted, actual);
    match m {
        OracleMetric::Precision => Some(p),
        OracleMetric::Recall => Some(r),
        OracleMetric::F1 => Some(f),
        OracleMetric::Auc => auc(scores, actual),
    }
}

/// Percentile bootstrap: resample `i` draws `n` indices uniformly from a
/// ChaCha8 generator seeded with `seed` on stream `i`; resamples where the
/// metric is undefined are dropped; bounds interpolate linearly between
/// order statistics.
pub fn bootstrap(
    m: OracleMetric,
    scores: &[f64],
    predicted: &[bool],
    actual: &[bool],
    resamples: usize,
    level: f64,
    seed: u64,
) -> Option<(f64, f64)> {
    let n = scores.len();
    let mut values = Vec::new();
    for i in 0..resamples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let s: Vec<f64> = idx.iter().map(|&k| scores[k]).collect();
        let p: Vec<bool> = idx.iter().map(|&k| predicted[k]).collect();
        let a: Vec<bool> = idx.iter().map(|&k| actual[k]).collect();
        if let Some(v) = metric(m, &s, &p, &a) {
            values.push(v);
        }
    }
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |q: f64| {
        let h = (values.len() - 1) as f64 * q;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(values.len() - 1);
        values[lo] + (h - lo as f64) * (values[hi] - values[lo])
    };
    let alpha = (1.0 - level) / 2.0;
    Some((quantile(alpha), quantile(1.0 - alpha)))
}

/// Random evaluation instance of size 2..=max_n with few distinct scores,
/// so ties are common.
pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize) -> (Vec<f64>, Vec<bool>, Vec<bool>) {
    let n = rng.gen_range(2..=max_n);
    let levels = rng.gen_range(1..=n.min(20));
    let scores: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(0..levels) as f64 / levels as f64)
        .collect();
    let rate = rng.gen_range(0.0..1.0);
    let actual: Vec<bool> = (0..n).map(|_| rng.gen_bool(rate)).collect();
    let predicted: Vec<bool> = scores.iter().map(|&s| s >= 0.5).collect();
    (scores, predicted, actual)
}
