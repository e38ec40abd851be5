//! Percentile bootstrap intervals and paired bootstrap comparison.
//!
//! Stream contract: resample `i` draws its `n` indices with
//! `ChaCha8Rng::seed_from_u64(seed)` switched to stream `i`, each index by
//! `gen_range(0..n)`. Results therefore depend only on the seed, never on
//! how many workers evaluate the resamples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{auc, Confusion};
use super::{EvalError, PredictionSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Precision,
    Recall,
    F1,
    Auc,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Precision, Metric::Recall, Metric::F1, Metric::Auc];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Precision => "Precision",
            Metric::Recall => "Recall",
            Metric::F1 => "F1",
            Metric::Auc => "AUC",
        }
    }
}

/// Metric over the documents at `indices`; `None` where it is undefined
/// (AUC on a single-class draw).
pub fn metric_on(set: &PredictionSet, metric: Metric, indices: &[usize]) -> Option<f64> {
    match metric {
        Metric::Auc => {
            let scores: Vec<f64> = indices.iter().map(|&i| set.scores[i]).collect();
            let labels: Vec<bool> = indices.iter().map(|&i| set.actual[i]).collect();
            auc(&scores, &labels).ok()
        }
        _ => {
            let mut c = Confusion::default();
            for &i in indices {
                match (set.predicted[i], set.actual[i]) {
                    (true, true) => c.tp += 1,
                    (true, false) => c.fp += 1,
                    (false, false) => c.tn += 1,
                    (false, true) => c.fn_ += 1,
                }
            }
            let p = c.prf();
            Some(match metric {
                Metric::Precision => p.precision,
                Metric::Recall => p.recall,
                _ => p.f1,
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            resamples: 1000,
            level: 0.95,
            seed: 0,
            workers: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    /// Resamples where the metric was undefined.
    pub skipped: usize,
    #[serde(skip)]
    pub distribution: Vec<f64>,
}

/// Draws the indices of resample `i`.
pub fn resample_indices(seed: u64, i: usize, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

/// Percentile with linear interpolation between order statistics of a
/// sorted sample: position (m − 1)·q.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn run<F>(config: &BootstrapConfig, f: F) -> Vec<Option<f64>>
where
    F: Fn(usize) -> Option<f64> + Sync + Send,
{
    let all = || (0..config.resamples).into_par_iter().map(&f).collect();
    if config.workers == 1 {
        (0..config.resamples).map(f).collect()
    } else if config.workers == 0 {
        all()
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(config.workers).build() {
            Ok(pool) => pool.install(all),
            Err(_) => (0..config.resamples).map(&f).collect(),
        }
    }
}

fn interval(estimate: f64, draws: Vec<Option<f64>>, level: f64) -> Result<Interval, EvalError> {
    let skipped = draws.iter().filter(|d| d.is_none()).count();
    let mut distribution: Vec<f64> = draws.into_iter().flatten().collect();
    if distribution.is_empty() {
        return Err(EvalError::Undefined(
            "metric undefined on every bootstrap resample".into(),
        ));
    }
    let mut sorted = distribution.clone();
    sorted.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let out = Interval {
        estimate,
        lower: percentile(&sorted, alpha),
        upper: percentile(&sorted, 1.0 - alpha),
        skipped,
        distribution: std::mem::take(&mut distribution),
    };
    Ok(out)
}

fn check_config(config: &BootstrapConfig) -> Result<(), EvalError> {
    if config.resamples == 0 {
        return Err(EvalError::Usage("bootstrap needs at least one resample".into()));
    }
    if !(config.level > 0.0 && config.level < 1.0) {
        return Err(EvalError::Usage(format!(
            "confidence level {} outside (0, 1)",
            config.level
        )));
    }
    Ok(())
}

pub fn bootstrap_ci(set: &PredictionSet, metric: Metric, config: &BootstrapConfig) -> Result<Interval, EvalError> {
    set.validate()?;
    check_config(config)?;
    let n = set.len();
    if n < 2 {
        return Err(EvalError::Usage("bootstrap needs at least 2 documents".into()));
    }
    let all: Vec<usize> = (0..n).collect();
    let estimate = metric_on(set, metric, &all)
        .ok_or_else(|| EvalError::Undefined(format!("{} undefined on the full set", metric.label())))?;
    let draws = run(config, |i| metric_on(set, metric, &resample_indices(config.seed, i, n)));
    interval(estimate, draws, config.level)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub metric: Metric,
    /// metric(a) − metric(b) and its paired-bootstrap interval.
    pub difference: Interval,
    /// The interval excludes zero (p < 0.05 at the default level).
    pub significant: bool,
}

/// Paired bootstrap: every resample scores both systems on the same draw.
pub fn compare(
    a: &PredictionSet,
    b: &PredictionSet,
    metric: Metric,
    config: &BootstrapConfig,
) -> Result<Comparison, EvalError> {
    a.validate()?;
    b.validate()?;
    check_config(config)?;
    if a.ids != b.ids || a.actual != b.actual {
        return Err(EvalError::Usage(format!(
            "prediction sets {} and {} cover different documents",
            a.model, b.model
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(EvalError::Usage("bootstrap needs at least 2 documents".into()));
    }
    let all: Vec<usize> = (0..n).collect();
    let estimate = match (metric_on(a, metric, &all), metric_on(b, metric, &all)) {
        (Some(x), Some(y)) => x - y,
        _ => {
            return Err(EvalError::Undefined(format!(
                "{} undefined on the full set",
                metric.label()
            )))
        }
    };
    let draws = run(config, |i| {
        let idx = resample_indices(config.seed, i, n);
        Some(metric_on(a, metric, &idx)? - metric_on(b, metric, &idx)?)
    });
    let difference = interval(estimate, draws, config.level)?;
    let significant = difference.lower > 0.0 || difference.upper < 0.0;
    Ok(Comparison {
        metric,
        difference,
        significant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(scores: &[f64], actual: &[bool]) -> PredictionSet {
        PredictionSet::from_scores("m", "t", scores, actual, 0.5)
    }

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 0.5), 3.0);
        assert_eq!(percentile(&v, 0.025), 1.1);
        assert_eq!(percentile(&v, 1.0), 5.0);
    }

    #[test]
    fn constant_metric_gives_zero_width() {
        let s = set(&[0.9, 0.8, 0.7, 0.6], &[true, true, true, true]);
        let ci = bootstrap_ci(&s, Metric::Precision, &BootstrapConfig::default()).unwrap();
        assert_eq!((ci.lower, ci.upper), (1.0, 1.0));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let s = set(
            &[0.9, 0.3, 0.6, 0.2, 0.7, 0.55],
            &[true, false, true, false, false, true],
        );
        let one = bootstrap_ci(&s, Metric::Auc, &BootstrapConfig::default()).unwrap();
        let four = bootstrap_ci(
            &s,
            Metric::Auc,
            &BootstrapConfig {
                workers: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(one, four);
        assert_eq!(one.distribution, four.distribution);
        assert!(one.skipped > 0);
    }

    #[test]
    fn self_comparison_is_never_significant() {
        let s = set(&[0.9, 0.3, 0.6, 0.2], &[true, false, true, false]);
        for seed in 0..5 {
            let c = compare(
                &s,
                &s,
                Metric::F1,
                &BootstrapConfig {
                    seed,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(!c.significant);
            assert_eq!((c.difference.lower, c.difference.upper), (0.0, 0.0));
        }
    }

    #[test]
    fn misaligned_sets_are_rejected() {
        let a = set(&[0.9, 0.3], &[true, false]);
        let mut b = a.clone();
        b.ids[0] = "other".into();
        assert!(matches!(
            compare(&a, &b, Metric::F1, &BootstrapConfig::default()),
            Err(EvalError::Usage(_))
        ));
    }
}
