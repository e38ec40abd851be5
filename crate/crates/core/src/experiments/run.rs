//! The five experiments over in-memory datasets.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{AnnotationRecord, Document, Source};
use crate::eval::{
    agreement_report, evaluate, AgreementReport, AnnotationScale, BootstrapConfig, EvalReport, Metric, PredictionSet,
};
use crate::models::{fit, Classifier, FitReport, ModelKind, ModelSpec, ThresholdMode};

use super::data::{Dataset, TestSet, TrainingData};
use super::ExperimentError;

/// Seed of a named stream derived from the master seed.
pub fn derive_seed(master: u64, stream: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(stream.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Models, their shared configuration and the master seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Runner {
    pub models: Vec<ModelKind>,
    pub model: ModelSpec,
    pub bootstrap: BootstrapConfig,
    pub seed: u64,
    /// Fit models in parallel; results match the sequential order.
    pub concurrent: bool,
}

impl Default for Runner {
    fn default() -> Self {
        Runner {
            models: ModelKind::ALL.to_vec(),
            model: ModelSpec::default(),
            bootstrap: BootstrapConfig::default(),
            seed: 0,
            concurrent: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub model: String,
    pub train_size: usize,
    pub validation_size: usize,
    pub threshold: f64,
    pub threshold_mode: ThresholdMode,
    pub best_epoch: Option<usize>,
    pub epochs_run: Option<usize>,
    pub embedding_coverage: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub train_size: usize,
    pub test_size: usize,
    pub fits: Vec<FitSummary>,
    pub eval: EvalReport,
}

/// Relative change per metric, `(between − within) / within`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub model: String,
    pub change: BTreeMap<Metric, Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemporalResult {
    /// Train/test years, e.g. `'18/'18`.
    pub within_label: String,
    pub between_label: String,
    pub test_size: usize,
    pub within_fits: Vec<FitSummary>,
    pub between_fits: Vec<FitSummary>,
    pub within: EvalReport,
    pub between: EvalReport,
    pub delta: Vec<DeltaRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicFold {
    pub topic: String,
    pub train_size: usize,
    pub validation_size: usize,
    pub test_size: usize,
    pub test_positives: usize,
    pub eval: EvalReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragedRow {
    pub model: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Mean over folds where AUC is defined.
    pub auc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicResult {
    pub k: usize,
    pub folds: Vec<TopicFold>,
    pub averaged: Vec<AveragedRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainResult {
    pub train_size: usize,
    pub validation_size: usize,
    pub test_size: usize,
    pub fits: Vec<FitSummary>,
    pub eval: EvalReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementResult {
    pub n: usize,
    pub scale: AnnotationScale,
    pub rows: Vec<AgreementReport>,
}

fn year_of(docs: &[&Document]) -> Option<i32> {
    let mut counts: BTreeMap<i32, usize> = BTreeMap::new();
    for d in docs {
        *counts.entry(d.snapshot_year).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(y, _)| y)
}

fn short_year(y: Option<i32>) -> String {
    y.map(|y| format!("'{:02}", y.rem_euclid(100)))
        .unwrap_or_else(|| "?".into())
}

impl Runner {
    /// Model configuration with the model's own training seed.
    pub fn spec_for(&self, kind: ModelKind) -> ModelSpec {
        let mut spec = self.model.clone();
        spec.train.seed = derive_seed(self.seed, kind.name());
        spec
    }

    pub fn bootstrap_config(&self) -> BootstrapConfig {
        BootstrapConfig {
            seed: derive_seed(self.seed, "bootstrap"),
            ..self.bootstrap
        }
    }

    fn fit_one(&self, kind: ModelKind, data: &TrainingData<'_>) -> Result<(Classifier, FitSummary), ExperimentError> {
        log::info!("fitting {} on {} documents", kind.name(), data.train.len());
        let (classifier, report): (Classifier, FitReport) =
            fit(kind, &self.spec_for(kind), &data.train, &data.validation)?;
        let log = report.log.as_ref();
        let summary = FitSummary {
            model: kind.name().to_string(),
            train_size: data.train.len(),
            validation_size: data.validation.len(),
            threshold: classifier.threshold,
            threshold_mode: classifier.threshold_mode,
            best_epoch: log.and_then(|l| l.best_epoch),
            epochs_run: log.map(|l| l.epochs.len()),
            embedding_coverage: report.embedding_coverage,
        };
        Ok((classifier, summary))
    }

    /// Fits every listed model, in parallel when `concurrent` is set.
    pub fn fit_all(&self, data: &TrainingData<'_>) -> Result<Vec<(Classifier, FitSummary)>, ExperimentError> {
        if data.train.is_empty() {
            return Err(ExperimentError::Usage("training split is empty".into()));
        }
        if self.models.is_empty() {
            return Err(ExperimentError::Usage("no models selected".into()));
        }
        if self.concurrent {
            self.models.par_iter().map(|&k| self.fit_one(k, data)).collect()
        } else {
            self.models.iter().map(|&k| self.fit_one(k, data)).collect()
        }
    }

    fn score(
        &self,
        fitted: &[(Classifier, FitSummary)],
        test: &TestSet<'_>,
        tag: &str,
    ) -> Result<EvalReport, ExperimentError> {
        let sets: Vec<PredictionSet> = fitted
            .iter()
            .map(|(c, s)| test.predictions(c, &s.model, tag))
            .collect::<Result<_, _>>()?;
        Ok(evaluate(&sets, &self.bootstrap_config())?)
    }

    /// Trains on `train`'s train/validation splits and evaluates on every
    /// document of `external`.
    pub fn baseline_comparison(
        &self,
        train: &Dataset,
        external: &Dataset,
    ) -> Result<ComparisonResult, ExperimentError> {
        let data = train.training()?;
        let test = external.as_test_set();
        if test.is_empty() {
            return Err(ExperimentError::Usage(format!(
                "external test set {} is empty",
                external.name
            )));
        }
        let fitted = self.fit_all(&data)?;
        let eval = self.score(&fitted, &test, "comparison")?;
        Ok(ComparisonResult {
            train_size: data.train.len(),
            test_size: test.len(),
            fits: fitted.into_iter().map(|(_, s)| s).collect(),
            eval,
        })
    }

    /// Within: train and test on `current`. Between: train on `previous`,
    /// test on `current`'s test split.
    pub fn temporal(&self, current: &Dataset, previous: &Dataset) -> Result<TemporalResult, ExperimentError> {
        let (within_data, test) = current.partition()?;
        let between_data = previous.training()?;
        let test_year = short_year(year_of(
            &within_data
                .train
                .iter()
                .chain(&within_data.validation)
                .copied()
                .collect::<Vec<_>>(),
        ));
        let old_year = short_year(year_of(&between_data.train));
        let within_fits = self.fit_all(&within_data)?;
        let within = self.score(&within_fits, &test, "within")?;
        let between_fits = self.fit_all(&between_data)?;
        let between = self.score(&between_fits, &test, "between")?;
        let delta = within
            .models
            .iter()
            .zip(&between.models)
            .map(|(w, b)| DeltaRow {
                model: w.model.clone(),
                change: Metric::ALL
                    .iter()
                    .map(|&m| {
                        let change = match (w.value(m), b.value(m)) {
                            (Some(w), Some(b)) if w != 0.0 => Some((b - w) / w),
                            _ => None,
                        };
                        (m, change)
                    })
                    .collect(),
            })
            .collect();
        Ok(TemporalResult {
            within_label: format!("{test_year}/{test_year}"),
            between_label: format!("{old_year}/{test_year}"),
            test_size: test.len(),
            within_fits: within_fits.into_iter().map(|(_, s)| s).collect(),
            between_fits: between_fits.into_iter().map(|(_, s)| s).collect(),
            within,
            between,
            delta,
        })
    }

    /// Leave-one-topic-out over the `k` topics with most positives.
    pub fn topic_cv(&self, dataset: &Dataset, k: usize) -> Result<TopicResult, ExperimentError> {
        let plan = topic_folds(&dataset.documents, k, derive_seed(self.seed, "topic-negatives"))?;
        let mut folds = Vec::with_capacity(k);
        for (f, topic) in plan.topics.iter().enumerate() {
            let in_test: Vec<bool> = plan.fold_of.iter().map(|&x| x == Some(f)).collect();
            let mut rest: Vec<&Document> = dataset
                .documents
                .iter()
                .zip(&in_test)
                .filter(|(_, &t)| !t)
                .map(|(d, _)| d)
                .collect();
            rest.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(
                self.seed,
                &format!("topic-validation-{f}"),
            )));
            let n_val = rest.len() / 10;
            let mut validation: Vec<&Document> = rest[..n_val].to_vec();
            let mut train: Vec<&Document> = rest[n_val..].to_vec();
            let position: HashMap<&str, usize> = dataset
                .documents
                .iter()
                .enumerate()
                .map(|(i, d)| (d.id.as_str(), i))
                .collect();
            train.sort_by_key(|d| position[d.id.as_str()]);
            validation.sort_by_key(|d| position[d.id.as_str()]);
            let test_docs: Vec<&Document> = dataset
                .documents
                .iter()
                .zip(&in_test)
                .filter(|(_, &t)| t)
                .map(|(d, _)| d)
                .collect();
            let test = TestSet::from_docs(test_docs);
            let data = TrainingData { train, validation };
            log::info!("topic fold {}/{k}: {topic}", f + 1);
            let fitted = self.fit_all(&data)?;
            let eval = self.score(&fitted, &test, topic)?;
            folds.push(TopicFold {
                topic: topic.clone(),
                train_size: data.train.len(),
                validation_size: data.validation.len(),
                test_size: test.len(),
                test_positives: test.positives(),
                eval,
            });
        }
        let averaged = average_folds(&folds);
        Ok(TopicResult { k, folds, averaged })
    }

    /// Trains on Wikipedia pages of the train/validation splits and tests
    /// on general-web pages of the test split.
    pub fn domain(&self, dataset: &Dataset) -> Result<DomainResult, ExperimentError> {
        let (data, test) = dataset.partition()?;
        let data = data.filter_source(Source::Wikipedia);
        let test = test.filter_source(Source::GeneralWeb);
        if data.train.is_empty() {
            return Err(ExperimentError::Usage("no Wikipedia pages in the train split".into()));
        }
        if test.is_empty() {
            return Err(ExperimentError::Usage("no general-web pages in the test split".into()));
        }
        let fitted = self.fit_all(&data)?;
        let eval = self.score(&fitted, &test, "domain")?;
        Ok(DomainResult {
            train_size: data.train.len(),
            validation_size: data.validation.len(),
            test_size: test.len(),
            fits: fitted.into_iter().map(|(_, s)| s).collect(),
            eval,
        })
    }

    /// Trains on `train`, predicts probabilities on the annotated pages and
    /// correlates model error with the annotations.
    pub fn agreement(
        &self,
        train: &Dataset,
        annotated: &Dataset,
        annotations: &[AnnotationRecord],
        scale: &AnnotationScale,
    ) -> Result<AgreementResult, ExperimentError> {
        let data = train.training()?;
        let test = annotated.as_test_set();
        let fitted = self.fit_all(&data)?;
        let sets: Vec<PredictionSet> = fitted
            .iter()
            .map(|(c, s)| test.probabilities(c, &s.model, "agreement"))
            .collect::<Result<_, _>>()?;
        run_agreement(&sets, annotations, scale)
    }
}

/// Agreement rows for precomputed probability sets.
pub fn run_agreement(
    sets: &[PredictionSet],
    annotations: &[AnnotationRecord],
    scale: &AnnotationScale,
) -> Result<AgreementResult, ExperimentError> {
    let rows: Vec<AgreementReport> = sets
        .iter()
        .map(|s| agreement_report(s, annotations, scale))
        .collect::<Result<_, _>>()?;
    Ok(AgreementResult {
        n: rows.first().map(|r| r.n).unwrap_or(0),
        scale: scale.clone(),
        rows,
    })
}

/// Fold assignment: `fold_of[i]` is the test fold of document `i`, `None`
/// when it always trains.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldPlan {
    pub topics: Vec<String>,
    pub fold_of: Vec<Option<usize>>,
}

/// Top-`k` topics by positive count (ties by name); positives of topic `i`
/// form fold `i`'s test positives, negatives are dealt round-robin over
/// folds after a seeded shuffle.
pub fn topic_folds(docs: &[Document], k: usize, seed: u64) -> Result<FoldPlan, ExperimentError> {
    if k < 2 {
        return Err(ExperimentError::Usage("topic cross-validation needs k >= 2".into()));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for d in docs.iter().filter(|d| d.label.is_positive()) {
        if let Some(t) = &d.topic {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    if counts.len() < k {
        return Err(ExperimentError::Usage(format!(
            "only {} topics have positive pages; need {k} (use a smaller k, e.g. {})",
            counts.len(),
            counts.len().max(2)
        )));
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let topics: Vec<String> = ranked[..k].iter().map(|(t, _)| t.to_string()).collect();
    let index: HashMap<&str, usize> = topics.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let mut fold_of: Vec<Option<usize>> = docs
        .iter()
        .map(|d| {
            if d.label.is_positive() {
                d.topic.as_deref().and_then(|t| index.get(t).copied())
            } else {
                None
            }
        })
        .collect();
    let mut negatives: Vec<usize> = (0..docs.len()).filter(|&i| !docs[i].label.is_positive()).collect();
    negatives.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    for (j, &i) in negatives.iter().enumerate() {
        fold_of[i] = Some(j % k);
    }
    Ok(FoldPlan { topics, fold_of })
}

fn average_folds(folds: &[TopicFold]) -> Vec<AveragedRow> {
    let Some(first) = folds.first() else { return Vec::new() };
    (0..first.eval.models.len())
        .map(|m| {
            let evals: Vec<_> = folds.iter().map(|f| &f.eval.models[m]).collect();
            let mean = |xs: Vec<f64>| xs.iter().sum::<f64>() / xs.len() as f64;
            let aucs: Vec<f64> = evals.iter().filter_map(|e| e.auc).collect();
            AveragedRow {
                model: evals[0].model.clone(),
                precision: mean(evals.iter().map(|e| e.prf.precision).collect()),
                recall: mean(evals.iter().map(|e| e.prf.recall).collect()),
                f1: mean(evals.iter().map(|e| e.prf.f1).collect()),
                auc: (!aucs.is_empty()).then(|| mean(aucs)),
            }
        })
        .collect()
}
