//! Labeled datasets and split handles. Training code receives a
//! [`TrainingData`]; test documents sit behind [`TestSet`], which only
//! hands them to a fitted classifier.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{read_jsonl_file, DatasetSplit, Document, Source, SplitName};
use crate::eval::PredictionSet;
use crate::models::{Classifier, ModelError};

use super::ExperimentError;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub documents: Vec<Document>,
    pub splits: Vec<DatasetSplit>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub name: String,
    pub documents: usize,
    /// SHA-256 over the canonical JSON of every document and split, in order.
    pub sha256: String,
}

/// Documents a model may be fitted on.
#[derive(Clone, Debug, Default)]
pub struct TrainingData<'a> {
    pub train: Vec<&'a Document>,
    pub validation: Vec<&'a Document>,
}

/// Held-out documents, reachable only through a fitted classifier.
#[derive(Clone, Debug)]
pub struct TestSet<'a> {
    docs: Vec<&'a Document>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, documents: Vec<Document>, splits: Vec<DatasetSplit>) -> Self {
        Dataset {
            name: name.into(),
            documents,
            splits,
        }
    }

    /// Reads documents from JSONL and, when given, splits from a JSON array.
    pub fn load(name: &str, documents: &Path, splits: Option<&Path>) -> Result<Self, ExperimentError> {
        let docs: Vec<Document> = read_jsonl_file(documents)?;
        let splits = match splits {
            Some(p) => {
                let text =
                    std::fs::read_to_string(p).map_err(|e| ExperimentError::Io(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| ExperimentError::Format(format!("{}: {e}", p.display())))?
            }
            None => Vec::new(),
        };
        Ok(Dataset::new(name, docs, splits))
    }

    pub fn fingerprint(&self) -> DatasetFingerprint {
        let mut h = Sha256::new();
        for d in &self.documents {
            h.update(serde_json::to_vec(d).unwrap_or_default());
            h.update(b"\n");
        }
        for s in &self.splits {
            h.update(serde_json::to_vec(s).unwrap_or_default());
            h.update(b"\n");
        }
        DatasetFingerprint {
            name: self.name.clone(),
            documents: self.documents.len(),
            sha256: format!("{:x}", h.finalize()),
        }
    }

    fn split(&self, name: SplitName) -> Result<Vec<&Document>, ExperimentError> {
        let split =
            self.splits.iter().find(|s| s.name == name).ok_or_else(|| {
                ExperimentError::Usage(format!("dataset {} has no {} split", self.name, name.title()))
            })?;
        Ok(split.select(&self.documents))
    }

    pub fn training(&self) -> Result<TrainingData<'_>, ExperimentError> {
        Ok(TrainingData {
            train: self.split(SplitName::Train)?,
            validation: self.split(SplitName::Validation)?,
        })
    }

    pub fn test(&self) -> Result<TestSet<'_>, ExperimentError> {
        Ok(TestSet {
            docs: self.split(SplitName::Test)?,
        })
    }

    /// Every document as a test set, for external evaluation collections.
    pub fn as_test_set(&self) -> TestSet<'_> {
        TestSet {
            docs: self.documents.iter().collect(),
        }
    }

    pub fn partition(&self) -> Result<(TrainingData<'_>, TestSet<'_>), ExperimentError> {
        Ok((self.training()?, self.test()?))
    }
}

impl<'a> TrainingData<'a> {
    pub fn filter_source(&self, source: Source) -> Self {
        TrainingData {
            train: self.train.iter().copied().filter(|d| d.source == source).collect(),
            validation: self.validation.iter().copied().filter(|d| d.source == source).collect(),
        }
    }
}

impl<'a> TestSet<'a> {
    pub(crate) fn from_docs(docs: Vec<&'a Document>) -> Self {
        TestSet { docs }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.docs.iter().filter(|d| d.label.is_positive()).count()
    }

    pub fn filter_source(&self, source: Source) -> Self {
        TestSet {
            docs: self.docs.iter().copied().filter(|d| d.source == source).collect(),
        }
    }

    /// Whether every held-out document satisfies `pred`; exposes nothing else.
    pub fn all(&self, pred: impl Fn(&Document) -> bool) -> bool {
        self.docs.iter().all(|d| pred(d))
    }

    pub fn ids(&self) -> Vec<String> {
        self.docs.iter().map(|d| d.id.clone()).collect()
    }

    pub fn predictions(&self, classifier: &Classifier, model: &str, tag: &str) -> Result<PredictionSet, ModelError> {
        classifier.prediction_set(model, tag, &self.docs)
    }

    /// Positive-class probabilities: the neural output as-is, lexical
    /// scores mapped through σ(score − threshold).
    pub fn probabilities(&self, classifier: &Classifier, model: &str, tag: &str) -> Result<PredictionSet, ModelError> {
        let preds = classifier.predict_documents(&self.docs)?;
        let neural = classifier.kind.is_neural();
        Ok(PredictionSet::new(
            model,
            tag,
            preds.iter().map(|p| p.id.clone()).collect(),
            preds
                .iter()
                .map(|p| {
                    if neural || p.empty {
                        p.score
                    } else {
                        1.0 / (1.0 + (classifier.threshold - p.score).exp())
                    }
                })
                .collect(),
            preds.iter().map(|p| p.label).collect(),
            self.docs.iter().map(|d| d.label.is_positive()).collect(),
        ))
    }
}
