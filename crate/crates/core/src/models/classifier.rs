//! One interface over the four model kinds: fitting, prediction,
//! threshold handling and checkpoint persistence.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::Document;
use crate::eval::PredictionSet;
use crate::tensor::{read_checkpoint, write_checkpoint, CheckpointHeader, ParamSet};
use crate::text::{
    build_vocabulary, embedding_words, encode_document, load_embeddings, tokenize, EmbeddingFormat, EmbeddingTable,
    EncodeLimits, EncodedDocument, VocabLimits, Vocabulary,
};

use super::calibrate::calibrate_threshold;
use super::cnn::{CnnConfig, CnnModel};
use super::han::{HanConfig, HanModel};
use super::lm::{lm_train, LmConfig, LmModel};
use super::tfidf::{tfidf_train, TfIdfConfig, TfIdfModel};
use super::train::{train_neural, NeuralNet, TrainConfig, TrainLog};
use super::ModelError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Cnn,
    Han,
    #[serde(alias = "tfidf")]
    TfidfMargin,
    Lm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::TfidfMargin, ModelKind::Lm, ModelKind::Cnn, ModelKind::Han];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Cnn => "cnn",
            ModelKind::Han => "han",
            ModelKind::TfidfMargin => "tfidf-margin",
            ModelKind::Lm => "lm",
        }
    }

    /// Row label in report tables.
    pub fn display(self) -> &'static str {
        match self {
            ModelKind::Cnn => "CNN",
            ModelKind::Han => "HAN",
            ModelKind::TfidfMargin => "TfIdf",
            ModelKind::Lm => "LM",
        }
    }

    pub fn is_neural(self) -> bool {
        matches!(self, ModelKind::Cnn | ModelKind::Han)
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cnn" => Some(ModelKind::Cnn),
            "han" => Some(ModelKind::Han),
            "tfidf" | "tfidf-margin" => Some(ModelKind::TfidfMargin),
            "lm" => Some(ModelKind::Lm),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// 0.5 on the positive probability for neural models, 0 on the margin
    /// for lexical ones.
    Default,
    Calibrated,
}

/// Everything needed to fit one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub embedding_dim: usize,
    /// Pretrained vectors in word2vec binary or text format.
    pub embeddings: Option<PathBuf>,
    pub embedding_format: EmbeddingFormat,
    /// Add the pretrained file's words to the vocabulary (up to its cap).
    pub vocabulary_from_embeddings: bool,
    pub vocabulary: VocabLimits,
    pub limits: EncodeLimits,
    pub cnn: CnnConfig,
    pub han: HanConfig,
    pub tfidf: TfIdfConfig,
    pub lm: LmConfig,
    pub train: TrainConfig,
    /// Calibrate neural thresholds on validation F1 instead of using 0.5.
    pub calibrate_neural: bool,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            embedding_dim: 300,
            embeddings: None,
            embedding_format: EmbeddingFormat::Auto,
            vocabulary_from_embeddings: false,
            vocabulary: VocabLimits::default(),
            limits: EncodeLimits::default(),
            cnn: CnnConfig::default(),
            han: HanConfig::default(),
            tfidf: TfIdfConfig::default(),
            lm: LmConfig::default(),
            train: TrainConfig::default(),
            calibrate_neural: false,
        }
    }
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum ModelBody {
    Cnn(CnnModel),
    Han(HanModel),
    TfIdf(TfIdfModel),
    Lm(LmModel),
}

#[derive(Clone, Debug)]
pub struct Classifier {
    pub kind: ModelKind,
    pub body: ModelBody,
    /// Token vocabulary of the neural models.
    pub vocab: Option<Vocabulary>,
    pub limits: EncodeLimits,
    pub threshold: f64,
    pub threshold_mode: ThresholdMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub score: f64,
    pub label: bool,
    /// No tokens: scored 0.5 and labeled negative.
    pub empty: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub log: Option<TrainLog>,
    pub embedding_coverage: Option<f64>,
    pub vocabulary_size: usize,
    pub threshold: f64,
    pub threshold_mode: Option<ThresholdMode>,
}

pub const EMPTY_SCORE: f64 = 0.5;

fn labeled<'a>(docs: &[&'a Document]) -> Vec<(&'a str, bool)> {
    docs.iter().map(|d| (d.text.as_str(), d.label.is_positive())).collect()
}

fn encode_all(docs: &[&Document], vocab: &Vocabulary, limits: EncodeLimits) -> Vec<(EncodedDocument, bool)> {
    docs.par_iter()
        .map(|d| (encode_document(&d.id, &d.text, vocab, limits), d.label.is_positive()))
        .collect()
}

fn both_classes(docs: &[&Document]) -> bool {
    docs.iter().any(|d| d.label.is_positive()) && docs.iter().any(|d| !d.label.is_positive())
}

/// Fits a model of `kind` on `train`, using `validation` for early stopping
/// and threshold calibration. Test documents never pass through here.
pub fn fit(
    kind: ModelKind,
    spec: &ModelSpec,
    train: &[&Document],
    validation: &[&Document],
) -> Result<(Classifier, FitReport), ModelError> {
    if train.is_empty() {
        return Err(ModelError::Usage("training set is empty".into()));
    }
    let mut report = FitReport::default();
    let mut classifier = match kind {
        ModelKind::TfidfMargin | ModelKind::Lm => {
            let body = if kind == ModelKind::Lm {
                ModelBody::Lm(lm_train(&labeled(train), &spec.lm)?)
            } else {
                ModelBody::TfIdf(tfidf_train(&labeled(train), &spec.tfidf)?)
            };
            report.vocabulary_size = match &body {
                ModelBody::Lm(m) => m.terms.len(),
                ModelBody::TfIdf(m) => m.terms.len(),
                _ => 0,
            };
            Classifier {
                kind,
                body,
                vocab: None,
                limits: spec.limits,
                threshold: 0.0,
                threshold_mode: ThresholdMode::Default,
            }
        }
        ModelKind::Cnn | ModelKind::Han => {
            let mut vocab = build_vocabulary(train.iter().map(|d| d.text.as_str()), spec.vocabulary)?;
            let mut rng = ChaCha8Rng::seed_from_u64(spec.train.seed);
            let table = match &spec.embeddings {
                Some(path) => {
                    if spec.vocabulary_from_embeddings {
                        vocab.extend(embedding_words(path, spec.embedding_format)?, spec.vocabulary.max_size);
                    }
                    let loaded = load_embeddings(path, &vocab, spec.embedding_dim, spec.embedding_format, &mut rng)?;
                    report.embedding_coverage = Some(loaded.coverage);
                    loaded.table
                }
                None => EmbeddingTable::random(vocab.clone(), spec.embedding_dim, &mut rng),
            };
            report.vocabulary_size = vocab.len();
            let train_enc = encode_all(train, &vocab, spec.limits);
            let val_enc = encode_all(validation, &vocab, spec.limits);
            let body = if kind == ModelKind::Cnn {
                let mut m = CnnModel::new(spec.cnn.clone(), table, &mut rng)?;
                report.log = Some(train_neural(&mut m, &train_enc, &val_enc, &spec.train)?);
                ModelBody::Cnn(m)
            } else {
                let mut m = HanModel::new(spec.han.clone(), table, &mut rng)?;
                report.log = Some(train_neural(&mut m, &train_enc, &val_enc, &spec.train)?);
                ModelBody::Han(m)
            };
            Classifier {
                kind,
                body,
                vocab: Some(vocab),
                limits: spec.limits,
                threshold: 0.5,
                threshold_mode: ThresholdMode::Default,
            }
        }
    };
    let calibrate = !kind.is_neural() || spec.calibrate_neural;
    if calibrate && both_classes(validation) {
        classifier.calibrate(validation)?;
    }
    report.threshold = classifier.threshold;
    report.threshold_mode = Some(classifier.threshold_mode);
    Ok((classifier, report))
}

impl Classifier {
    pub fn default_threshold(kind: ModelKind) -> f64 {
        if kind.is_neural() {
            0.5
        } else {
            0.0
        }
    }

    /// Raw score of a text: positive probability for neural models, margin
    /// or log-likelihood ratio for lexical ones. `None` for empty text.
    pub fn score_text(&self, id: &str, text: &str) -> Result<Option<f64>, ModelError> {
        if tokenize(text).is_empty() {
            return Ok(None);
        }
        match &self.body {
            ModelBody::TfIdf(m) => Ok(Some(m.score(text))),
            ModelBody::Lm(m) => Ok(Some(m.score(text))),
            ModelBody::Cnn(m) => self.neural(m, id, text),
            ModelBody::Han(m) => self.neural(m, id, text),
        }
    }

    fn neural<M: NeuralNet>(&self, m: &M, id: &str, text: &str) -> Result<Option<f64>, ModelError> {
        let vocab = self
            .vocab
            .as_ref()
            .ok_or_else(|| ModelError::Format("neural classifier without vocabulary".into()))?;
        m.probability(&encode_document(id, text, vocab, self.limits))
    }

    /// Deterministic eval-mode predictions; documents fan out across threads.
    pub fn predict(&self, docs: &[(&str, &str)]) -> Result<Vec<Prediction>, ModelError> {
        docs.par_iter()
            .map(|&(id, text)| {
                Ok(match self.score_text(id, text)? {
                    Some(score) => Prediction {
                        id: id.to_string(),
                        score,
                        label: score >= self.threshold,
                        empty: false,
                    },
                    None => Prediction {
                        id: id.to_string(),
                        score: EMPTY_SCORE,
                        label: false,
                        empty: true,
                    },
                })
            })
            .collect()
    }

    pub fn predict_documents(&self, docs: &[&Document]) -> Result<Vec<Prediction>, ModelError> {
        let pairs: Vec<(&str, &str)> = docs.iter().map(|d| (d.id.as_str(), d.text.as_str())).collect();
        self.predict(&pairs)
    }

    pub fn prediction_set(&self, model: &str, tag: &str, docs: &[&Document]) -> Result<PredictionSet, ModelError> {
        let preds = self.predict_documents(docs)?;
        Ok(PredictionSet::new(
            model,
            tag,
            preds.iter().map(|p| p.id.clone()).collect(),
            preds.iter().map(|p| p.score).collect(),
            preds.iter().map(|p| p.label).collect(),
            docs.iter().map(|d| d.label.is_positive()).collect(),
        ))
    }

    /// Sets the threshold maximizing F1 on `validation`.
    pub fn calibrate(&mut self, validation: &[&Document]) -> Result<(), ModelError> {
        let preds = self.predict_documents(validation)?;
        let scores: Vec<f64> = preds.iter().map(|p| p.score).collect();
        let labels: Vec<bool> = validation.iter().map(|d| d.label.is_positive()).collect();
        let c = calibrate_threshold(&scores, &labels)?;
        self.threshold = c.threshold;
        self.threshold_mode = ThresholdMode::Calibrated;
        Ok(())
    }

    fn params(&self) -> ParamSet<f32> {
        match &self.body {
            ModelBody::Cnn(m) => m.params.clone(),
            ModelBody::Han(m) => m.params.clone(),
            _ => ParamSet::new(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let (hyper, model_json, vocab_hash) = match &self.body {
            ModelBody::Cnn(m) => (
                json!({ "cnn": m.config, "limits": self.limits }),
                json!(null),
                self.vocab_hash(),
            ),
            ModelBody::Han(m) => (
                json!({ "han": m.config, "limits": self.limits }),
                json!(null),
                self.vocab_hash(),
            ),
            ModelBody::TfIdf(m) => (
                json!({ "tfidf": m.config }),
                json!(m),
                crate::text::Vocabulary::from_tokens(m.terms.clone()).hash(),
            ),
            ModelBody::Lm(m) => (
                json!({ "lm": m.config }),
                json!(m),
                crate::text::Vocabulary::from_tokens(m.terms.clone()).hash(),
            ),
        };
        let header = CheckpointHeader {
            model_kind: self.kind.name().into(),
            hyperparameters: hyper,
            vocab_hash,
            params: Vec::new(),
            extra: json!({
                "threshold": self.threshold,
                "threshold_mode": self.threshold_mode,
                "limits": self.limits,
                "vocabulary": self.vocab,
                "model": model_json,
            }),
        };
        let file = File::create(path).map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
        write_checkpoint(BufWriter::new(file), header, &self.params())?;
        Ok(())
    }

    fn vocab_hash(&self) -> String {
        self.vocab.as_ref().map(Vocabulary::hash).unwrap_or_default()
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let file = File::open(path).map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
        let (header, params) = read_checkpoint(BufReader::new(file))?;
        let kind = ModelKind::parse(&header.model_kind)
            .ok_or_else(|| ModelError::Format(format!("unknown model kind {:?}", header.model_kind)))?;
        let field = |v: &serde_json::Value, key: &str| -> Result<serde_json::Value, ModelError> {
            v.get(key)
                .cloned()
                .ok_or_else(|| ModelError::Format(format!("checkpoint lacks {key}")))
        };
        let de = |v: serde_json::Value| -> Result<_, ModelError> { Ok(v) };
        let extra = header.extra.clone();
        let threshold: f64 = serde_json::from_value(field(&extra, "threshold")?).map_err(fmt)?;
        let threshold_mode: ThresholdMode = serde_json::from_value(field(&extra, "threshold_mode")?).map_err(fmt)?;
        let limits: EncodeLimits = serde_json::from_value(field(&extra, "limits")?).map_err(fmt)?;
        let vocab: Option<Vocabulary> = serde_json::from_value(field(&extra, "vocabulary")?).map_err(fmt)?;
        let body = match kind {
            ModelKind::Cnn => {
                let config: CnnConfig =
                    serde_json::from_value(de(field(&header.hyperparameters, "cnn")?)?).map_err(fmt)?;
                ModelBody::Cnn(CnnModel::from_params(config, params)?)
            }
            ModelKind::Han => {
                let config: HanConfig = serde_json::from_value(field(&header.hyperparameters, "han")?).map_err(fmt)?;
                ModelBody::Han(HanModel::from_params(config, params)?)
            }
            ModelKind::TfidfMargin => {
                let mut m: TfIdfModel = serde_json::from_value(field(&extra, "model")?).map_err(fmt)?;
                m.rebuild_index();
                ModelBody::TfIdf(m)
            }
            ModelKind::Lm => {
                let mut m: LmModel = serde_json::from_value(field(&extra, "model")?).map_err(fmt)?;
                m.rebuild_index();
                ModelBody::Lm(m)
            }
        };
        let classifier = Classifier {
            kind,
            body,
            vocab,
            limits,
            threshold,
            threshold_mode,
        };
        let expected = match &classifier.body {
            ModelBody::TfIdf(m) => Vocabulary::from_tokens(m.terms.clone()).hash(),
            ModelBody::Lm(m) => Vocabulary::from_tokens(m.terms.clone()).hash(),
            _ => classifier.vocab_hash(),
        };
        if expected != header.vocab_hash {
            return Err(ModelError::Format(
                "vocabulary hash does not match the checkpoint header".into(),
            ));
        }
        Ok(classifier)
    }
}

fn fmt(e: serde_json::Error) -> ModelError {
    ModelError::Format(e.to_string())
}
