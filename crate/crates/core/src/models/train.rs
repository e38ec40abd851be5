//! Mini-batch training for the neural classifiers.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eval::{auc, Confusion};
use crate::tensor::{adam_step, AdamConfig, AdamState, Gradients, Graph, Mode, NodeId, ParamId, ParamSet, TensorError};
use crate::text::EncodedDocument;

use super::cnn::{cnn_input, cnn_logits, CnnModel};
use super::han::{han_forward, HanModel};
use super::ModelError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Weight of the squared l2 norm of the dense prediction layer.
    pub l2: f64,
    /// Epochs without validation-F1 improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    /// Rescale the batch gradient to this global norm when exceeded.
    pub clip_norm: Option<f64>,
    /// Worker threads for per-document gradients within a batch.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            batch_size: 64,
            learning_rate: 1e-3,
            l2: 1e-3,
            patience: 2,
            seed: 0,
            clip_norm: None,
            threads: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_precision: f64,
    pub val_recall: f64,
    pub val_f1: f64,
    pub val_auc: Option<f64>,
    pub improved: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (1-based); `None` if training never ran.
    pub best_epoch: Option<usize>,
    pub best_val_f1: Option<f64>,
    pub stopped_early: bool,
}

/// A differentiable two-class model over encoded documents.
pub trait NeuralNet: Sync {
    fn params(&self) -> &ParamSet<f32>;
    fn params_mut(&mut self) -> &mut ParamSet<f32>;
    fn dense_weight(&self) -> ParamId;
    fn dropout_rate(&self) -> f64;
    /// Logits node, or `None` when the document has no usable tokens.
    fn logits<R: Rng>(
        &self,
        g: &mut Graph<'_, f32>,
        doc: &EncodedDocument,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Option<NodeId>, TensorError>;

    /// Eval-mode positive-class probability.
    fn probability(&self, doc: &EncodedDocument) -> Result<Option<f64>, ModelError> {
        let mut g = Graph::new(self.params());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let Some(logits) = self.logits(&mut g, doc, Mode::Eval, &mut rng)? else {
            return Ok(None);
        };
        let p = g.softmax(logits)?;
        Ok(Some(f64::from(g.value(p).data()[1])))
    }
}

impl NeuralNet for CnnModel {
    fn params(&self) -> &ParamSet<f32> {
        &self.params
    }
    fn params_mut(&mut self) -> &mut ParamSet<f32> {
        &mut self.params
    }
    fn dense_weight(&self) -> ParamId {
        self.ids.dense_w
    }
    fn dropout_rate(&self) -> f64 {
        self.config.dropout
    }
    fn logits<R: Rng>(
        &self,
        g: &mut Graph<'_, f32>,
        doc: &EncodedDocument,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Option<NodeId>, TensorError> {
        if doc.empty || doc.length == 0 {
            return Ok(None);
        }
        let tokens = cnn_input(doc, self.max_window());
        cnn_logits(g, &self.ids, &tokens, self.config.dropout, mode, rng).map(Some)
    }
}

impl NeuralNet for HanModel {
    fn params(&self) -> &ParamSet<f32> {
        &self.params
    }
    fn params_mut(&mut self) -> &mut ParamSet<f32> {
        &mut self.params
    }
    fn dense_weight(&self) -> ParamId {
        self.ids.dense_w
    }
    fn dropout_rate(&self) -> f64 {
        self.config.dropout
    }
    fn logits<R: Rng>(
        &self,
        g: &mut Graph<'_, f32>,
        doc: &EncodedDocument,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Option<NodeId>, TensorError> {
        if doc.empty || doc.sentences.is_empty() {
            return Ok(None);
        }
        han_forward(g, &self.ids, &doc.sentences, self.config.dropout, mode, rng).map(|o| Some(o.logits))
    }
}

/// Dropout stream of one training example: seeded by the run seed, with the
/// epoch and position in the shuffled order selecting the stream.
fn example_rng(seed: u64, epoch: usize, position: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((epoch as u64) << 32) | position as u64);
    rng
}

fn shuffle_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed_5eed_5eed);
    rng.set_stream(epoch as u64);
    rng
}

/// Summed cross-entropy of a slice of examples, gradients of
/// `scale × summed loss` added into `grads`.
fn accumulate<M: NeuralNet>(
    model: &M,
    examples: &[(&EncodedDocument, bool, usize)],
    epoch: usize,
    seed: u64,
    scale: f32,
    grads: &mut Gradients<f32>,
) -> Result<f64, TensorError> {
    let mut total = 0.0;
    for &(doc, label, position) in examples {
        let mut rng = example_rng(seed, epoch, position);
        let mut g = Graph::new(model.params());
        let Some(logits) = model.logits(&mut g, doc, Mode::Train, &mut rng)? else {
            continue;
        };
        let ce = g.softmax_cross_entropy(logits, usize::from(label))?;
        total += f64::from(g.value(ce).item());
        let scaled = g.scale(ce, scale);
        g.backward_into(scaled, grads)?;
    }
    Ok(total)
}

/// Validation metrics at the 0.5 threshold.
pub fn validation_metrics<M: NeuralNet>(
    model: &M,
    data: &[(EncodedDocument, bool)],
) -> Result<(f64, f64, f64, Option<f64>), ModelError> {
    let scores: Vec<f64> = data
        .par_iter()
        .map(|(doc, _)| model.probability(doc).map(|p| p.unwrap_or(0.5)))
        .collect::<Result<_, _>>()?;
    let predicted: Vec<bool> = data
        .iter()
        .zip(&scores)
        .map(|((doc, _), &s)| !doc.empty && s >= 0.5)
        .collect();
    let actual: Vec<bool> = data.iter().map(|(_, l)| *l).collect();
    let p = Confusion::of(&predicted, &actual).prf();
    Ok((p.precision, p.recall, p.f1, auc(&scores, &actual).ok()))
}

/// Trains in place with Adam on mean cross-entropy plus `l2·‖W_dense‖²`,
/// keeping the parameters of the best validation-F1 epoch. On a non-finite
/// loss or parameter the best parameters so far are restored and
/// [`ModelError::Diverged`] is returned.
pub fn train_neural<M: NeuralNet>(
    model: &mut M,
    train: &[(EncodedDocument, bool)],
    validation: &[(EncodedDocument, bool)],
    config: &TrainConfig,
) -> Result<TrainLog, ModelError> {
    if config.batch_size == 0 {
        return Err(ModelError::Usage("batch_size must be positive".into()));
    }
    let mut log = TrainLog::default();
    if config.epochs == 0 {
        return Ok(log);
    }
    let usable: Vec<usize> = (0..train.len()).filter(|&i| !train[i].0.empty).collect();
    if usable.is_empty() {
        return Err(ModelError::Usage("no non-empty training documents".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.max(1))
        .build()
        .map_err(|e| ModelError::Usage(e.to_string()))?;
    let adam = AdamConfig {
        learning_rate: config.learning_rate,
        ..AdamConfig::default()
    };
    let mut state = AdamState::new(model.params(), adam);
    let mut grads = Gradients::zeros_like(model.params());
    let initial = model.params().clone();
    let mut best: Option<(f64, ParamSet<f32>)> = None;
    let mut since_best = 0;
    let dense = model.dense_weight();

    for epoch in 1..=config.epochs {
        let mut order = usable.clone();
        order.shuffle(&mut shuffle_rng(config.seed, epoch));
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let examples: Vec<(&EncodedDocument, bool, usize)> = batch
                .iter()
                .enumerate()
                .map(|(k, &i)| (&train[i].0, train[i].1, b * config.batch_size + k))
                .collect();
            let scale = 1.0 / examples.len() as f32;
            grads.zero();
            let data_loss = if config.threads <= 1 {
                accumulate(model, &examples, epoch, config.seed, scale, &mut grads)?
            } else {
                let parts = config.threads.min(examples.len());
                let chunk = examples.len().div_ceil(parts);
                let shared: &M = model;
                let results: Vec<Result<(f64, Gradients<f32>), TensorError>> = pool.install(|| {
                    examples
                        .par_chunks(chunk)
                        .map(|part| {
                            let mut local = Gradients::zeros_like(shared.params());
                            let l = accumulate(shared, part, epoch, config.seed, scale, &mut local)?;
                            Ok((l, local))
                        })
                        .collect()
                });
                let mut total = 0.0;
                for r in results {
                    let (l, local) = r?;
                    total += l;
                    grads.accumulate(&local)?;
                }
                total
            };
            let reg = {
                let mut g = Graph::new(model.params());
                let w = g.param(dense);
                let sq = g.sum_squares(w);
                let term = g.scale(sq, config.l2 as f32);
                g.backward_into(term, &mut grads)?;
                f64::from(g.value(term).item())
            };
            let loss = data_loss / examples.len() as f64 + reg;
            if !loss.is_finite() {
                return Err(diverged(
                    model,
                    best,
                    &initial,
                    log,
                    epoch,
                    format!("loss became {loss} in batch {}", b + 1),
                ));
            }
            if let Some(max_norm) = config.clip_norm {
                let norm = grads.norm();
                if norm > max_norm && norm > 0.0 {
                    grads.scale((max_norm / norm) as f32);
                }
            }
            adam_step(model.params_mut(), &grads, &mut state)?;
            if !model.params().all_finite() {
                return Err(diverged(
                    model,
                    best,
                    &initial,
                    log,
                    epoch,
                    format!("parameters became non-finite in batch {}", b + 1),
                ));
            }
            epoch_loss += loss;
            batches += 1;
        }

        let (p, r, f1, val_auc) = if validation.is_empty() {
            (0.0, 0.0, 0.0, None)
        } else {
            validation_metrics(model, validation)?
        };
        let improved = validation.is_empty() || best.as_ref().is_none_or(|(f, _)| f1 > *f);
        if improved {
            best = Some((f1, model.params().clone()));
            log.best_epoch = Some(epoch);
            log.best_val_f1 = (!validation.is_empty()).then_some(f1);
            since_best = 0;
        } else {
            since_best += 1;
        }
        log::info!(
            "epoch {epoch}: loss {:.5} val F1 {f1:.4}",
            epoch_loss / batches.max(1) as f64
        );
        log.epochs.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / batches.max(1) as f64,
            val_precision: p,
            val_recall: r,
            val_f1: f1,
            val_auc,
            improved,
        });
        if !validation.is_empty() && since_best >= config.patience && epoch < config.epochs {
            log.stopped_early = true;
            break;
        }
    }
    if let Some((_, params)) = best {
        *model.params_mut() = params;
    }
    Ok(log)
}

fn diverged<M: NeuralNet>(
    model: &mut M,
    best: Option<(f64, ParamSet<f32>)>,
    initial: &ParamSet<f32>,
    log: TrainLog,
    epoch: usize,
    message: String,
) -> ModelError {
    let message = match best {
        Some((_, params)) => {
            *model.params_mut() = params;
            format!("{message}; restored the best-validation parameters")
        }
        None => {
            *model.params_mut() = initial.clone();
            format!("{message}; restored the initial parameters")
        }
    };
    ModelError::Diverged {
        epoch,
        message,
        log: Box::new(log),
    }
}
