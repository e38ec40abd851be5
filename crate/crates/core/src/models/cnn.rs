//! Window convolutions with max-over-time pooling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::tensor::{glorot, Graph, Mode, NodeId, ParamId, ParamSet, Scalar, Tensor, TensorError};
use crate::text::{EmbeddingTable, EncodedDocument, PAD};

use super::ModelError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CnnConfig {
    pub windows: Vec<usize>,
    pub filters: usize,
    pub dropout: f64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            windows: vec![2, 3, 4],
            filters: 128,
            dropout: 0.5,
        }
    }
}

/// Parameter handles: `cnn.embedding`, `cnn.conv{h}.w` (filters × h·d),
/// `cnn.conv{h}.b`, `cnn.dense.w` (2 × windows·filters), `cnn.dense.b`.
#[derive(Clone, Debug, PartialEq)]
pub struct CnnIds {
    pub embedding: ParamId,
    pub convs: Vec<(usize, ParamId, ParamId)>,
    pub dense_w: ParamId,
    pub dense_b: ParamId,
}

#[derive(Clone, Debug)]
pub struct CnnModel {
    pub config: CnnConfig,
    pub params: ParamSet<f32>,
    pub ids: CnnIds,
}

pub(crate) fn add_embedding(params: &mut ParamSet<f32>, name: &str, table: EmbeddingTable) -> ParamId {
    let trainable = table.trainable;
    let id = params.add(name, table.matrix);
    let entry = params.entry_mut(id);
    entry.trainable = trainable;
    entry.frozen_rows = vec![PAD];
    id
}

impl CnnModel {
    pub fn new<R: Rng + ?Sized>(
        config: CnnConfig,
        embeddings: EmbeddingTable,
        rng: &mut R,
    ) -> Result<Self, ModelError> {
        if config.windows.is_empty() || config.windows.contains(&0) || config.filters == 0 {
            return Err(ModelError::Usage(
                "CNN needs at least one positive window size and filter".into(),
            ));
        }
        let d = embeddings.dim();
        let mut params = ParamSet::new();
        let embedding = add_embedding(&mut params, "cnn.embedding", embeddings);
        let mut convs = Vec::new();
        for &h in &config.windows {
            let w = params.add(
                format!("cnn.conv{h}.w"),
                glorot(&[config.filters, h * d], h * d, config.filters, rng),
            );
            let b = params.add(format!("cnn.conv{h}.b"), Tensor::zeros(&[config.filters]));
            convs.push((h, w, b));
        }
        let pooled = config.windows.len() * config.filters;
        let dense_w = params.add("cnn.dense.w", glorot(&[2, pooled], pooled, 2, rng));
        let dense_b = params.add("cnn.dense.b", Tensor::zeros(&[2]));
        Ok(CnnModel {
            config,
            params,
            ids: CnnIds {
                embedding,
                convs,
                dense_w,
                dense_b,
            },
        })
    }

    /// Rebinds handles against a parameter set restored from a checkpoint.
    pub fn from_params(config: CnnConfig, params: ParamSet<f32>) -> Result<Self, ModelError> {
        let find = |name: &str| {
            params
                .id(name)
                .ok_or_else(|| ModelError::Format(format!("missing parameter {name}")))
        };
        let mut convs = Vec::new();
        for &h in &config.windows {
            convs.push((h, find(&format!("cnn.conv{h}.w"))?, find(&format!("cnn.conv{h}.b"))?));
        }
        let ids = CnnIds {
            embedding: find("cnn.embedding")?,
            convs,
            dense_w: find("cnn.dense.w")?,
            dense_b: find("cnn.dense.b")?,
        };
        Ok(CnnModel { config, params, ids })
    }
}

/// Real tokens of a flat encoding, right-padded to at least `min_len`.
pub fn cnn_input(doc: &EncodedDocument, min_len: usize) -> Vec<usize> {
    let mut tokens = doc.tokens[..doc.length].to_vec();
    if tokens.len() < min_len {
        tokens.resize(min_len, PAD);
    }
    tokens
}

/// Builds the CNN forward pass and returns the 2-way logits node.
pub fn cnn_logits<T: Scalar, R: Rng + ?Sized>(
    g: &mut Graph<'_, T>,
    ids: &CnnIds,
    tokens: &[usize],
    dropout: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<NodeId, TensorError> {
    let x = g.gather(ids.embedding, tokens)?;
    let mut pooled = Vec::with_capacity(ids.convs.len());
    for &(h, w, b) in &ids.convs {
        let windows = g.unfold(x, h)?;
        let w = g.param(w);
        let b = g.param(b);
        let conv = g.matmul_nt(windows, w)?;
        let conv = g.add_row_bias(conv, b)?;
        let act = g.relu(conv);
        pooled.push(g.max_rows(act)?);
    }
    let features = g.concat(&pooled)?;
    let features = g.dropout(features, dropout, mode, rng)?;
    let w = g.param(ids.dense_w);
    let b = g.param(ids.dense_b);
    let logits = g.matvec(w, features)?;
    g.add(logits, b)
}

impl CnnModel {
    pub fn max_window(&self) -> usize {
        self.config.windows.iter().copied().max().unwrap_or(1)
    }

    /// Positive-class probability; `None` for an empty document.
    pub fn probability(&self, doc: &EncodedDocument) -> Result<Option<f64>, ModelError> {
        if doc.empty || doc.length == 0 {
            return Ok(None);
        }
        let mut g = Graph::new(&self.params);
        let tokens = cnn_input(doc, self.max_window());
        let logits = cnn_logits(
            &mut g,
            &self.ids,
            &tokens,
            0.0,
            Mode::Eval,
            &mut rand::rngs::mock::StepRng::new(0, 0),
        )?;
        let p = g.softmax(logits)?;
        Ok(Some(g.value(p).data()[1].f64()))
    }
}
