//! Hierarchical attention network: word-level and sentence-level
//! bidirectional GRUs, each followed by additive attention pooling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::tensor::{
    glorot, uniform, Graph, GruParams, Mode, NodeId, ParamId, ParamSet, Scalar, Tensor, TensorError, RECURRENT_INIT,
};
use crate::text::{EmbeddingTable, EncodedDocument};

use super::cnn::add_embedding;
use super::ModelError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HanConfig {
    /// Per-direction GRU width; annotations and attention vectors are twice this.
    pub hidden: usize,
    pub dropout: f64,
}

impl Default for HanConfig {
    fn default() -> Self {
        HanConfig {
            hidden: 50,
            dropout: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionIds {
    pub proj_w: ParamId,
    pub proj_b: ParamId,
    pub context: ParamId,
}

impl AttentionIds {
    fn init<R: Rng + ?Sized>(params: &mut ParamSet<f32>, prefix: &str, dim: usize, rng: &mut R) -> Self {
        AttentionIds {
            proj_w: params.add(format!("{prefix}.w"), uniform(&[dim, dim], RECURRENT_INIT, rng)),
            proj_b: params.add(format!("{prefix}.b"), uniform(&[dim], RECURRENT_INIT, rng)),
            context: params.add(format!("{prefix}.context"), uniform(&[dim], RECURRENT_INIT, rng)),
        }
    }

    fn lookup(params: &ParamSet<f32>, prefix: &str) -> Option<Self> {
        Some(AttentionIds {
            proj_w: params.id(&format!("{prefix}.w"))?,
            proj_b: params.id(&format!("{prefix}.b"))?,
            context: params.id(&format!("{prefix}.context"))?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HanIds {
    pub embedding: ParamId,
    pub word_fwd: GruParams,
    pub word_bwd: GruParams,
    pub word_att: AttentionIds,
    pub sent_fwd: GruParams,
    pub sent_bwd: GruParams,
    pub sent_att: AttentionIds,
    pub dense_w: ParamId,
    pub dense_b: ParamId,
}

#[derive(Clone, Debug)]
pub struct HanModel {
    pub config: HanConfig,
    pub params: ParamSet<f32>,
    pub ids: HanIds,
}

impl HanModel {
    pub fn new<R: Rng + ?Sized>(
        config: HanConfig,
        embeddings: EmbeddingTable,
        rng: &mut R,
    ) -> Result<Self, ModelError> {
        if config.hidden == 0 {
            return Err(ModelError::Usage("HAN hidden size must be positive".into()));
        }
        let d = embeddings.dim();
        let h = config.hidden;
        let mut params = ParamSet::new();
        let embedding = add_embedding(&mut params, "han.embedding", embeddings);
        let word_fwd = GruParams::init(&mut params, "han.word_fwd", d, h, rng);
        let word_bwd = GruParams::init(&mut params, "han.word_bwd", d, h, rng);
        let word_att = AttentionIds::init(&mut params, "han.word_att", 2 * h, rng);
        let sent_fwd = GruParams::init(&mut params, "han.sent_fwd", 2 * h, h, rng);
        let sent_bwd = GruParams::init(&mut params, "han.sent_bwd", 2 * h, h, rng);
        let sent_att = AttentionIds::init(&mut params, "han.sent_att", 2 * h, rng);
        let dense_w = params.add("han.dense.w", glorot(&[2, 2 * h], 2 * h, 2, rng));
        let dense_b = params.add("han.dense.b", Tensor::zeros(&[2]));
        Ok(HanModel {
            config,
            params,
            ids: HanIds {
                embedding,
                word_fwd,
                word_bwd,
                word_att,
                sent_fwd,
                sent_bwd,
                sent_att,
                dense_w,
                dense_b,
            },
        })
    }

    pub fn from_params(config: HanConfig, params: ParamSet<f32>) -> Result<Self, ModelError> {
        let missing = |what: &str| ModelError::Format(format!("missing HAN parameters {what}"));
        let gru = |p: &str| GruParams::lookup(&params, p).ok_or_else(|| missing(p));
        let att = |p: &str| AttentionIds::lookup(&params, p).ok_or_else(|| missing(p));
        let id = |p: &str| params.id(p).ok_or_else(|| missing(p));
        let ids = HanIds {
            embedding: id("han.embedding")?,
            word_fwd: gru("han.word_fwd")?,
            word_bwd: gru("han.word_bwd")?,
            word_att: att("han.word_att")?,
            sent_fwd: gru("han.sent_fwd")?,
            sent_bwd: gru("han.sent_bwd")?,
            sent_att: att("han.sent_att")?,
            dense_w: id("han.dense.w")?,
            dense_b: id("han.dense.b")?,
        };
        Ok(HanModel { config, params, ids })
    }
}

/// Attention pooling over annotation rows: u = tanh(H·Wᵀ + b),
/// α = softmax(u·context), output Σ α_t h_t. Returns (vector, α).
pub fn attend<T: Scalar>(
    g: &mut Graph<'_, T>,
    rows: &[NodeId],
    att: &AttentionIds,
) -> Result<(NodeId, NodeId), TensorError> {
    let h = g.stack_rows(rows)?;
    let w = g.param(att.proj_w);
    let b = g.param(att.proj_b);
    let ctx = g.param(att.context);
    let proj = g.matmul_nt(h, w)?;
    let proj = g.add_row_bias(proj, b)?;
    let u = g.tanh(proj);
    let scores = g.matvec(u, ctx)?;
    let alpha = g.softmax(scores)?;
    let pooled = g.vecmat(alpha, h)?;
    Ok((pooled, alpha))
}

fn bi_gru<T: Scalar>(
    g: &mut Graph<'_, T>,
    xs: &[NodeId],
    fwd: &GruParams,
    bwd: &GruParams,
) -> Result<Vec<NodeId>, TensorError> {
    let f = fwd.run(g, xs, false)?;
    let b = bwd.run(g, xs, true)?;
    f.iter().zip(&b).map(|(&f, &b)| g.concat(&[f, b])).collect()
}

/// Graph nodes of one HAN forward pass.
pub struct HanOutput {
    pub logits: NodeId,
    /// One attention distribution per sentence.
    pub word_attention: Vec<NodeId>,
    pub sentence_attention: NodeId,
    pub sentence_vectors: Vec<NodeId>,
    pub document_vector: NodeId,
}

/// Builds the HAN forward pass over non-empty sentences of token indices.
pub fn han_forward<T: Scalar, R: Rng + ?Sized>(
    g: &mut Graph<'_, T>,
    ids: &HanIds,
    sentences: &[Vec<usize>],
    dropout: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<HanOutput, TensorError> {
    if sentences.is_empty() || sentences.iter().any(Vec::is_empty) {
        return Err(TensorError::Usage("HAN input needs non-empty sentences".into()));
    }
    let mut sentence_vectors = Vec::with_capacity(sentences.len());
    let mut word_attention = Vec::with_capacity(sentences.len());
    for words in sentences {
        let x = g.gather(ids.embedding, words)?;
        let xs: Vec<NodeId> = (0..words.len()).map(|t| g.row(x, t)).collect::<Result<_, _>>()?;
        let annotations = bi_gru(g, &xs, &ids.word_fwd, &ids.word_bwd)?;
        let (s, alpha) = attend(g, &annotations, &ids.word_att)?;
        sentence_vectors.push(s);
        word_attention.push(alpha);
    }
    let annotations = bi_gru(g, &sentence_vectors, &ids.sent_fwd, &ids.sent_bwd)?;
    let (doc, sentence_attention) = attend(g, &annotations, &ids.sent_att)?;
    let dropped = g.dropout(doc, dropout, mode, rng)?;
    let w = g.param(ids.dense_w);
    let b = g.param(ids.dense_b);
    let logits = g.matvec(w, dropped)?;
    let logits = g.add(logits, b)?;
    Ok(HanOutput {
        logits,
        word_attention,
        sentence_attention,
        sentence_vectors,
        document_vector: doc,
    })
}

/// Eval-mode result for one document.
#[derive(Clone, Debug, PartialEq)]
pub struct HanPrediction {
    pub probability: f64,
    pub word_attention: Vec<Vec<f64>>,
    pub sentence_attention: Vec<f64>,
}

impl HanModel {
    pub fn predict_with_attention(&self, doc: &EncodedDocument) -> Result<Option<HanPrediction>, ModelError> {
        if doc.empty || doc.sentences.is_empty() {
            return Ok(None);
        }
        let mut g = Graph::new(&self.params);
        let out = han_forward(
            &mut g,
            &self.ids,
            &doc.sentences,
            0.0,
            Mode::Eval,
            &mut rand::rngs::mock::StepRng::new(0, 0),
        )?;
        let p = g.softmax(out.logits)?;
        let collect =
            |g: &Graph<'_, f32>, n: NodeId| g.value(n).data().iter().map(|v| f64::from(*v)).collect::<Vec<_>>();
        Ok(Some(HanPrediction {
            probability: f64::from(g.value(p).data()[1]),
            word_attention: out.word_attention.iter().map(|&n| collect(&g, n)).collect(),
            sentence_attention: collect(&g, out.sentence_attention),
        }))
    }

    pub fn probability(&self, doc: &EncodedDocument) -> Result<Option<f64>, ModelError> {
        Ok(self.predict_with_attention(doc)?.map(|p| p.probability))
    }
}
