//! Dense arrays, a recorded value graph with reverse-mode gradients, the GRU
//! cell, dropout, Adam, gradient checking and the checkpoint container.

mod adam;
mod array;
mod checkpoint;
mod dropout;
mod gradcheck;
mod graph;
mod gru;
mod init;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use array::{matmul, softmax, Scalar, Tensor};
pub use checkpoint::{
    read_checkpoint, write_checkpoint, CheckpointError, CheckpointHeader, ParamShape, FORMAT_VERSION, MAGIC,
};
pub use dropout::dropout;
pub use gradcheck::{check_against, grad_check, relative_error, GradCheckReport, ParamCheck};
pub use graph::{Gradients, Graph, Mode, NodeId, ParamEntry, ParamId, ParamSet};
pub use gru::{gru_step, GruParams, RECURRENT_INIT};
pub use init::{glorot, uniform};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TensorError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("loss must be a scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("non-finite gradient at node {node} ({op})")]
    NonFinite { node: usize, op: &'static str },
    #[error("usage error: {0}")]
    Usage(String),
}
