//! Relation-attention graph encoder and its training loop.
//!
//! The model embeds every node of a heterogeneous graph so that the sigmoid
//! of an embedding inner product scores pairwise relevance. Each of the `K`
//! stacked layers aggregates messages along typed relations:
//!
//! * per-type graph summaries (mean of surviving rows under node dropout),
//! * multi-head softmax attention over source types feeding each target type,
//! * relation-specific message weights applied to `[target ‖ source]`
//!   concatenations, emulating an intermediate node on every edge without
//!   materializing it,
//! * a per-head affine + relu, head concatenation, output projection, and a
//!   GRU carry from the previous layer.
//!
//! Layer `k`'s output captures length-`k` context; a per-type length
//! attention combines all `K` readouts into the final embedding matrix.
//! Training contrasts labeled same-class pairs against different-class pairs
//! and pushes self-relevance toward one, with Adam and an early-stopping
//! snapshot on validation loss.

mod io;
mod layer;
mod layout;
mod loss;
mod model;
mod train;

pub use io::{load_model, save_model, ModelFileError};
pub use layer::{
    apply_message_weight, embed_nodes, forward_all, graph_encoder, layer_forward,
    relation_attention, relation_message, relevance, sum_extractor, type_length_combine,
    ForwardOutput, LayerOutput,
};
pub use loss::{loss_self, loss_supervised, supervised_batch, SupervisedBatch};
pub use model::{init_model, GsimModel, TrainConfig};
pub use train::{train, training_loss_gradient_check, EpochStats, TrainOutcome};

use thiserror::Error;

/// Errors from model construction, forward passes, and training.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid configuration: {message}")]
    InvalidConfig { message: String },
    #[error("model does not match graph: {message}")]
    GraphMismatch { message: String },
    #[error("unknown node index {index} for a graph with {count} nodes")]
    UnknownNode { index: usize, count: usize },
    #[error("unknown relation index {index} for a model with {count} relations")]
    UnknownRelation { index: usize, count: usize },
    #[error("non-finite activation at layer {layer} ({context})")]
    NonFiniteActivation { layer: usize, context: String },
    #[error("training aborted at epoch {epoch}: loss is not finite")]
    NonFiniteLoss { epoch: usize },
    #[error("no labeled nodes in the {split} split")]
    EmptySplit { split: String },
    #[error("contrastive loss needs at least 2 distinct labels in the split, found {found}")]
    TooFewClasses { found: usize },
    #[error(transparent)]
    Tensor(#[from] crate::tensor::TensorError),
}
