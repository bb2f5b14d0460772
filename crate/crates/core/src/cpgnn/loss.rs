//! Training objectives: a contrastive loss over labeled node pairs and a
//! self-relevance regulariser.
//!
//! The contrastive term asks, per labeled anchor, that the mean relevance to
//! same-label nodes approach one while the mean relevance to different-label
//! nodes approaches zero, through the log of each side. Anchors lacking
//! either side are masked out entirely (value and gradient). The self term
//! pushes every node's relevance to itself toward one.

use crate::hetgraph::{LabelTable, Split};
use crate::tensor::{Matrix, Tensor};

use super::ModelError;

/// Keeps the log-ratio finite when a mean relevance underflows to zero.
const LOG_GUARD: f64 = 1e-12;

/// Precomputed anchor structure for the contrastive loss on one split.
pub struct SupervisedBatch {
    /// Embedding rows of the split's labeled nodes, ascending.
    pub anchors: Vec<usize>,
    /// `(i, j)` holds `1 / |P(i)|` when anchor `j` shares anchor `i`'s label
    /// (`j != i`), else zero, so a weighted row sum is the positive mean.
    pos_weights: Matrix,
    /// `(i, j)` holds `1 / |N(i)|` when anchor `j` has a different label.
    neg_weights: Matrix,
    /// One per anchor: zero silences anchors without positives or without
    /// negatives in both the loss value and its gradients.
    anchor_mask: Vec<f64>,
}

impl SupervisedBatch {
    /// Anchors that actually contribute to the loss.
    pub fn active_count(&self) -> usize {
        self.anchor_mask.iter().filter(|&&m| m != 0.0).count()
    }
}

/// Builds the anchor structure for the labeled nodes of `split`.
///
/// Errors when the split has no labeled nodes, or when its anchors do not
/// cover at least two distinct labels (nothing to contrast against).
pub fn supervised_batch(labels: &LabelTable, split: Split) -> Result<SupervisedBatch, ModelError> {
    let nodes = labels.nodes_in_split(split);
    if nodes.is_empty() {
        return Err(ModelError::EmptySplit { split: split.to_string() });
    }
    let anchor_labels: Vec<usize> =
        nodes.iter().map(|&n| labels.label_of(n).expect("split nodes are labeled").0).collect();
    let mut distinct: Vec<usize> = anchor_labels.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(ModelError::TooFewClasses { found: distinct.len() });
    }

    let m = nodes.len();
    let mut pos_weights = Matrix::zeros(m, m);
    let mut neg_weights = Matrix::zeros(m, m);
    let mut anchor_mask = vec![0.0; m];
    for i in 0..m {
        let positives: Vec<usize> =
            (0..m).filter(|&j| j != i && anchor_labels[j] == anchor_labels[i]).collect();
        let negatives: Vec<usize> = (0..m).filter(|&j| anchor_labels[j] != anchor_labels[i]).collect();
        if positives.is_empty() || negatives.is_empty() {
            continue;
        }
        anchor_mask[i] = 1.0;
        for &j in &positives {
            pos_weights.set(i, j, 1.0 / positives.len() as f64);
        }
        for &j in &negatives {
            neg_weights.set(i, j, 1.0 / negatives.len() as f64);
        }
    }
    Ok(SupervisedBatch { anchors: nodes.into_iter().map(|n| n.0).collect(), pos_weights, neg_weights, anchor_mask })
}

/// Contrastive loss over the batch, given the full embedding matrix:
///
/// ```text
/// mean over active anchors i of
///     -ln( mean relevance to same-label anchors )
///     -ln( mean (1 - relevance) to different-label anchors )
/// ```
///
/// where relevance is the sigmoid of the embedding inner product. The loss
/// is non-negative: it vanishes only when every positive scores one and
/// every negative scores zero, and sits at `2 ln 2` when all scores are the
/// indifferent one half. Pushing every score high (or low) together cannot
/// reduce it, so the term genuinely contrasts the two sides.
pub fn loss_supervised(embeddings: &Tensor, batch: &SupervisedBatch) -> Result<Tensor, ModelError> {
    let active = batch.active_count();
    if active == 0 {
        return Ok(Tensor::constant(Matrix::zeros(1, 1)));
    }
    let m = batch.anchors.len();
    let temperature = embeddings.shape().1 as f64;
    let gathered = embeddings.gather_rows(&batch.anchors)?;
    let scores =
        gathered.matmul(&gathered.transpose())?.scale(1.0 / temperature).sigmoid();
    let ones = Tensor::constant(Matrix::filled(m, 1, 1.0));
    let pos_mean = scores.hadamard(&Tensor::constant(batch.pos_weights.clone()))?.matmul(&ones)?;
    let neg_mean = scores.hadamard(&Tensor::constant(batch.neg_weights.clone()))?.matmul(&ones)?;
    let pos_ln = pos_mean.add_const(LOG_GUARD).ln();
    // The negative weights of an active anchor sum to one, so the mean of
    // 1 - relevance is 1 - the weighted mean relevance.
    let neg_compl_ln = neg_mean.scale(-1.0).add_const(1.0 + LOG_GUARD).ln();
    let per_anchor = pos_ln.add(&neg_compl_ln)?;
    Ok(per_anchor.row_scale(&batch.anchor_mask)?.sum_all().scale(-1.0 / active as f64))
}

/// Self-relevance loss: the mean over all nodes of one minus the node's
/// relevance to itself (the sigmoid of its width-scaled squared norm).
/// Always in `(0, 0.5]`, approaching zero as self-relevance approaches one.
pub fn loss_self(embeddings: &Tensor) -> Result<Tensor, ModelError> {
    let (n, d) = embeddings.shape();
    if n == 0 {
        return Err(ModelError::InvalidConfig { message: "no embeddings to score".into() });
    }
    let temperature = d as f64;
    let ones = Tensor::constant(Matrix::filled(d, 1, 1.0));
    let self_scores =
        embeddings.hadamard(embeddings)?.matmul(&ones)?.scale(1.0 / temperature).sigmoid();
    Ok(self_scores.sum_all().scale(-1.0 / n as f64).add_const(1.0))
}
