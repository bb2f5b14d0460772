//! Evaluation harnesses: relevance search, spectral community detection,
//! clustering metrics, and CSV export of score and attention matrices.

mod eigen;
mod export;
mod kmeans;
mod metrics;
mod search;
mod spectral;

pub use eigen::{symmetric_eigs, Which};
pub use export::{export_attention, export_relevance_matrix, import_relevance_matrix};
pub use metrics::{clustering_metrics, ClusteringMetrics};
pub use search::{recall_at_n, top_k_search, SearchHit, SearchResults};
pub use spectral::{spectral_clustering, SpectralOutcome};

use thiserror::Error;

use crate::hetgraph::NodeId;
use crate::tensor::Matrix;

/// How far apart a matrix entry and its mirror may drift before the matrix
/// stops counting as symmetric.
pub(crate) const SYMMETRY_TOL: f64 = 1e-10;

/// Errors from searching, clustering, and exporting.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid argument: {message}")]
    InvalidArgument { message: String },
    #[error("node {index} is not covered by this matrix ({count} nodes indexed)")]
    UnknownNode { index: usize, count: usize },
    #[error("query node '{name}' has no label")]
    UnlabeledQuery { name: String },
    #[error("matrix is not symmetric: entries ({row}, {col}) and ({col}, {row}) differ by {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },
    #[error("eigensolver did not converge within {sweeps} sweeps (off-diagonal norm {remaining:e})")]
    NoConvergence { sweeps: usize, remaining: f64 },
    #[error("the partition and the label table share no nodes")]
    EmptyIntersection,
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

/// A dense, symmetric matrix of pairwise relevance scores over an ordered
/// set of nodes. Row and column `i` both belong to `node_index[i]`.
#[derive(Clone, Debug)]
pub struct RelevanceMatrix {
    node_index: Vec<NodeId>,
    scores: Matrix,
}

impl RelevanceMatrix {
    /// Wraps a score matrix, checking that it is square, matches the node
    /// list, holds only finite values, and is symmetric within `1e-10`.
    pub fn new(node_index: Vec<NodeId>, scores: Matrix) -> Result<Self, EvalError> {
        let n = node_index.len();
        if scores.shape() != (n, n) {
            return Err(EvalError::InvalidArgument {
                message: format!(
                    "score matrix is {}x{} but {n} nodes are indexed",
                    scores.rows(),
                    scores.cols()
                ),
            });
        }
        if !scores.is_finite() {
            return Err(EvalError::InvalidArgument {
                message: "score matrix holds non-finite values".into(),
            });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let diff = (scores.get(i, j) - scores.get(j, i)).abs();
                if diff > SYMMETRY_TOL {
                    return Err(EvalError::NotSymmetric { row: i, col: j, diff });
                }
            }
        }
        Ok(Self { node_index, scores })
    }

    /// Scores every pair of rows of an embedding matrix through the sigmoid
    /// of the width-scaled inner product — the same convention as the
    /// learned relevance — indexing nodes `0..n` in row order.
    pub fn from_embeddings(embeddings: &Matrix) -> Result<Self, EvalError> {
        let n = embeddings.rows();
        let temperature = embeddings.cols() as f64;
        let mut scores = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let dot: f64 =
                    embeddings.row(i).iter().zip(embeddings.row(j)).map(|(a, b)| a * b).sum();
                let s = crate::tensor::sigmoid(dot / temperature);
                scores.set(i, j, s);
                scores.set(j, i, s);
            }
        }
        Self::new((0..n).map(NodeId).collect(), scores)
    }

    pub fn node_index(&self) -> &[NodeId] {
        &self.node_index
    }

    pub fn len(&self) -> usize {
        self.node_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_index.is_empty()
    }

    pub fn scores(&self) -> &Matrix {
        &self.scores
    }

    /// The score between the nodes at two row positions.
    pub fn score_at(&self, i: usize, j: usize) -> f64 {
        self.scores.get(i, j)
    }

    /// The row position of a node, if it is indexed.
    pub fn position_of(&self, node: NodeId) -> Option<usize> {
        self.node_index.iter().position(|&n| n == node)
    }
}

/// A hard assignment of every indexed node to one of `k` clusters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    node_index: Vec<NodeId>,
    assignment: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Wraps an assignment, checking that every node has a cluster and all
    /// cluster ids lie in `[0, k)`.
    pub fn new(node_index: Vec<NodeId>, assignment: Vec<usize>, k: usize) -> Result<Self, EvalError> {
        if assignment.len() != node_index.len() {
            return Err(EvalError::InvalidArgument {
                message: format!(
                    "{} assignments for {} nodes",
                    assignment.len(),
                    node_index.len()
                ),
            });
        }
        if let Some(&bad) = assignment.iter().find(|&&c| c >= k) {
            return Err(EvalError::InvalidArgument {
                message: format!("cluster id {bad} outside 0..{k}"),
            });
        }
        Ok(Self { node_index, assignment, k })
    }

    pub fn node_index(&self) -> &[NodeId] {
        &self.node_index
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The cluster of a node, if the partition covers it.
    pub fn cluster_of(&self, node: NodeId) -> Option<usize> {
        self.node_index.iter().position(|&n| n == node).map(|i| self.assignment[i])
    }
}
