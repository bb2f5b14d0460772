//! Classic relevance measures between nodes, doubling as brute-force
//! oracles: uniform random-walk visit distributions, pair-wise random-walk
//! meeting probabilities (three independently implemented routes), HeteSim
//! over meta-paths, and SimRank.

mod hetesim;
mod randwalk;
mod simrank;

pub use hetesim::hetesim;
pub use randwalk::{
    gnn_identity_embeddings, gnn_identity_relevance, prw, prw_brute, prw_enumerated,
    rw_visit_prob, rw_visit_prob_enumerated, transition_matrix, VisitDistribution,
    ENUMERATION_CAP,
};
pub use simrank::simrank;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("node index {index} is out of range (the graph has {count} nodes)")]
    UnknownNode { index: usize, count: usize },
    #[error("pair-wise random walks need an even total length, got {length}")]
    OddWalkLength { length: usize },
    #[error("walk enumeration exceeded the cap of {cap} walks; use the distribution route")]
    TooManyWalks { cap: u64 },
    #[error("node '{name}' has type {found}, but the meta-path {end} type is {expected}")]
    EndpointTypeMismatch { name: String, end: &'static str, expected: String, found: String },
    #[error("{what} must be {requirement}, got {value}")]
    InvalidParameter { what: &'static str, requirement: &'static str, value: f64 },
}
