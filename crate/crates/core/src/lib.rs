//! Relevance between nodes of heterogeneous graphs.
//!
//! A heterogeneous graph has typed nodes and typed, directed relations.
//! This crate computes how relevant one node is to another in such a graph,
//! four different ways:
//!
//! * [`measures`] — classic baselines: uniform random-walk visit
//!   distributions, pair-wise random-walk meeting probabilities, HeteSim,
//!   and SimRank. These double as brute-force oracles for the model below.
//! * [`cpgnn`] — a trainable context-path model: relation-level attention
//!   over per-type graph summaries, per-relation message passing, a GRU
//!   carry between layers, and a per-type length-attention readout. Its
//!   relevance score for a node pair is the sigmoid of their embedding
//!   inner product.
//! * [`tensor`] — the small reverse-mode autodiff engine the model trains
//!   with: dense 2-D `f64` tensors, a single mutable tape per step, Adam,
//!   and a central-difference gradient checker.
//! * [`eval`] — relevance-search and community-detection harnesses: top-k
//!   search, recall, a cyclic-Jacobi symmetric eigensolver, spectral
//!   clustering with k-means++, partition quality metrics, and CSV export.
//!
//! [`hetgraph`] holds the graph representation itself (TSV loading,
//! meta-paths, stratified label splits, and the intermediate-node
//! augmentation that turns odd-length walks into even-length ones), and
//! [`synthetic`] generates seeded planted-community graphs used by the
//! end-to-end tests.
//!
//! Everything is deterministic given a seed: the only randomness sources
//! are explicitly seeded ChaCha streams, and parallel code (rayon) is
//! restricted to independent per-row fills so reduction order never
//! changes a result.

pub mod cpgnn;
pub mod eval;
pub mod hetgraph;
pub mod measures;
pub mod synthetic;
pub mod tensor;

pub use hetgraph::{HeteroGraph, LabelTable, MetaPath, NodeId, RelationId, Split, TypeId};
pub use tensor::{Matrix, Tape, Tensor};
