//! The five subcommands.

pub mod cluster;
pub mod measure;
pub mod search;
pub mod train;
pub mod verify;

use std::path::Path;

use hetrel::eval::RelevanceMatrix;
use hetrel::hetgraph::{HeteroGraph, LabelTable, NodeId};
use hetrel::tensor::Matrix;

use crate::config::Settings;
use crate::error::CliError;

/// Loads the graph and its labels from the `--nodes`/`--edges` flags or
/// their config keys.
pub(crate) fn load_graph_and_labels(
    settings: &Settings,
    nodes_flag: Option<&Path>,
    edges_flag: Option<&Path>,
    directed_flag: bool,
) -> Result<(HeteroGraph, LabelTable), CliError> {
    let nodes = settings.required_path(nodes_flag, "nodes")?;
    let edges = settings.required_path(edges_flag, "edges")?;
    let directed = settings.directed(directed_flag)?;
    Ok(hetrel::hetgraph::load_dataset(&nodes, &edges, !directed)?)
}

/// Sigmoid-inner-product scores between the embedding rows of a node
/// subset, indexed by those nodes.
pub(crate) fn relevance_over(
    embeddings: &Matrix,
    pool: Vec<NodeId>,
) -> Result<RelevanceMatrix, CliError> {
    let n = pool.len();
    let mut scores = Matrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let s = hetrel::cpgnn::relevance(embeddings, pool[a].0, pool[b].0)?;
            scores.set(a, b, s);
            scores.set(b, a, s);
        }
    }
    Ok(RelevanceMatrix::new(pool, scores)?)
}
