//! Top-N relevance search over a score matrix.

use super::{EvalError, RelevanceMatrix};
use crate::hetgraph::{HeteroGraph, LabelTable, NodeId, TypeId};

/// One ranked result.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchHit {
    pub node: NodeId,
    pub score: f64,
}

/// The ranked answer to one query.
#[derive(Clone, Debug)]
pub struct SearchResults {
    pub query: NodeId,
    pub hits: Vec<SearchHit>,
    /// Set when the candidate pool held fewer than the requested N nodes.
    pub short: bool,
}

/// Returns the `n` nodes most relevant to `query`, scored by the matrix.
///
/// The query node itself competes like any other candidate unless
/// `include_query` is off. Candidates can be restricted to one node type.
/// Equal scores are broken by ascending node id, so rankings are total and
/// reproducible. When fewer than `n` candidates exist, all of them are
/// returned and the result is flagged as short.
pub fn top_k_search(
    m: &RelevanceMatrix,
    graph: &HeteroGraph,
    query: NodeId,
    n: usize,
    type_filter: Option<TypeId>,
    include_query: bool,
) -> Result<SearchResults, EvalError> {
    if n == 0 {
        return Err(EvalError::InvalidArgument {
            message: "requested zero results".into(),
        });
    }
    let Some(q_row) = m.position_of(query) else {
        return Err(EvalError::UnknownNode { index: query.0, count: m.len() });
    };

    let mut hits: Vec<SearchHit> = m
        .node_index()
        .iter()
        .enumerate()
        .filter(|&(_, &node)| include_query || node != query)
        .filter(|&(_, &node)| type_filter.map_or(true, |t| graph.node_type(node) == t))
        .map(|(row, &node)| SearchHit { node, score: m.score_at(q_row, row) })
        .collect();
    hits.sort_by(|a, b| {
        b.score.partial_cmp(&a.score).expect("scores are finite").then(a.node.0.cmp(&b.node.0))
    });

    let short = hits.len() < n;
    hits.truncate(n);
    Ok(SearchResults { query, hits, short })
}

/// The fraction of the `n` requested results that carry the query's label.
///
/// The divisor is always `n`: a short result list can only lower recall.
/// Results without a label never match. The query must be labeled.
pub fn recall_at_n(
    results: &SearchResults,
    labels: &LabelTable,
    n: usize,
) -> Result<f64, EvalError> {
    if n == 0 {
        return Err(EvalError::InvalidArgument {
            message: "recall over zero results is undefined".into(),
        });
    }
    let Some(want) = labels.label_of(results.query) else {
        return Err(EvalError::UnlabeledQuery { name: format!("{}", results.query.0) });
    };
    let matched = results
        .hits
        .iter()
        .take(n)
        .filter(|hit| labels.label_of(hit.node) == Some(want))
        .count();
    Ok(matched as f64 / n as f64)
}
