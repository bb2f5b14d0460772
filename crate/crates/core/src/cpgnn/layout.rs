//! Precomputed index structures a forward pass needs from the graph.
//!
//! Everything here is proportional to `|V| + |E| + |A|^2 + |R|`, so holding
//! a layout does not change the asymptotic memory of graph + model.

use crate::hetgraph::{HeteroGraph, NodeId, TypeId};

/// One (source type, target type) pair with at least one relation, plus the
/// relations that realise it.
pub(crate) struct TypePair {
    pub source: usize,
    pub target: usize,
    pub relations: Vec<usize>,
}

/// Graph indices in the shape the layer computation consumes.
pub(crate) struct GraphLayout {
    pub node_count: usize,
    pub type_count: usize,
    /// Node row indices per type, ascending.
    pub type_rows: Vec<Vec<usize>>,
    /// Per type: a 0/1 row weight vector over all nodes selecting that type.
    pub type_masks: Vec<Vec<f64>>,
    /// 1.0 for nodes with at least one incoming edge, else 0.0; rows of
    /// nodes without incoming messages are zeroed before the GRU carry.
    pub in_mask: Vec<f64>,
    /// Per relation: `(target, source)` row pairs, one per directed edge.
    pub rel_edges: Vec<Vec<(usize, usize)>>,
    /// Per relation: how many edges of that relation enter each node.
    pub rel_in_counts: Vec<Vec<f64>>,
    /// All realised (source, target) type pairs, ordered by first relation.
    pub pairs: Vec<TypePair>,
    /// Pair indices grouped by target type; the per-target attention
    /// softmax runs over exactly these entries.
    pub pairs_by_target: Vec<Vec<usize>>,
}

impl GraphLayout {
    pub fn new(g: &HeteroGraph) -> Self {
        let node_count = g.node_count();
        let type_count = g.type_count();
        let type_rows: Vec<Vec<usize>> = (0..type_count)
            .map(|t| g.nodes_of_type(TypeId(t)).iter().map(|v| v.0).collect())
            .collect();
        let type_masks = type_rows
            .iter()
            .map(|rows| {
                let mut mask = vec![0.0; node_count];
                for &r in rows {
                    mask[r] = 1.0;
                }
                mask
            })
            .collect();
        let in_mask =
            (0..node_count).map(|v| if g.in_degree(NodeId(v)) > 0 { 1.0 } else { 0.0 }).collect();

        let mut rel_edges = Vec::with_capacity(g.relation_count());
        let mut rel_in_counts = Vec::with_capacity(g.relation_count());
        let mut pairs: Vec<TypePair> = Vec::new();
        for (rid, info) in g.relations() {
            let edges: Vec<(usize, usize)> =
                g.relation_edges(rid).iter().map(|&(src, dst)| (dst.0, src.0)).collect();
            let mut counts = vec![0.0; node_count];
            for &(dst, _) in &edges {
                counts[dst] += 1.0;
            }
            rel_edges.push(edges);
            rel_in_counts.push(counts);

            let (s, t) = (info.source_type.0, info.target_type.0);
            match pairs.iter_mut().find(|p| p.source == s && p.target == t) {
                Some(pair) => pair.relations.push(rid.0),
                None => pairs.push(TypePair { source: s, target: t, relations: vec![rid.0] }),
            }
        }

        let mut pairs_by_target = vec![Vec::new(); type_count];
        for (i, pair) in pairs.iter().enumerate() {
            pairs_by_target[pair.target].push(i);
        }

        Self {
            node_count,
            type_count,
            type_rows,
            type_masks,
            in_mask,
            rel_edges,
            rel_in_counts,
            pairs,
            pairs_by_target,
        }
    }

    /// Total entries held across all index vectors; used to assert that
    /// memory stays linear in `|V| + |E|`.
    #[cfg(test)]
    pub fn entry_count(&self) -> usize {
        self.type_rows.iter().map(Vec::len).sum::<usize>()
            + self.type_masks.iter().map(Vec::len).sum::<usize>()
            + self.in_mask.len()
            + self.rel_edges.iter().map(|e| 2 * e.len()).sum::<usize>()
            + self.rel_in_counts.iter().map(Vec::len).sum::<usize>()
            + self.pairs.iter().map(|p| 2 + p.relations.len()).sum::<usize>()
            + self.pairs_by_target.iter().map(Vec::len).sum::<usize>()
    }
}
