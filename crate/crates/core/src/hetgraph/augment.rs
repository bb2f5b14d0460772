//! Edge-splitting augmentation: every directed edge `u --r--> v` is
//! replaced by `u --r:src--> e --r:dst--> v` through a fresh intermediate
//! node of type `E_<r>`.
//!
//! Each intermediate has in-degree and out-degree exactly 1, so a uniform
//! random walk leaves an original node, deterministically crosses one
//! intermediate, and arrives at an original node. Two augmented steps
//! therefore reproduce one original step with identical probability — this
//! is what makes 2k-layer relevance on the augmented graph match k-layer
//! relevance on the original. (A single shared intermediate per undirected
//! edge would not: the walk could return to where it came from, turning the
//! chain lazy.)

use std::collections::HashSet;

use super::graph::{HeteroGraph, RelationId, TypeId};

/// What one original relation expands into inside the augmented graph.
#[derive(Clone, Copy, Debug)]
pub(crate) struct AugmentedRelation {
    /// `<r>:src`, from the original source type into the intermediates.
    pub first: RelationId,
    /// `<r>:dst`, from the intermediates into the original target type.
    pub second: RelationId,
    /// The `E_<r>` intermediate type.
    pub mid_type: TypeId,
}

/// Splits every directed edge with an intermediate node.
///
/// Original nodes keep their names, types, and dense ids (they are inserted
/// first, in order). The result is a directed graph with
/// `|V| + |E|` nodes and `2|E|` directed edges, where `|E|` counts directed
/// edges of the input.
pub fn augment_with_intermediates(g: &HeteroGraph) -> HeteroGraph {
    augment_with_relation_map(g).0
}

/// [`augment_with_intermediates`] plus, per original relation id, the ids
/// of its `:src`/`:dst` halves and intermediate type in the new graph.
pub(crate) fn augment_with_relation_map(
    g: &HeteroGraph,
) -> (HeteroGraph, Vec<AugmentedRelation>) {
    let mut b = HeteroGraph::builder(false);
    for v in g.nodes() {
        b.add_node(g.node_name(v), g.type_name(g.node_type(v)))
            .expect("original node names are unique");
    }

    // Synthesised type names may not collide with original types.
    let mid_type_names: Vec<String> = g
        .relations()
        .map(|(_, info)| {
            let mut name = format!("E_{}", info.name);
            while g.type_id(&name).is_some() {
                name.push('\'');
            }
            name
        })
        .collect();

    let used: HashSet<&str> = g.nodes().map(|v| g.node_name(v)).collect();
    let mut inter_names: Vec<String> = Vec::with_capacity(g.edge_count());
    for (idx, edge) in g.edges().iter().enumerate() {
        let info = g.relation(edge.relation);
        // The edge index makes the base unique among intermediates; the
        // loop only guards against clashes with original node names.
        let mut name = format!(
            "{}|{}|{}|{}",
            g.node_name(edge.src),
            info.name,
            g.node_name(edge.dst),
            idx
        );
        while used.contains(name.as_str()) {
            name.push('\'');
        }
        inter_names.push(name);
    }

    for (idx, edge) in g.edges().iter().enumerate() {
        let info = g.relation(edge.relation);
        let name = &inter_names[idx];
        b.add_node(name, &mid_type_names[edge.relation.0])
            .expect("intermediate names are fresh");
        b.add_edge(g.node_name(edge.src), &format!("{}:src", info.name), name)
            .expect("endpoints exist and signatures are consistent");
        b.add_edge(name, &format!("{}:dst", info.name), g.node_name(edge.dst))
            .expect("endpoints exist and signatures are consistent");
    }

    let out = b.finish();
    let map = g
        .relations()
        .enumerate()
        .map(|(i, (_, info))| AugmentedRelation {
            first: out
                .relation_id(&format!("{}:src", info.name))
                .expect("every relation has at least one edge"),
            second: out
                .relation_id(&format!("{}:dst", info.name))
                .expect("every relation has at least one edge"),
            mid_type: out.type_id(&mid_type_names[i]).expect("intermediate type exists"),
        })
        .collect();
    (out, map)
}
