//! Heterogeneous graphs: typed nodes, typed directed relations, TSV
//! ingestion, label splits, meta-paths, and the edge-splitting augmentation
//! used to turn odd-length paths into even-length ones.

mod augment;
mod graph;
mod labels;
mod loader;
mod metapath;

pub use augment::augment_with_intermediates;
pub(crate) use augment::augment_with_relation_map;
pub use graph::{
    Edge, GraphBuilder, GraphError, HeteroGraph, NodeId, RelationId, RelationInfo, TypeId,
};
pub use labels::{split_labels, LabelId, LabelTable, Split};
pub use loader::{load_dataset, load_graph, write_edges_tsv, write_nodes_tsv};
pub use metapath::{MetaPath, PathStep};
