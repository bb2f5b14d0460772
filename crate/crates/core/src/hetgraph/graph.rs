//! The heterogeneous graph: typed nodes, typed directed relations, and
//! per-relation adjacency in both directions.

use std::collections::HashMap;

use thiserror::Error;

/// Dense node index. String ids from files map to indices in file order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

/// Dense node-type index, in order of first appearance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeId(pub usize);

/// Dense relation index, in order of first appearance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelationId(pub usize);

/// One directed edge `src --relation--> dst`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub src: NodeId,
    pub relation: RelationId,
    pub dst: NodeId,
}

/// A relation and its fixed type signature: every edge of the relation runs
/// from a `source_type` node to a `target_type` node.
#[derive(Clone, Debug)]
pub struct RelationInfo {
    pub name: String,
    pub source_type: TypeId,
    pub target_type: TypeId,
    /// True for the `name^-1` twin synthesised while loading an undirected
    /// graph (such edges are skipped when re-serialising).
    pub auto_reverse: bool,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed line, expected {expected}")]
    MalformedLine { path: String, line: usize, expected: &'static str },
    #[error("{path}:{line}: duplicate node id '{name}'")]
    DuplicateNode { path: String, line: usize, name: String },
    #[error("{path}:{line}: edge references unknown node '{name}'")]
    UnknownNode { path: String, line: usize, name: String },
    #[error(
        "{path}:{line}: relation '{relation}' used with signature {found}, \
         but it was established as {expected}"
    )]
    SignatureConflict { path: String, line: usize, relation: String, expected: String, found: String },
    #[error(
        "graph is not heterogeneous: {types} node type(s) plus {relations} relation(s) \
         must exceed 2"
    )]
    NotHeterogeneous { types: usize, relations: usize },
    #[error("node type '{type_name}' has only {count} labeled node(s); stratified splitting needs at least 4")]
    TooFewLabeled { type_name: String, count: usize },
    #[error("label table has no labeled nodes to split")]
    NoLabels,
    #[error("meta-path: {message}")]
    MetaPath { message: String },
    #[error("unknown node id '{name}'")]
    NoSuchNode { name: String },
}

/// An immutable heterogeneous graph.
///
/// Nodes and relations are referred to by dense ids; names are kept for I/O.
/// Undirected input is stored as two directed edges: the listed direction
/// under the listed relation, and the opposite direction under a synthesised
/// `<relation>^-1` twin, so that every relation keeps a fixed
/// (source-type, target-type) signature even across types.
#[derive(Clone, Debug)]
pub struct HeteroGraph {
    node_names: Vec<String>,
    node_index: HashMap<String, NodeId>,
    node_types: Vec<TypeId>,
    type_names: Vec<String>,
    type_index: HashMap<String, TypeId>,
    relations: Vec<RelationInfo>,
    relation_index: HashMap<String, RelationId>,
    edges: Vec<Edge>,
    out_adj: Vec<Vec<(RelationId, NodeId)>>,
    in_adj: Vec<Vec<(RelationId, NodeId)>>,
    edges_by_relation: Vec<Vec<(NodeId, NodeId)>>,
    nodes_by_type: Vec<Vec<NodeId>>,
    undirected: bool,
}

impl HeteroGraph {
    /// Starts building a graph. With `undirected` set, every added edge also
    /// adds its reversed twin.
    pub fn builder(undirected: bool) -> GraphBuilder {
        GraphBuilder {
            graph: HeteroGraph {
                node_names: Vec::new(),
                node_index: HashMap::new(),
                node_types: Vec::new(),
                type_names: Vec::new(),
                type_index: HashMap::new(),
                relations: Vec::new(),
                relation_index: HashMap::new(),
                edges: Vec::new(),
                out_adj: Vec::new(),
                in_adj: Vec::new(),
                edges_by_relation: Vec::new(),
                nodes_by_type: Vec::new(),
                undirected,
            },
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    /// Number of directed edges (an undirected input edge counts twice).
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn type_count(&self) -> usize {
        self.type_names.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn is_undirected(&self) -> bool {
        self.undirected
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.node_index.get(name).copied()
    }

    pub fn node_name(&self, v: NodeId) -> &str {
        &self.node_names[v.0]
    }

    pub fn node_type(&self, v: NodeId) -> TypeId {
        self.node_types[v.0]
    }

    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.type_index.get(name).copied()
    }

    pub fn type_name(&self, t: TypeId) -> &str {
        &self.type_names[t.0]
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relation_index.get(name).copied()
    }

    pub fn relation(&self, r: RelationId) -> &RelationInfo {
        &self.relations[r.0]
    }

    pub fn relations(&self) -> impl Iterator<Item = (RelationId, &RelationInfo)> {
        self.relations.iter().enumerate().map(|(i, info)| (RelationId(i), info))
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count()).map(NodeId)
    }

    /// All directed edges in insertion order (reversed twins included).
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Node ids of one type, in index order.
    pub fn nodes_of_type(&self, t: TypeId) -> &[NodeId] {
        &self.nodes_by_type[t.0]
    }

    /// Number of outgoing directed edges across all relations.
    pub fn out_degree(&self, v: NodeId) -> usize {
        self.out_adj[v.0].len()
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        self.in_adj[v.0].len()
    }

    /// Outgoing `(relation, neighbour)` pairs in insertion order.
    pub fn out_edges(&self, v: NodeId) -> &[(RelationId, NodeId)] {
        &self.out_adj[v.0]
    }

    pub fn in_edges(&self, v: NodeId) -> &[(RelationId, NodeId)] {
        &self.in_adj[v.0]
    }

    /// Out-neighbours of `v`, optionally restricted to one relation, in
    /// insertion order. Multi-edges yield the neighbour once per edge.
    pub fn neighbors(&self, v: NodeId, relation: Option<RelationId>) -> impl Iterator<Item = NodeId> + '_ {
        self.out_adj[v.0]
            .iter()
            .filter(move |(r, _)| relation.map_or(true, |want| *r == want))
            .map(|&(_, n)| n)
    }

    /// In-neighbours of `v`, optionally restricted to one relation.
    pub fn in_neighbors(&self, v: NodeId, relation: Option<RelationId>) -> impl Iterator<Item = NodeId> + '_ {
        self.in_adj[v.0]
            .iter()
            .filter(move |(r, _)| relation.map_or(true, |want| *r == want))
            .map(|&(_, n)| n)
    }

    /// All `(src, dst)` pairs of one relation, in insertion order.
    pub fn relation_edges(&self, r: RelationId) -> &[(NodeId, NodeId)] {
        &self.edges_by_relation[r.0]
    }

    /// Checks the heterogeneity requirement: node types plus relations > 2.
    pub fn check_heterogeneous(&self) -> Result<(), GraphError> {
        if self.type_count() + self.relation_count() <= 2 {
            return Err(GraphError::NotHeterogeneous {
                types: self.type_count(),
                relations: self.relation_count(),
            });
        }
        Ok(())
    }
}

/// Mutable construction state; [`GraphBuilder::finish`] freezes the graph.
pub struct GraphBuilder {
    graph: HeteroGraph,
}

/// Where an edge came from, for error messages (file loading passes the
/// real path and line; programmatic construction uses placeholders).
#[derive(Clone, Copy)]
pub(crate) struct Provenance<'a> {
    pub path: &'a str,
    pub line: usize,
}

impl Default for Provenance<'_> {
    fn default() -> Self {
        Provenance { path: "<builder>", line: 0 }
    }
}

impl GraphBuilder {
    /// Adds a node. Node ids are assigned densely in insertion order.
    pub fn add_node(&mut self, name: &str, type_name: &str) -> Result<NodeId, GraphError> {
        self.add_node_at(name, type_name, Provenance::default())
    }

    pub(crate) fn add_node_at(
        &mut self,
        name: &str,
        type_name: &str,
        at: Provenance<'_>,
    ) -> Result<NodeId, GraphError> {
        let g = &mut self.graph;
        if g.node_index.contains_key(name) {
            return Err(GraphError::DuplicateNode {
                path: at.path.to_string(),
                line: at.line,
                name: name.to_string(),
            });
        }
        let type_id = intern_type(g, type_name);
        let id = NodeId(g.node_names.len());
        g.node_names.push(name.to_string());
        g.node_index.insert(name.to_string(), id);
        g.node_types.push(type_id);
        g.nodes_by_type[type_id.0].push(id);
        g.out_adj.push(Vec::new());
        g.in_adj.push(Vec::new());
        Ok(id)
    }

    /// Adds an edge between existing nodes. In undirected mode the reversed
    /// twin (under `<relation>^-1`) is added as well.
    pub fn add_edge(&mut self, src: &str, relation: &str, dst: &str) -> Result<(), GraphError> {
        self.add_edge_at(src, relation, dst, Provenance::default())
    }

    pub(crate) fn add_edge_at(
        &mut self,
        src: &str,
        relation: &str,
        dst: &str,
        at: Provenance<'_>,
    ) -> Result<(), GraphError> {
        let src_id = self.lookup_node(src, at)?;
        let dst_id = self.lookup_node(dst, at)?;
        self.insert_directed(src_id, relation, dst_id, false, at)?;
        if self.graph.undirected {
            let twin = format!("{relation}^-1");
            self.insert_directed(dst_id, &twin, src_id, true, at)?;
        }
        Ok(())
    }

    fn lookup_node(&self, name: &str, at: Provenance<'_>) -> Result<NodeId, GraphError> {
        self.graph.node_id(name).ok_or_else(|| GraphError::UnknownNode {
            path: at.path.to_string(),
            line: at.line,
            name: name.to_string(),
        })
    }

    fn insert_directed(
        &mut self,
        src: NodeId,
        relation: &str,
        dst: NodeId,
        auto_reverse: bool,
        at: Provenance<'_>,
    ) -> Result<(), GraphError> {
        let g = &mut self.graph;
        let src_type = g.node_types[src.0];
        let dst_type = g.node_types[dst.0];
        let rel_id = match g.relation_index.get(relation) {
            Some(&r) => {
                let info = &g.relations[r.0];
                if info.source_type != src_type || info.target_type != dst_type {
                    return Err(GraphError::SignatureConflict {
                        path: at.path.to_string(),
                        line: at.line,
                        relation: relation.to_string(),
                        expected: format!(
                            "({}, {})",
                            g.type_names[info.source_type.0], g.type_names[info.target_type.0]
                        ),
                        found: format!(
                            "({}, {})",
                            g.type_names[src_type.0], g.type_names[dst_type.0]
                        ),
                    });
                }
                r
            }
            None => {
                let r = RelationId(g.relations.len());
                g.relations.push(RelationInfo {
                    name: relation.to_string(),
                    source_type: src_type,
                    target_type: dst_type,
                    auto_reverse,
                });
                g.relation_index.insert(relation.to_string(), r);
                g.edges_by_relation.push(Vec::new());
                r
            }
        };
        g.edges.push(Edge { src, relation: rel_id, dst });
        g.out_adj[src.0].push((rel_id, dst));
        g.in_adj[dst.0].push((rel_id, src));
        g.edges_by_relation[rel_id.0].push((src, dst));
        Ok(())
    }

    pub fn finish(self) -> HeteroGraph {
        self.graph
    }
}

fn intern_type(g: &mut HeteroGraph, name: &str) -> TypeId {
    match g.type_index.get(name) {
        Some(&t) => t,
        None => {
            let t = TypeId(g.type_names.len());
            g.type_names.push(name.to_string());
            g.type_index.insert(name.to_string(), t);
            g.nodes_by_type.push(Vec::new());
            t
        }
    }
}
