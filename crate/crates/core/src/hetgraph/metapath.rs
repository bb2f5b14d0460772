//! Meta-paths: alternating node-type / relation templates such as
//! `A-writes-P-writes^-1-A`. A `^-1` suffix walks a relation against its
//! direction; if the graph already has a relation literally named with the
//! suffix (as undirected loads do), that relation is used directly.

use super::graph::{GraphError, HeteroGraph, RelationId, TypeId};

/// One hop of a meta-path: a relation, possibly traversed in reverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathStep {
    pub relation: RelationId,
    /// Walk edges dst→src instead of src→dst.
    pub reversed: bool,
}

/// A typed path template `A_0 -R_1- A_1 - … -R_k- A_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetaPath {
    node_types: Vec<TypeId>,
    steps: Vec<PathStep>,
}

impl MetaPath {
    /// Parses a meta-path string against a graph's type and relation
    /// vocabulary, validating that each relation's signature matches the
    /// node types on either side of it.
    pub fn parse(graph: &HeteroGraph, text: &str) -> Result<MetaPath, GraphError> {
        let err = |message: String| GraphError::MetaPath { message };
        let tokens = tokenize(text);
        if tokens.len() < 3 || tokens.len() % 2 == 0 {
            return Err(err(format!(
                "'{text}' must alternate type-relation-type-…-type (odd token count ≥ 3)"
            )));
        }
        let mut node_types = Vec::with_capacity(tokens.len() / 2 + 1);
        let mut steps = Vec::with_capacity(tokens.len() / 2);
        for (i, token) in tokens.iter().enumerate() {
            if token.is_empty() {
                return Err(err(format!("'{text}' has an empty segment")));
            }
            if i % 2 == 0 {
                let t = graph
                    .type_id(token)
                    .ok_or_else(|| err(format!("unknown node type '{token}' in '{text}'")))?;
                node_types.push(t);
            } else {
                steps.push(resolve_relation(graph, token, text)?);
            }
        }
        let path = MetaPath { node_types, steps };
        path.validate_signatures(graph, text)?;
        Ok(path)
    }

    /// Builds a meta-path directly from resolved ids, with the same
    /// signature validation as [`MetaPath::parse`].
    pub fn from_steps(
        graph: &HeteroGraph,
        node_types: Vec<TypeId>,
        steps: Vec<PathStep>,
    ) -> Result<MetaPath, GraphError> {
        if node_types.len() != steps.len() + 1 || steps.is_empty() {
            return Err(GraphError::MetaPath {
                message: format!(
                    "need one more node type than steps, got {} types and {} steps",
                    node_types.len(),
                    steps.len()
                ),
            });
        }
        let path = MetaPath { node_types, steps };
        path.validate_signatures(graph, "<constructed>")?;
        Ok(path)
    }

    fn validate_signatures(&self, graph: &HeteroGraph, text: &str) -> Result<(), GraphError> {
        for (i, step) in self.steps.iter().enumerate() {
            let info = graph.relation(step.relation);
            let (from, to) = if step.reversed {
                (info.target_type, info.source_type)
            } else {
                (info.source_type, info.target_type)
            };
            if from != self.node_types[i] || to != self.node_types[i + 1] {
                return Err(GraphError::MetaPath {
                    message: format!(
                        "in '{}', step {} ('{}'{}) connects {}→{}, not {}→{}",
                        text,
                        i + 1,
                        info.name,
                        if step.reversed { " reversed" } else { "" },
                        graph.type_name(from),
                        graph.type_name(to),
                        graph.type_name(self.node_types[i]),
                        graph.type_name(self.node_types[i + 1]),
                    ),
                });
            }
        }
        Ok(())
    }

    /// Number of hops `k`.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Node types `A_0..A_k` (one more entry than [`MetaPath::len`]).
    pub fn node_types(&self) -> &[TypeId] {
        &self.node_types
    }

    pub fn steps(&self) -> &[PathStep] {
        &self.steps
    }

    pub fn source_type(&self) -> TypeId {
        self.node_types[0]
    }

    pub fn target_type(&self) -> TypeId {
        *self.node_types.last().unwrap()
    }

    /// Renders the path back into the `A-r-B` string form.
    pub fn display(&self, graph: &HeteroGraph) -> String {
        let mut out = String::new();
        for (i, t) in self.node_types.iter().enumerate() {
            if i > 0 {
                let step = self.steps[i - 1];
                let info = graph.relation(step.relation);
                out.push('-');
                out.push_str(&info.name);
                if step.reversed {
                    out.push_str("^-1");
                }
                out.push('-');
            }
            out.push_str(graph.type_name(*t));
        }
        out
    }
}

/// Splits on `-`, then re-joins the two tokens produced by a `^-1` suffix
/// (splitting `writes^-1` yields `writes^` and `1`).
fn tokenize(text: &str) -> Vec<String> {
    let mut tokens: Vec<String> = Vec::new();
    for part in text.split('-') {
        if let Some(prev) = tokens.last_mut() {
            if prev.ends_with('^') && part == "1" {
                prev.push_str("-1");
                continue;
            }
        }
        tokens.push(part.to_string());
    }
    tokens
}

fn resolve_relation(graph: &HeteroGraph, token: &str, text: &str) -> Result<PathStep, GraphError> {
    if let Some(r) = graph.relation_id(token) {
        return Ok(PathStep { relation: r, reversed: false });
    }
    if let Some(base) = token.strip_suffix("^-1") {
        if let Some(r) = graph.relation_id(base) {
            return Ok(PathStep { relation: r, reversed: true });
        }
    }
    Err(GraphError::MetaPath { message: format!("unknown relation '{token}' in '{text}'") })
}
