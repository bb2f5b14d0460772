//! Node labels and the stratified train/validation/test split.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::graph::{GraphError, HeteroGraph, NodeId};

/// Dense label index, in order of first appearance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelId(pub usize);

/// Which partition a labeled node belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

/// Ground-truth labels for a subset of nodes, plus (after
/// [`split_labels`]) a train/val/test assignment per labeled node.
#[derive(Clone, Debug, Default)]
pub struct LabelTable {
    labels: HashMap<NodeId, LabelId>,
    label_names: Vec<String>,
    label_index: HashMap<String, LabelId>,
    splits: HashMap<NodeId, Split>,
}

impl LabelTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Labels one node, interning the label name.
    pub fn set_label(&mut self, node: NodeId, label: &str) {
        let id = match self.label_index.get(label) {
            Some(&id) => id,
            None => {
                let id = LabelId(self.label_names.len());
                self.label_names.push(label.to_string());
                self.label_index.insert(label.to_string(), id);
                id
            }
        };
        self.labels.insert(node, id);
    }

    pub fn label_of(&self, node: NodeId) -> Option<LabelId> {
        self.labels.get(&node).copied()
    }

    pub fn label_name(&self, label: LabelId) -> &str {
        &self.label_names[label.0]
    }

    pub fn label_count(&self) -> usize {
        self.label_names.len()
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.len()
    }

    /// Labeled nodes in ascending node-id order.
    pub fn labeled_nodes(&self) -> Vec<NodeId> {
        let mut nodes: Vec<NodeId> = self.labels.keys().copied().collect();
        nodes.sort();
        nodes
    }

    pub fn split_of(&self, node: NodeId) -> Option<Split> {
        self.splits.get(&node).copied()
    }

    /// Assigns one labeled node to a split directly, for callers that bring
    /// their own partition instead of using [`split_labels`].
    pub fn set_split(&mut self, node: NodeId, split: Split) {
        assert!(self.labels.contains_key(&node), "only labeled nodes can be assigned to a split");
        self.splits.insert(node, split);
    }

    /// Labeled nodes assigned to `split`, in ascending node-id order.
    pub fn nodes_in_split(&self, split: Split) -> Vec<NodeId> {
        let mut nodes: Vec<NodeId> =
            self.splits.iter().filter(|(_, &s)| s == split).map(|(&n, _)| n).collect();
        nodes.sort();
        nodes
    }

    pub fn has_split(&self) -> bool {
        !self.splits.is_empty()
    }
}

/// Assigns every labeled node to train/val/test, stratified by label:
/// within each label class (after a seeded shuffle) the first quarter
/// (rounded down) trains, the next quarter validates, and the remainder
/// tests. The assignment is a pure function of the table and the seed.
///
/// Errors when the table is empty or when any node type that carries
/// labels has fewer than four labeled nodes.
pub fn split_labels(
    labels: &LabelTable,
    graph: &HeteroGraph,
    seed: u64,
) -> Result<LabelTable, GraphError> {
    if labels.labels.is_empty() {
        return Err(GraphError::NoLabels);
    }
    let mut per_type: HashMap<usize, usize> = HashMap::new();
    for node in labels.labels.keys() {
        *per_type.entry(graph.node_type(*node).0).or_insert(0) += 1;
    }
    let mut type_ids: Vec<usize> = per_type.keys().copied().collect();
    type_ids.sort();
    for t in type_ids {
        let count = per_type[&t];
        if count < 4 {
            return Err(GraphError::TooFewLabeled {
                type_name: graph.type_name(super::graph::TypeId(t)).to_string(),
                count,
            });
        }
    }

    let mut out = labels.clone();
    out.splits.clear();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Per label class, in label order, shuffle the (sorted) member list and
    // cut it 25/25/50 with floor rounding for train and val.
    for label_id in 0..labels.label_names.len() {
        let mut members: Vec<NodeId> = labels
            .labels
            .iter()
            .filter(|(_, &l)| l.0 == label_id)
            .map(|(&n, _)| n)
            .collect();
        members.sort();
        members.shuffle(&mut rng);
        let n = members.len();
        let n_train = n / 4;
        let n_val = n / 4;
        for (i, node) in members.into_iter().enumerate() {
            let split = if i < n_train {
                Split::Train
            } else if i < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
            out.splits.insert(node, split);
        }
    }
    Ok(out)
}
