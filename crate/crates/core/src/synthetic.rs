//! Seeded synthetic graphs for tests and verification runs: small random
//! heterogeneous graphs, and a planted two-community graph with four node
//! types chained by three relations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hetgraph::{GraphBuilder, HeteroGraph, LabelTable};

/// A random undirected heterogeneous graph with 4..=`max_nodes` nodes,
/// 2–3 node types, and one relation per type pair. Every relation keeps a
/// consistent signature (edges are oriented from the smaller type id).
/// At least one edge is guaranteed; isolated nodes may remain.
pub fn random_graph(seed: u64, max_nodes: usize) -> HeteroGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(4..=max_nodes.max(4));
    let type_count = rng.gen_range(2..=3usize);
    let types: Vec<usize> = (0..n).map(|_| rng.gen_range(0..type_count)).collect();

    let mut b = HeteroGraph::builder(true);
    for (i, t) in types.iter().enumerate() {
        b.add_node(&format!("n{i}"), &format!("T{t}")).unwrap();
    }

    let target_degree = rng.gen_range(1.5..3.5);
    let p = (target_degree / (n as f64 - 1.0)).min(1.0);
    let mut added = false;
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(p) {
                add_typed_edge(&mut b, &types, i, j);
                added = true;
            }
        }
    }
    if !added {
        add_typed_edge(&mut b, &types, 0, 1);
    }
    b.finish()
}

/// Orients the edge so the relation `r<smaller>_<larger>` always runs from
/// the smaller type id to the larger, keeping its signature fixed.
fn add_typed_edge(b: &mut GraphBuilder, types: &[usize], i: usize, j: usize) {
    let (src, dst) = if types[i] <= types[j] { (i, j) } else { (j, i) };
    let relation = format!("r{}_{}", types[src], types[dst]);
    b.add_edge(&format!("n{src}"), &relation, &format!("n{dst}")).unwrap();
}

/// Shape of [`planted_community_graph`]: 200 nodes in four types
/// A(80)–B(60)–C(40)–D(20) chained by relations ab, bc, cd. Two
/// communities split every type in half; only type-A nodes carry labels.
pub const PLANTED_TYPE_SIZES: [(&str, usize); 4] =
    [("A", 80), ("B", 60), ("C", 40), ("D", 20)];

/// Probability of an edge between same-community nodes of adjacent types.
pub const PLANTED_INTRA_PROB: f64 = 0.18;
/// Cross-community edges are this fraction of the intra-community rate.
pub const PLANTED_INTER_RATIO: f64 = 0.04;

/// A planted two-community heterogeneous graph.
///
/// Each type's first half belongs to community 0, the second half to
/// community 1. Adjacent-type node pairs are joined with probability
/// [`PLANTED_INTRA_PROB`] inside a community and
/// [`PLANTED_INTRA_PROB`]·[`PLANTED_INTER_RATIO`] across. Nodes the
/// sampler leaves isolated get one forced same-community edge, so every
/// node participates in walks. The 80 type-A nodes are labeled with their
/// community; everything else is unlabeled.
pub fn planted_community_graph(seed: u64) -> (HeteroGraph, LabelTable) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = HeteroGraph::builder(true);
    let mut names: Vec<Vec<String>> = Vec::new();
    for (type_name, size) in PLANTED_TYPE_SIZES {
        let mut of_type = Vec::with_capacity(size);
        for i in 0..size {
            let name = format!("{}{}", type_name.to_lowercase(), i);
            b.add_node(&name, type_name).unwrap();
            of_type.push(name);
        }
        names.push(of_type);
    }

    let community = |type_idx: usize, i: usize| -> usize {
        usize::from(i >= PLANTED_TYPE_SIZES[type_idx].1 / 2)
    };

    let relations = ["ab", "bc", "cd"];
    let mut degree: Vec<Vec<usize>> = names.iter().map(|ns| vec![0; ns.len()]).collect();
    for (pair, relation) in relations.iter().enumerate() {
        let (left, right) = (pair, pair + 1);
        for i in 0..names[left].len() {
            for j in 0..names[right].len() {
                let p = if community(left, i) == community(right, j) {
                    PLANTED_INTRA_PROB
                } else {
                    PLANTED_INTRA_PROB * PLANTED_INTER_RATIO
                };
                if rng.gen_bool(p) {
                    b.add_edge(&names[left][i], relation, &names[right][j]).unwrap();
                    degree[left][i] += 1;
                    degree[right][j] += 1;
                }
            }
        }
    }

    // Give isolated nodes one same-community edge to the neighbouring type
    // (types A..C attach rightward, D attaches leftward).
    for t in 0..names.len() {
        for i in 0..names[t].len() {
            if degree[t][i] > 0 {
                continue;
            }
            let (other, relation, node_is_src) =
                if t + 1 < names.len() { (t + 1, relations[t], true) } else { (t - 1, relations[t - 1], false) };
            let half = PLANTED_TYPE_SIZES[other].1 / 2;
            let offset = rng.gen_range(0..half);
            let j = community(t, i) * half + offset;
            if node_is_src {
                b.add_edge(&names[t][i], relation, &names[other][j]).unwrap();
            } else {
                b.add_edge(&names[other][j], relation, &names[t][i]).unwrap();
            }
            degree[t][i] += 1;
            degree[other][j] += 1;
        }
    }

    let graph = b.finish();
    let mut labels = LabelTable::new();
    for (i, name) in names[0].iter().enumerate() {
        let node = graph.node_id(name).unwrap();
        labels.set_label(node, &format!("community{}", community(0, i)));
    }
    (graph, labels)
}
