//! Uniform random walks and walk-meeting relevance.
//!
//! Three independent routes compute the same quantities and cross-check
//! each other in tests:
//!
//! * [`rw_visit_prob`] applies the sparse uniform transition k times;
//! * [`prw_enumerated`] explicitly enumerates every k-step walk (capped);
//! * [`gnn_identity_relevance`] multiplies dense transition matrices, the
//!   way an identity-configured graph network (one-hot embeddings, D⁻¹A
//!   propagation, identity weights and activation) would.
//!
//! Nodes without outgoing edges absorb nothing: their walk mass is
//! dropped, so distributions may total less than 1.

use super::MeasureError;
use crate::hetgraph::{HeteroGraph, NodeId};
use crate::tensor::Matrix;

/// Hard cap on explicitly enumerated walks.
pub const ENUMERATION_CAP: u64 = 1_000_000;

/// Where a k-step uniform random walk from `source` ends up.
#[derive(Clone, Debug)]
pub struct VisitDistribution {
    pub source: NodeId,
    /// Number of steps taken.
    pub length: usize,
    probabilities: Vec<f64>,
}

impl VisitDistribution {
    pub fn prob(&self, v: NodeId) -> f64 {
        self.probabilities[v.0]
    }

    /// Probabilities indexed by node id.
    pub fn as_slice(&self) -> &[f64] {
        &self.probabilities
    }

    /// Total mass; 1 unless a walk can reach a node with no outgoing edges
    /// in fewer than `length` steps.
    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Nodes with non-zero probability, in id order.
    pub fn support(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(i, p)| (NodeId(i), *p))
    }
}

fn check_node(g: &HeteroGraph, v: NodeId) -> Result<(), MeasureError> {
    if v.0 >= g.node_count() {
        return Err(MeasureError::UnknownNode { index: v.0, count: g.node_count() });
    }
    Ok(())
}

/// One uniform step: every node spreads its mass evenly over its
/// out-neighbours (all relations pooled); dangling mass disappears.
pub(crate) fn step_uniform(g: &HeteroGraph, current: &[f64]) -> Vec<f64> {
    let mut next = vec![0.0; g.node_count()];
    for (u, &p) in current.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let degree = g.out_degree(NodeId(u));
        if degree == 0 {
            continue;
        }
        let share = p / degree as f64;
        for &(_, n) in g.out_edges(NodeId(u)) {
            next[n.0] += share;
        }
    }
    next
}

/// Exact k-step uniform random-walk distribution from `v`, by k sparse
/// transition applications.
pub fn rw_visit_prob(
    g: &HeteroGraph,
    v: NodeId,
    k: usize,
) -> Result<VisitDistribution, MeasureError> {
    check_node(g, v)?;
    let mut probabilities = vec![0.0; g.node_count()];
    probabilities[v.0] = 1.0;
    for _ in 0..k {
        probabilities = step_uniform(g, &probabilities);
    }
    Ok(VisitDistribution { source: v, length: k, probabilities })
}

/// The same distribution, by enumerating every individual walk and adding
/// up the walk probabilities Π 1/O(w). Errors out past [`ENUMERATION_CAP`]
/// completed walks.
pub fn rw_visit_prob_enumerated(
    g: &HeteroGraph,
    v: NodeId,
    k: usize,
) -> Result<VisitDistribution, MeasureError> {
    check_node(g, v)?;
    let mut probabilities = vec![0.0; g.node_count()];
    let mut walks: u64 = 0;
    enumerate_from(g, v, k, 1.0, &mut probabilities, &mut walks)?;
    Ok(VisitDistribution { source: v, length: k, probabilities })
}

fn enumerate_from(
    g: &HeteroGraph,
    u: NodeId,
    remaining: usize,
    weight: f64,
    probabilities: &mut [f64],
    walks: &mut u64,
) -> Result<(), MeasureError> {
    if remaining == 0 {
        *walks += 1;
        if *walks > ENUMERATION_CAP {
            return Err(MeasureError::TooManyWalks { cap: ENUMERATION_CAP });
        }
        probabilities[u.0] += weight;
        return Ok(());
    }
    let degree = g.out_degree(u);
    if degree == 0 {
        return Ok(()); // walk dies here
    }
    let share = weight / degree as f64;
    for &(_, n) in g.out_edges(u) {
        enumerate_from(g, n, remaining - 1, share, probabilities, walks)?;
    }
    Ok(())
}

fn meeting_probability(a: &VisitDistribution, b: &VisitDistribution) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

/// Probability that two walks of `two_k / 2` steps each, started at `vi`
/// and `vj`, end at the same node — via the visit-distribution inner
/// product.
pub fn prw(
    g: &HeteroGraph,
    vi: NodeId,
    vj: NodeId,
    two_k: usize,
) -> Result<f64, MeasureError> {
    if two_k % 2 != 0 {
        return Err(MeasureError::OddWalkLength { length: two_k });
    }
    let k = two_k / 2;
    let a = rw_visit_prob(g, vi, k)?;
    let b = rw_visit_prob(g, vj, k)?;
    Ok(meeting_probability(&a, &b))
}

/// The same probability by full walk enumeration.
pub fn prw_enumerated(
    g: &HeteroGraph,
    vi: NodeId,
    vj: NodeId,
    two_k: usize,
) -> Result<f64, MeasureError> {
    if two_k % 2 != 0 {
        return Err(MeasureError::OddWalkLength { length: two_k });
    }
    let k = two_k / 2;
    let a = rw_visit_prob_enumerated(g, vi, k)?;
    let b = rw_visit_prob_enumerated(g, vj, k)?;
    Ok(meeting_probability(&a, &b))
}

/// Brute-force walk-meeting probability: full enumeration on small graphs
/// (≤ 15 nodes), distribution inner product beyond that.
pub fn prw_brute(
    g: &HeteroGraph,
    vi: NodeId,
    vj: NodeId,
    two_k: usize,
) -> Result<f64, MeasureError> {
    if g.node_count() <= 15 {
        prw_enumerated(g, vi, vj, two_k)
    } else {
        prw(g, vi, vj, two_k)
    }
}

/// Row-stochastic uniform transition matrix D⁻¹A (rows of dangling nodes
/// are zero). Multi-edges contribute their multiplicity.
pub fn transition_matrix(g: &HeteroGraph) -> Matrix {
    let n = g.node_count();
    let mut p = Matrix::zeros(n, n);
    for u in g.nodes() {
        let degree = g.out_degree(u);
        if degree == 0 {
            continue;
        }
        let share = 1.0 / degree as f64;
        for &(_, v) in g.out_edges(u) {
            let cur = p.get(u.0, v.0);
            p.set(u.0, v.0, cur + share);
        }
    }
    p
}

/// Embeddings after `k` layers of the identity-configured graph network:
/// one-hot inputs propagated with D⁻¹A under identity weights and identity
/// activation. Row `i` is node `i`'s embedding.
pub fn gnn_identity_embeddings(g: &HeteroGraph, k: usize) -> Matrix {
    let p = transition_matrix(g);
    let mut h = Matrix::identity(g.node_count());
    for _ in 0..k {
        h = p.matmul(&h);
    }
    h
}

/// Inner product of two rows of [`gnn_identity_embeddings`].
pub fn gnn_identity_relevance(
    g: &HeteroGraph,
    vi: NodeId,
    vj: NodeId,
    k: usize,
) -> Result<f64, MeasureError> {
    check_node(g, vi)?;
    check_node(g, vj)?;
    let h = gnn_identity_embeddings(g, k);
    Ok(h.row(vi.0).iter().zip(h.row(vj.0)).map(|(a, b)| a * b).sum())
}
