//! HeteSim: meta-path relevance as the meeting probability of two
//! relation-constrained walks.
//!
//! For an even-length path the walks meet at the middle type: the source
//! walks the first half forwards, the target walks the second half
//! backwards, and the score is the inner product of the two arrival
//! distributions. Odd-length paths are evaluated by splitting every edge
//! with an intermediate node, which doubles the path length without
//! changing walk probabilities.

use super::MeasureError;
use crate::hetgraph::{augment_with_relation_map, HeteroGraph, MetaPath, NodeId, PathStep};

/// Relation-constrained uniform step. Walking a reversed step means moving
/// against the relation: uniformly to one of the in-neighbours under it.
fn apply_step(g: &HeteroGraph, current: &[f64], step: PathStep) -> Vec<f64> {
    let mut next = vec![0.0; g.node_count()];
    for (u, &p) in current.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let adj = if step.reversed { g.in_edges(NodeId(u)) } else { g.out_edges(NodeId(u)) };
        let count = adj.iter().filter(|(r, _)| *r == step.relation).count();
        if count == 0 {
            continue;
        }
        let share = p / count as f64;
        for &(r, n) in adj {
            if r == step.relation {
                next[n.0] += share;
            }
        }
    }
    next
}

fn walk(g: &HeteroGraph, start: NodeId, steps: impl Iterator<Item = PathStep>) -> Vec<f64> {
    let mut probs = vec![0.0; g.node_count()];
    probs[start.0] = 1.0;
    for step in steps {
        probs = apply_step(g, &probs, step);
    }
    probs
}

fn check_endpoint(
    g: &HeteroGraph,
    v: NodeId,
    expected: crate::hetgraph::TypeId,
    end: &'static str,
) -> Result<(), MeasureError> {
    if v.0 >= g.node_count() {
        return Err(MeasureError::UnknownNode { index: v.0, count: g.node_count() });
    }
    if g.node_type(v) != expected {
        return Err(MeasureError::EndpointTypeMismatch {
            name: g.node_name(v).to_string(),
            end,
            expected: g.type_name(expected).to_string(),
            found: g.type_name(g.node_type(v)).to_string(),
        });
    }
    Ok(())
}

/// HeteSim relevance of `vi` (type `A_0`) and `vj` (type `A_k`) along a
/// meta-path. Unnormalized: the probability that the forward walk from
/// `vi` and the backward walk from `vj` arrive at the same middle node.
/// Normalized (the default presentation): the cosine of the two arrival
/// distributions, which is exactly 1 for a node against itself along a
/// symmetric path. An empty instance set scores 0.
pub fn hetesim(
    g: &HeteroGraph,
    vi: NodeId,
    vj: NodeId,
    path: &MetaPath,
    normalized: bool,
) -> Result<f64, MeasureError> {
    check_endpoint(g, vi, path.source_type(), "source")?;
    check_endpoint(g, vj, path.target_type(), "target")?;

    if path.len() % 2 != 0 {
        let (aug, rel_map) = augment_with_relation_map(g);
        // Original nodes and types keep their ids in the augmented graph,
        // so vi/vj and the path's node types carry over unchanged.
        let mut node_types = Vec::with_capacity(2 * path.len() + 1);
        let mut steps = Vec::with_capacity(2 * path.len());
        for (i, step) in path.steps().iter().enumerate() {
            let halves = rel_map[step.relation.0];
            node_types.push(path.node_types()[i]);
            node_types.push(halves.mid_type);
            if step.reversed {
                steps.push(PathStep { relation: halves.second, reversed: true });
                steps.push(PathStep { relation: halves.first, reversed: true });
            } else {
                steps.push(PathStep { relation: halves.first, reversed: false });
                steps.push(PathStep { relation: halves.second, reversed: false });
            }
        }
        node_types.push(path.target_type());
        let doubled = MetaPath::from_steps(&aug, node_types, steps)
            .expect("edge-split path signatures hold by construction");
        return hetesim(&aug, vi, vj, &doubled, normalized);
    }

    let mid = path.len() / 2;
    let left = walk(g, vi, path.steps()[..mid].iter().copied());
    let right = walk(
        g,
        vj,
        path.steps()[mid..]
            .iter()
            .rev()
            .map(|s| PathStep { relation: s.relation, reversed: !s.reversed }),
    );

    if normalized && left == right {
        // Identical arrival distributions (a node against itself along a
        // symmetric path) have cosine exactly 1; skip the arithmetic so the
        // self-score is exact.
        return Ok(if left.iter().all(|p| *p == 0.0) { 0.0 } else { 1.0 });
    }
    let dot: f64 = left.iter().zip(&right).map(|(a, b)| a * b).sum();
    if !normalized {
        return Ok(dot);
    }
    let norm_l = left.iter().map(|p| p * p).sum::<f64>().sqrt();
    let norm_r = right.iter().map(|p| p * p).sum::<f64>().sqrt();
    if norm_l == 0.0 || norm_r == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (norm_l * norm_r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// a1 and a2 both write only p1.
    fn shared_paper() -> HeteroGraph {
        let mut b = HeteroGraph::builder(true);
        b.add_node("a1", "A").unwrap();
        b.add_node("a2", "A").unwrap();
        b.add_node("p1", "P").unwrap();
        b.add_edge("a1", "writes", "p1").unwrap();
        b.add_edge("a2", "writes", "p1").unwrap();
        b.finish()
    }

    /// As above, plus a second paper written only by a2.
    fn two_papers() -> HeteroGraph {
        let mut b = HeteroGraph::builder(true);
        b.add_node("a1", "A").unwrap();
        b.add_node("a2", "A").unwrap();
        b.add_node("p1", "P").unwrap();
        b.add_node("p2", "P").unwrap();
        b.add_edge("a1", "writes", "p1").unwrap();
        b.add_edge("a2", "writes", "p1").unwrap();
        b.add_edge("a2", "writes", "p2").unwrap();
        b.finish()
    }

    fn apa(g: &HeteroGraph) -> MetaPath {
        MetaPath::parse(g, "A-writes-P-writes^-1-A").unwrap()
    }

    #[test]
    fn coauthors_of_a_single_paper_score_one() {
        let g = shared_paper();
        let path = apa(&g);
        let (a1, a2) = (g.node_id("a1").unwrap(), g.node_id("a2").unwrap());
        assert_eq!(hetesim(&g, a1, a2, &path, false).unwrap(), 1.0);
        assert_eq!(hetesim(&g, a1, a2, &path, true).unwrap(), 1.0);
    }

    #[test]
    fn extra_paper_dilutes_the_score() {
        let g = two_papers();
        let path = apa(&g);
        let (a1, a2) = (g.node_id("a1").unwrap(), g.node_id("a2").unwrap());
        assert_abs_diff_eq!(hetesim(&g, a1, a2, &path, false).unwrap(), 0.5);
        assert_abs_diff_eq!(
            hetesim(&g, a1, a2, &path, true).unwrap(),
            0.5_f64.sqrt(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn normalized_self_score_is_exactly_one() {
        let g = two_papers();
        let path = apa(&g);
        for name in ["a1", "a2"] {
            let v = g.node_id(name).unwrap();
            let score = hetesim(&g, v, v, &path, true).unwrap();
            assert_eq!(score, 1.0, "self score of {name} must be exact");
        }
    }

    #[test]
    fn normalized_score_is_symmetric_for_symmetric_paths() {
        let g = two_papers();
        let path = apa(&g);
        let (a1, a2) = (g.node_id("a1").unwrap(), g.node_id("a2").unwrap());
        let fwd = hetesim(&g, a1, a2, &path, true).unwrap();
        let bwd = hetesim(&g, a2, a1, &path, true).unwrap();
        assert_abs_diff_eq!(fwd, bwd, epsilon = 1e-12);
    }

    #[test]
    fn endpoint_type_mismatch_is_an_error() {
        let g = two_papers();
        let path = apa(&g);
        let (a1, p1) = (g.node_id("a1").unwrap(), g.node_id("p1").unwrap());
        let err = hetesim(&g, a1, p1, &path, true).unwrap_err();
        assert!(matches!(err, MeasureError::EndpointTypeMismatch { .. }), "got {err}");
    }

    #[test]
    fn isolated_endpoint_gives_zero_not_an_error() {
        let mut b = HeteroGraph::builder(true);
        b.add_node("a1", "A").unwrap();
        b.add_node("a3", "A").unwrap();
        b.add_node("p1", "P").unwrap();
        b.add_edge("a1", "writes", "p1").unwrap();
        let g = b.finish();
        let path = apa(&g);
        let (a1, a3) = (g.node_id("a1").unwrap(), g.node_id("a3").unwrap());
        assert_eq!(hetesim(&g, a1, a3, &path, false).unwrap(), 0.0);
        assert_eq!(hetesim(&g, a1, a3, &path, true).unwrap(), 0.0);
        assert_eq!(hetesim(&g, a3, a3, &path, true).unwrap(), 0.0);
    }

    #[test]
    fn odd_paths_match_the_per_edge_closed_form() {
        // One hop from an author to a paper scores
        // 1/(papers-of-author · authors-of-paper) per connecting edge.
        let g = two_papers();
        let path = MetaPath::parse(&g, "A-writes-P").unwrap();
        let a1 = g.node_id("a1").unwrap();
        let a2 = g.node_id("a2").unwrap();
        let p1 = g.node_id("p1").unwrap();
        let p2 = g.node_id("p2").unwrap();
        assert_abs_diff_eq!(hetesim(&g, a1, p1, &path, false).unwrap(), 1.0 / (1.0 * 2.0));
        assert_abs_diff_eq!(hetesim(&g, a2, p1, &path, false).unwrap(), 1.0 / (2.0 * 2.0));
        assert_abs_diff_eq!(hetesim(&g, a2, p2, &path, false).unwrap(), 1.0 / (2.0 * 1.0));
        assert_abs_diff_eq!(hetesim(&g, a1, p2, &path, false).unwrap(), 0.0);
        assert_abs_diff_eq!(
            hetesim(&g, a1, p1, &path, true).unwrap(),
            0.5 / 0.5_f64.sqrt(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn even_asymmetric_path_meets_at_the_middle_type() {
        let mut b = HeteroGraph::builder(true);
        b.add_node("a1", "A").unwrap();
        b.add_node("p1", "P").unwrap();
        b.add_node("s1", "S").unwrap();
        b.add_edge("a1", "writes", "p1").unwrap();
        b.add_edge("p1", "about", "s1").unwrap();
        let g = b.finish();
        let path = MetaPath::parse(&g, "A-writes-P-about-S").unwrap();
        let (a1, s1) = (g.node_id("a1").unwrap(), g.node_id("s1").unwrap());
        assert_abs_diff_eq!(hetesim(&g, a1, s1, &path, false).unwrap(), 1.0);
        assert_abs_diff_eq!(hetesim(&g, a1, s1, &path, true).unwrap(), 1.0);
    }
}
