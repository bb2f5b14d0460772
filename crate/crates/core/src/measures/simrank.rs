//! SimRank: two nodes are similar if their in-neighbours are similar.
//!
//! Type-blind fixed-point iteration of
//! `s(a,b) = decay / (|I(a)||I(b)|) · Σ_{u∈I(a), v∈I(b)} s(u,v)` with
//! `s(a,a) = 1`, started from the identity. Nodes without in-neighbours
//! score 0 against everything else.

use rayon::prelude::*;

use super::MeasureError;
use crate::hetgraph::{HeteroGraph, NodeId};
use crate::tensor::Matrix;

/// Runs `iterations` SimRank sweeps and returns the |V|×|V| score matrix.
/// The matrix is exactly symmetric with a unit diagonal.
pub fn simrank(
    g: &HeteroGraph,
    decay: f64,
    iterations: usize,
) -> Result<Matrix, MeasureError> {
    if !(decay > 0.0 && decay < 1.0) {
        return Err(MeasureError::InvalidParameter {
            what: "decay",
            requirement: "strictly between 0 and 1",
            value: decay,
        });
    }
    if iterations == 0 {
        return Err(MeasureError::InvalidParameter {
            what: "iterations",
            requirement: "at least 1",
            value: 0.0,
        });
    }
    let n = g.node_count();
    let mut scores = Matrix::identity(n);
    for _ in 0..iterations {
        scores = sweep(g, &scores, decay);
    }
    Ok(scores)
}

/// One sweep. Rows fill independently (upper triangle only, mirrored
/// afterwards), so parallelism cannot change any result.
fn sweep(g: &HeteroGraph, prev: &Matrix, decay: f64) -> Matrix {
    let n = g.node_count();
    let mut next = Matrix::zeros(n, n);
    next.data_mut()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(a, row)| {
            row[a] = 1.0;
            let in_a = g.in_edges(NodeId(a));
            if in_a.is_empty() {
                return;
            }
            for b in (a + 1)..n {
                let in_b = g.in_edges(NodeId(b));
                if in_b.is_empty() {
                    continue;
                }
                let mut sum = 0.0;
                for &(_, u) in in_a {
                    for &(_, v) in in_b {
                        sum += prev.get(u.0, v.0);
                    }
                }
                row[b] = decay * sum / (in_a.len() as f64 * in_b.len() as f64);
            }
        });
    for a in 0..n {
        for b in 0..a {
            let upper = next.get(b, a);
            next.set(a, b, upper);
        }
    }
    next
}
