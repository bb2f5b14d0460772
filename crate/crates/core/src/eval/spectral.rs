//! Community detection by normalized spectral clustering of a relevance
//! matrix.

use super::eigen::{symmetric_eigs, Which};
use super::kmeans::{kmeans, nearest_centroid};
use super::{EvalError, Partition, RelevanceMatrix};
use crate::tensor::Matrix;

/// How many k-means restarts the embedding is clustered with.
const KMEANS_RESTARTS: usize = 10;

/// A partition plus any non-fatal conditions hit while producing it.
#[derive(Debug)]
pub struct SpectralOutcome {
    pub partition: Partition,
    pub warnings: Vec<String>,
}

/// Clusters the nodes of a relevance matrix into `k` communities.
///
/// The affinity is the symmetrized score matrix clamped to be non-negative
/// with its diagonal zeroed, the embedding is the `k` eigenvectors of the
/// normalized Laplacian `I - D^{-1/2} W D^{-1/2}` with smallest eigenvalues
/// (rows scaled to unit length), and the embedding rows are grouped by
/// seeded k-means++. Nodes with zero affinity to everything are left out of
/// the k-means run, assigned to the nearest centroid afterwards, and
/// reported in `warnings`.
pub fn spectral_clustering(
    m: &RelevanceMatrix,
    k: usize,
    seed: u64,
) -> Result<SpectralOutcome, EvalError> {
    let n = m.len();
    if k < 1 || k > n {
        return Err(EvalError::InvalidArgument {
            message: format!("cannot split {n} nodes into {k} clusters"),
        });
    }

    // Affinity: symmetrize, clamp negatives to zero, drop self-affinity.
    let scores = m.scores();
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let avg = 0.5 * (scores.get(i, j) + scores.get(j, i));
                w.set(i, j, avg.max(0.0));
            }
        }
    }

    let degrees: Vec<f64> = (0..n).map(|i| w.row(i).iter().sum()).collect();
    let isolated: Vec<usize> = (0..n).filter(|&i| degrees[i] == 0.0).collect();
    let connected: Vec<usize> = (0..n).filter(|&i| degrees[i] > 0.0).collect();
    if connected.len() < k {
        return Err(EvalError::InvalidArgument {
            message: format!(
                "only {} nodes have any affinity; cannot form {k} clusters",
                connected.len()
            ),
        });
    }

    // Normalized Laplacian. Isolated nodes get a zero scaling factor, which
    // leaves them as detached unit diagonal entries.
    let inv_sqrt: Vec<f64> =
        degrees.iter().map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 }).collect();
    let mut laplacian = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let off = -inv_sqrt[i] * w.get(i, j) * inv_sqrt[j];
            laplacian.set(i, j, if i == j { 1.0 + off } else { off });
        }
    }

    let pairs = symmetric_eigs(&laplacian, k, Which::Smallest)?;
    let mut embedding = Matrix::zeros(n, k);
    for (c, (_, vector)) in pairs.iter().enumerate() {
        for i in 0..n {
            embedding.set(i, c, vector[i]);
        }
    }
    // Scale rows to the unit sphere; zero rows (isolated nodes) stay put.
    for i in 0..n {
        let norm = embedding.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in embedding.row_mut(i) {
                *x /= norm;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    let mut warnings = Vec::new();
    if isolated.is_empty() {
        let fit = kmeans(&embedding, k, seed, KMEANS_RESTARTS);
        assignment = fit.assignment;
    } else {
        let mut active = Matrix::zeros(connected.len(), k);
        for (r, &i) in connected.iter().enumerate() {
            for c in 0..k {
                active.set(r, c, embedding.get(i, c));
            }
        }
        let fit = kmeans(&active, k, seed, KMEANS_RESTARTS);
        for (r, &i) in connected.iter().enumerate() {
            assignment[i] = fit.assignment[r];
        }
        for &i in &isolated {
            assignment[i] = nearest_centroid(embedding.row(i), &fit.centroids);
            warnings.push(format!(
                "node {} has zero affinity to every other node; assigned to nearest centroid",
                m.node_index()[i].0
            ));
        }
    }

    let partition = Partition::new(m.node_index().to_vec(), assignment, k)?;
    Ok(SpectralOutcome { partition, warnings })
}
