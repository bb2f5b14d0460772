//! Seeded k-means++ used by the spectral clustering pipeline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::Matrix;

/// How many Lloyd iterations a single run may take before it is cut off.
const MAX_ITERATIONS: usize = 100;

/// Result of the best run: per-row cluster ids, the centroids that produced
/// them, and the within-cluster sum of squared distances.
pub(crate) struct KMeansFit {
    pub assignment: Vec<usize>,
    pub centroids: Matrix,
    pub inertia: f64,
}

/// Runs k-means++ `restarts` times from one seeded generator and keeps the
/// run with the lowest inertia. Ties keep the earliest run, so the outcome
/// is a pure function of `(points, k, seed, restarts)`.
pub(crate) fn kmeans(points: &Matrix, k: usize, seed: u64, restarts: usize) -> KMeansFit {
    assert!(k >= 1 && k <= points.rows(), "need 1 <= k <= point count");
    assert!(restarts >= 1, "need at least one restart");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..restarts {
        let fit = single_run(points, k, &mut rng);
        if best.as_ref().map_or(true, |b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    best.expect("at least one restart ran")
}

fn single_run(points: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> KMeansFit {
    let n = points.rows();
    let d = points.cols();
    let mut centroids = seed_centroids(points, k, rng);
    let mut assignment = vec![0usize; n];

    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        for i in 0..n {
            let c = nearest_centroid(points.row(i), &centroids);
            if assignment[i] != c {
                assignment[i] = c;
                changed = true;
            }
        }

        let mut sums = Matrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[assignment[i]] += 1;
            for (acc, x) in sums.row_mut(assignment[i]).iter_mut().zip(points.row(i)) {
                *acc += x;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Revive an empty cluster on the point farthest from its
                // current centroid; the first such point wins on ties.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = distance_sq(points.row(a), centroids.row(assignment[a]));
                        let db = distance_sq(points.row(b), centroids.row(assignment[b]));
                        da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                    })
                    .expect("points are non-empty");
                for (dst, x) in sums.row_mut(c).iter_mut().zip(points.row(far)) {
                    *dst = *x;
                }
                counts[c] = 1;
                changed = true;
            }
            let inv = 1.0 / counts[c] as f64;
            for x in sums.row_mut(c) {
                *x *= inv;
            }
        }
        centroids = sums;
        if !changed {
            break;
        }
    }

    for i in 0..n {
        assignment[i] = nearest_centroid(points.row(i), &centroids);
    }
    let inertia = (0..n)
        .map(|i| distance_sq(points.row(i), centroids.row(assignment[i])))
        .sum();
    KMeansFit { assignment, centroids, inertia }
}

/// k-means++ seeding: one uniform pick, then picks weighted by squared
/// distance to the nearest centroid chosen so far.
fn seed_centroids(points: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let n = points.rows();
    let d = points.cols();
    let mut centroids = Matrix::zeros(k, d);
    let first = rng.gen_range(0..n);
    copy_row(&mut centroids, 0, points.row(first));

    let mut dist_sq: Vec<f64> = (0..n)
        .map(|i| distance_sq(points.row(i), centroids.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = dist_sq.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in dist_sq.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // All points coincide with a centroid already; any pick works.
            rng.gen_range(0..n)
        };
        copy_row(&mut centroids, c, points.row(pick));
        for i in 0..n {
            let d_new = distance_sq(points.row(i), centroids.row(c));
            if d_new < dist_sq[i] {
                dist_sq[i] = d_new;
            }
        }
    }
    centroids
}

pub(crate) fn nearest_centroid(point: &[f64], centroids: &Matrix) -> usize {
    let mut best = 0;
    let mut best_d = distance_sq(point, centroids.row(0));
    for c in 1..centroids.rows() {
        let d = distance_sq(point, centroids.row(c));
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn copy_row(m: &mut Matrix, r: usize, src: &[f64]) {
    for (dst, x) in m.row_mut(r).iter_mut().zip(src) {
        *dst = *x;
    }
}
