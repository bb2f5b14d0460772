//! Dense symmetric eigensolver built on cyclic Jacobi rotations.

use super::{EvalError, SYMMETRY_TOL};
use crate::tensor::Matrix;

/// Which end of the spectrum to return.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Smallest,
    Largest,
}

/// Iteration stops once the off-diagonal Frobenius norm falls below this.
const OFF_DIAGONAL_TOL: f64 = 1e-12;

/// Generous upper bound; Jacobi converges quadratically, so well-formed
/// inputs finish in a handful of sweeps.
const MAX_SWEEPS: usize = 100;

/// Returns the `m` eigenpairs of a symmetric matrix from the requested end
/// of the spectrum, ordered ascending by eigenvalue for `Smallest` and
/// descending for `Largest`. Eigenvectors are orthonormal columns of the
/// accumulated rotation product.
pub fn symmetric_eigs(
    a: &Matrix,
    m: usize,
    which: Which,
) -> Result<Vec<(f64, Vec<f64>)>, EvalError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(EvalError::InvalidArgument {
            message: format!("expected a square matrix, got {}x{}", a.rows(), a.cols()),
        });
    }
    if m > n {
        return Err(EvalError::InvalidArgument {
            message: format!("requested {m} eigenpairs from a {n}x{n} matrix"),
        });
    }
    if !a.is_finite() {
        return Err(EvalError::InvalidArgument {
            message: "matrix holds non-finite values".into(),
        });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = (a.get(i, j) - a.get(j, i)).abs();
            if diff > SYMMETRY_TOL {
                return Err(EvalError::NotSymmetric { row: i, col: j, diff });
            }
        }
    }
    if m == 0 {
        return Ok(Vec::new());
    }

    // Work on the exactly symmetrized copy so rotations stay consistent.
    let mut b = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            b.set(i, j, 0.5 * (a.get(i, j) + a.get(j, i)));
        }
    }
    let mut v = Matrix::zeros(n, n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }

    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        if off_diagonal_norm(&b) < OFF_DIAGONAL_TOL {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut b, &mut v, p, q);
            }
        }
        sweeps += 1;
    }
    if !converged && off_diagonal_norm(&b) >= OFF_DIAGONAL_TOL {
        return Err(EvalError::NoConvergence {
            sweeps: MAX_SWEEPS,
            remaining: off_diagonal_norm(&b),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| b.get(i, i).partial_cmp(&b.get(j, j)).unwrap().then(i.cmp(&j)));
    if which == Which::Largest {
        order.reverse();
    }

    Ok(order
        .into_iter()
        .take(m)
        .map(|col| {
            let vector: Vec<f64> = (0..n).map(|row| v.get(row, col)).collect();
            (b.get(col, col), vector)
        })
        .collect())
}

/// Frobenius norm of the strictly off-diagonal part.
fn off_diagonal_norm(b: &Matrix) -> f64 {
    let n = b.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += b.get(i, j) * b.get(i, j);
            }
        }
    }
    sum.sqrt()
}

/// One Jacobi rotation zeroing `b[p][q]`, accumulated into `v`.
fn rotate(b: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = b.get(p, q);
    if apq == 0.0 {
        return;
    }
    let app = b.get(p, p);
    let aqq = b.get(q, q);
    let theta = (aqq - app) / (2.0 * apq);
    // The smaller-magnitude root of t^2 + 2*theta*t - 1 = 0 keeps the
    // rotation angle below 45 degrees, which is what makes Jacobi stable.
    let t = if theta >= 0.0 {
        1.0 / (theta + (1.0 + theta * theta).sqrt())
    } else {
        1.0 / (theta - (1.0 + theta * theta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let n = b.rows();
    for i in 0..n {
        let bip = b.get(i, p);
        let biq = b.get(i, q);
        b.set(i, p, c * bip - s * biq);
        b.set(i, q, s * bip + c * biq);
    }
    for j in 0..n {
        let bpj = b.get(p, j);
        let bqj = b.get(q, j);
        b.set(p, j, c * bpj - s * bqj);
        b.set(q, j, s * bpj + c * bqj);
    }
    // Pin the rotated pair exactly: the update above leaves roundoff dust.
    b.set(p, q, 0.0);
    b.set(q, p, 0.0);
    for i in 0..n {
        let vip = v.get(i, p);
        let viq = v.get(i, q);
        v.set(i, p, c * vip - s * viq);
        v.set(i, q, s * vip + c * viq);
    }
}
