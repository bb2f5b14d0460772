//! Central-difference verification of reverse-mode gradients.

use super::matrix::Matrix;
use super::tape::{Tape, Tensor, TensorError};

/// Compares the tape gradient of `f` at `point` against central finite
/// differences with half-width `step`, coordinate by coordinate.
///
/// `f` must map its argument to a 1x1 loss. The returned figure is the
/// worst relative error `|numeric - analytic| / max(1, |analytic|)` over
/// all coordinates of `point`. Non-finite losses or gradients are errors.
pub fn grad_check<F>(f: F, point: &Matrix, step: f64) -> Result<f64, TensorError>
where
    F: Fn(&Tensor) -> Result<Tensor, TensorError>,
{
    let tape = Tape::new();
    let x = tape.leaf(point.clone());
    let loss = f(&x)?;
    if loss.shape() != (1, 1) {
        return Err(TensorError::LossNotScalar { rows: loss.rows(), cols: loss.cols() });
    }
    if !loss.value().is_finite() {
        return Err(TensorError::NonFinite { context: "grad_check loss".into() });
    }
    let mut grads = tape.backward(&loss)?;
    let analytic = grads.take(&x).expect("leaf gradient");
    if !analytic.is_finite() {
        return Err(TensorError::NonFinite { context: "grad_check analytic gradient".into() });
    }

    let eval = |m: Matrix| -> Result<f64, TensorError> {
        let out = f(&Tensor::constant(m))?;
        let v = out.value().scalar_value();
        if !v.is_finite() {
            return Err(TensorError::NonFinite { context: "grad_check perturbed loss".into() });
        }
        Ok(v)
    };

    let mut worst = 0.0_f64;
    for r in 0..point.rows() {
        for c in 0..point.cols() {
            let mut plus = point.clone();
            plus.set(r, c, point.get(r, c) + step);
            let mut minus = point.clone();
            minus.set(r, c, point.get(r, c) - step);
            let numeric = (eval(plus)? - eval(minus)?) / (2.0 * step);
            let a = analytic.get(r, c);
            let rel = (numeric - a).abs() / a.abs().max(1.0);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
