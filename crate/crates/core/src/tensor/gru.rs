//! A standard gated recurrent unit applied row-wise to a batch of states.

use super::tape::{Tensor, TensorError};

/// The six GRU parameters: gate weights of shape `2d x d` and biases of
/// shape `1 x d`, where `d` is the state width.
pub struct GruWeights {
    pub wz: Tensor,
    pub wr: Tensor,
    pub wh: Tensor,
    pub bz: Tensor,
    pub br: Tensor,
    pub bh: Tensor,
}

/// One GRU step per row:
///
/// ```text
/// z = sigmoid([prev | cand] Wz + bz)        update gate
/// r = sigmoid([prev | cand] Wr + br)        reset gate
/// h = tanh([r * prev | cand] Wh + bh)       candidate state
/// out = (1 - z) * prev + z * h
/// ```
///
/// `prev` and `cand` must share an `n x d` shape.
pub fn gru_cell(prev: &Tensor, cand: &Tensor, w: &GruWeights) -> Result<Tensor, TensorError> {
    let joint = prev.concat_cols(cand)?;
    let z = joint.matmul(&w.wz)?.add_row_broadcast(&w.bz)?.sigmoid();
    let r = joint.matmul(&w.wr)?.add_row_broadcast(&w.br)?.sigmoid();
    let gated = r.hadamard(prev)?.concat_cols(cand)?;
    let h = gated.matmul(&w.wh)?.add_row_broadcast(&w.bh)?.tanh();
    // (1 - z) * prev + z * h, written without a ones tensor.
    prev.sub(&z.hadamard(prev)?)?.add(&z.hadamard(&h)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::matrix::Matrix;

    fn zero_weights(d: usize) -> GruWeights {
        GruWeights {
            wz: Tensor::constant(Matrix::zeros(2 * d, d)),
            wr: Tensor::constant(Matrix::zeros(2 * d, d)),
            wh: Tensor::constant(Matrix::zeros(2 * d, d)),
            bz: Tensor::constant(Matrix::zeros(1, d)),
            br: Tensor::constant(Matrix::zeros(1, d)),
            bh: Tensor::constant(Matrix::zeros(1, d)),
        }
    }

    #[test]
    fn zero_parameters_halve_the_previous_state() {
        // z = sigmoid(0) = 0.5 and h = tanh(0) = 0, so out = 0.5 * prev.
        let prev = Tensor::constant(Matrix::from_rows(&[&[2.0, -4.0], &[1.0, 0.5]]));
        let cand = Tensor::constant(Matrix::from_rows(&[&[9.0, 9.0], &[9.0, 9.0]]));
        let out = gru_cell(&prev, &cand, &zero_weights(2)).unwrap();
        assert_eq!(out.value(), &Matrix::from_rows(&[&[1.0, -2.0], &[0.5, 0.25]]));
    }

    #[test]
    fn mismatched_state_shapes_are_rejected() {
        let prev = Tensor::constant(Matrix::zeros(2, 3));
        let cand = Tensor::constant(Matrix::zeros(3, 3));
        assert!(gru_cell(&prev, &cand, &zero_weights(3)).is_err());
    }
}
