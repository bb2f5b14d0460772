//! Adam optimiser state for a fixed list of parameter matrices.

use super::matrix::Matrix;
use super::tape::TensorError;

/// First/second-moment buffers plus hyper-parameters for Adam updates.
///
/// The state is created once and stepped with the same parameter list every
/// time; moment buffers are allocated lazily on the first step.
pub struct AdamState {
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    steps: u64,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
}

impl AdamState {
    /// Adam with the usual defaults: beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
    pub fn new(lr: f64) -> Self {
        Self::with_hyperparameters(lr, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyperparameters(lr: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self { lr, beta1, beta2, epsilon, steps: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    /// Applies one bias-corrected Adam update to every parameter in place.
    ///
    /// `params` and `grads` must be aligned index by index, with matching
    /// shapes, on every call. A non-finite gradient aborts the step with a
    /// diagnostic naming the offending parameter.
    pub fn step(&mut self, params: &mut [&mut Matrix], grads: &[Matrix]) -> Result<(), TensorError> {
        if params.len() != grads.len() {
            return Err(TensorError::InvalidArgument {
                op: "adam_step",
                message: format!("{} parameters but {} gradients", params.len(), grads.len()),
            });
        }
        if self.m.is_empty() {
            self.m = params.iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() {
            return Err(TensorError::InvalidArgument {
                op: "adam_step",
                message: format!(
                    "optimiser was initialised for {} parameters, called with {}",
                    self.m.len(),
                    params.len()
                ),
            });
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() {
                return Err(TensorError::ShapeMismatch {
                    op: "adam_step",
                    lhs_rows: p.rows(),
                    lhs_cols: p.cols(),
                    rhs_rows: g.rows(),
                    rhs_cols: g.cols(),
                });
            }
            if !g.is_finite() {
                return Err(TensorError::NonFinite {
                    context: format!("gradient of parameter {i} (shape {}x{})", g.rows(), g.cols()),
                });
            }
        }

        self.steps += 1;
        let bias1 = 1.0 - self.beta1.powi(self.steps as i32);
        let bias2 = 1.0 - self.beta2.powi(self.steps as i32);
        for ((param, grad), (m, v)) in
            params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for idx in 0..grad.data().len() {
                let g = grad.data()[idx];
                let m_new = self.beta1 * m.data()[idx] + (1.0 - self.beta1) * g;
                let v_new = self.beta2 * v.data()[idx] + (1.0 - self.beta2) * g * g;
                m.data_mut()[idx] = m_new;
                v.data_mut()[idx] = v_new;
                let m_hat = m_new / bias1;
                let v_hat = v_new / bias2;
                param.data_mut()[idx] -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}
