//! A minimal reverse-mode autodiff engine on dense 2-D `f64` tensors.
//!
//! [`Matrix`] is the plain value type; [`Tensor`] optionally tracks a value
//! on a [`Tape`]. Forward primitives record tape nodes whenever an input is
//! tracked, [`Tape::backward`] populates gradients in one reverse sweep, and
//! [`grad_check`] verifies any scalar-valued computation against central
//! finite differences. [`gru_cell`] and [`AdamState`] supply the recurrent
//! cell and the optimiser used by the trainable relevance model.
//!
//! Everything here is deterministic: identical inputs produce bit-identical
//! values and gradients, with no threading and no hidden global state.

mod adam;
mod gradcheck;
mod gru;
mod matrix;
mod tape;

pub use adam::AdamState;
pub use gradcheck::grad_check;
pub use gru::{gru_cell, GruWeights};
pub use matrix::Matrix;
pub use tape::{Gradients, Tape, Tensor, TensorError};

pub(crate) use tape::sigmoid;
