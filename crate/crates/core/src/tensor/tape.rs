//! Reverse-mode automatic differentiation on dense 2-D tensors.
//!
//! A [`Tape`] records every operation whose inputs include at least one
//! tracked tensor. Calling [`Tape::backward`] on a scalar loss sweeps the
//! recorded nodes once in reverse topological order (append order reversed)
//! and accumulates gradients additively into per-node buffers. The tape is
//! single-use: a second backward pass on the same tape is an error, and a
//! fresh tape is expected per training step.

use std::cell::RefCell;
use std::rc::Rc;

use thiserror::Error;

use super::matrix::Matrix;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("{op}: shape mismatch between {lhs_rows}x{lhs_cols} and {rhs_rows}x{rhs_cols}")]
    ShapeMismatch { op: &'static str, lhs_rows: usize, lhs_cols: usize, rhs_rows: usize, rhs_cols: usize },
    #[error("{op}: invalid argument: {message}")]
    InvalidArgument { op: &'static str, message: String },
    #[error("backward requires a 1x1 loss tensor, got {rows}x{cols}")]
    LossNotScalar { rows: usize, cols: usize },
    #[error("tape already consumed by a previous backward pass")]
    TapeConsumed,
    #[error("loss tensor is not recorded on a tape")]
    LossNotOnTape,
    #[error("operands were recorded on different tapes")]
    TapeMismatch,
    #[error("non-finite value in {context}")]
    NonFinite { context: String },
}

fn shape_err(op: &'static str, lhs: &Matrix, rhs: &Matrix) -> TensorError {
    TensorError::ShapeMismatch {
        op,
        lhs_rows: lhs.rows(),
        lhs_cols: lhs.cols(),
        rhs_rows: rhs.rows(),
        rhs_cols: rhs.cols(),
    }
}

/// One operand of a recorded operation: either an earlier tape node
/// (gradient flows into it) or an untracked constant (gradient discarded).
#[derive(Clone)]
enum Operand {
    Node(usize),
    Const(Rc<Matrix>),
}

/// The recorded operation, with everything backward needs to redistribute
/// an output gradient onto the inputs.
enum Step {
    Leaf,
    Matmul { a: Operand, b: Operand },
    Add { a: Operand, b: Operand },
    Sub { a: Operand, b: Operand },
    Hadamard { a: Operand, b: Operand },
    Scale { a: Operand, factor: f64 },
    AddConst { a: Operand },
    MulScalar { a: Operand, s: Operand },
    ConcatCols { a: Operand, b: Operand, split: usize },
    Transpose { a: Operand },
    Sigmoid { a: Operand },
    Tanh { a: Operand },
    Relu { a: Operand },
    Ln { a: Operand },
    RowSoftmax { a: Operand },
    RowScale { a: Operand, weights: Rc<Vec<f64>> },
    AddRowBroadcast { a: Operand, b: Operand },
    GatherRows { a: Operand, rows: Rc<Vec<usize>>, src_rows: usize },
    NeighborSum { a: Operand, edges: Rc<Vec<(usize, usize)>> },
    MeanRows { a: Operand, rows: Rc<Vec<usize>>, src_rows: usize },
    InnerProduct { a: Operand, b: Operand },
    Entry { a: Operand, r: usize, c: usize, src_shape: (usize, usize) },
    SumAll { a: Operand, src_shape: (usize, usize) },
}

struct Node {
    value: Rc<Matrix>,
    step: Step,
}

struct TapeInner {
    nodes: Vec<Node>,
    consumed: bool,
}

/// A recording of one differentiable computation.
#[derive(Clone)]
pub struct Tape {
    inner: Rc<RefCell<TapeInner>>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self { inner: Rc::new(RefCell::new(TapeInner { nodes: Vec::new(), consumed: false })) }
    }

    /// Registers a differentiable leaf (a trainable parameter).
    pub fn leaf(&self, value: Matrix) -> Tensor {
        let value = Rc::new(value);
        let index = self.push(value.clone(), Step::Leaf);
        Tensor { value, node: Some(Handle { tape: self.inner.clone(), index }) }
    }

    /// Number of recorded nodes (leaves included).
    pub fn len(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Rc<Matrix>, step: Step) -> usize {
        let mut inner = self.inner.borrow_mut();
        inner.nodes.push(Node { value, step });
        inner.nodes.len() - 1
    }

    /// Reverse sweep from a scalar loss. Returns the gradient buffers and
    /// consumes the tape: a second call is [`TensorError::TapeConsumed`].
    pub fn backward(&self, loss: &Tensor) -> Result<Gradients, TensorError> {
        let handle = loss.node.as_ref().ok_or(TensorError::LossNotOnTape)?;
        if !Rc::ptr_eq(&handle.tape, &self.inner) {
            return Err(TensorError::TapeMismatch);
        }
        if loss.value.shape() != (1, 1) {
            return Err(TensorError::LossNotScalar { rows: loss.value.rows(), cols: loss.value.cols() });
        }
        {
            let mut inner = self.inner.borrow_mut();
            if inner.consumed {
                return Err(TensorError::TapeConsumed);
            }
            inner.consumed = true;
        }

        let inner = self.inner.borrow();
        let nodes = &inner.nodes;
        let mut grads: Vec<Option<Matrix>> = vec![None; nodes.len()];
        grads[handle.index] = Some(Matrix::scalar(1.0));

        for index in (0..=handle.index).rev() {
            let Some(grad) = grads[index].take() else { continue };
            propagate(&nodes[index], &grad, nodes, &mut grads);
            grads[index] = Some(grad);
        }

        Ok(Gradients { tape: self.inner.clone(), grads })
    }
}

/// Gradient buffers produced by one backward sweep, keyed by tape node.
pub struct Gradients {
    tape: Rc<RefCell<TapeInner>>,
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    /// Takes the gradient with respect to `t`. Returns `None` when `t` is
    /// not a tracked node of this tape; returns a zero matrix when `t` is
    /// tracked but the loss never touched it.
    pub fn take(&mut self, t: &Tensor) -> Option<Matrix> {
        let handle = t.node.as_ref()?;
        if !Rc::ptr_eq(&handle.tape, &self.tape) {
            return None;
        }
        match self.grads.get_mut(handle.index)?.take() {
            Some(g) => Some(g),
            None => Some(Matrix::zeros(t.value.rows(), t.value.cols())),
        }
    }
}

#[derive(Clone)]
struct Handle {
    tape: Rc<RefCell<TapeInner>>,
    index: usize,
}

/// A dense 2-D value, optionally tracked on a tape for differentiation.
///
/// Cloning is cheap (the value is shared). Operations whose inputs are all
/// untracked constants perform plain arithmetic and record nothing.
#[derive(Clone)]
pub struct Tensor {
    value: Rc<Matrix>,
    node: Option<Handle>,
}

impl Tensor {
    /// An untracked tensor: no gradient ever flows into it.
    pub fn constant(value: Matrix) -> Self {
        Self { value: Rc::new(value), node: None }
    }

    pub fn value(&self) -> &Matrix {
        &self.value
    }

    pub fn rows(&self) -> usize {
        self.value.rows()
    }

    pub fn cols(&self) -> usize {
        self.value.cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    /// Whether gradients flow into this tensor (it is recorded on a tape).
    pub fn requires_grad(&self) -> bool {
        self.node.is_some()
    }

    fn operand(&self) -> Operand {
        match &self.node {
            Some(h) => Operand::Node(h.index),
            None => Operand::Const(self.value.clone()),
        }
    }

    /// The tape shared by `self` and `other`, if any; error when both are
    /// tracked on different tapes.
    fn joint_tape(&self, other: &Tensor) -> Result<Option<Rc<RefCell<TapeInner>>>, TensorError> {
        match (&self.node, &other.node) {
            (None, None) => Ok(None),
            (Some(h), None) | (None, Some(h)) => Ok(Some(h.tape.clone())),
            (Some(a), Some(b)) => {
                if Rc::ptr_eq(&a.tape, &b.tape) {
                    Ok(Some(a.tape.clone()))
                } else {
                    Err(TensorError::TapeMismatch)
                }
            }
        }
    }

    fn record(value: Matrix, tape: Option<Rc<RefCell<TapeInner>>>, step: Step) -> Tensor {
        let value = Rc::new(value);
        match tape {
            None => Tensor { value, node: None },
            Some(tape) => {
                let index = {
                    let mut inner = tape.borrow_mut();
                    inner.nodes.push(Node { value: value.clone(), step });
                    inner.nodes.len() - 1
                };
                Tensor { value, node: Some(Handle { tape, index }) }
            }
        }
    }

    fn unary(&self, value: Matrix, step: impl FnOnce(Operand) -> Step) -> Tensor {
        let tape = self.node.as_ref().map(|h| h.tape.clone());
        Tensor::record(value, tape, step(self.operand()))
    }

    fn binary(
        &self,
        other: &Tensor,
        value: Matrix,
        step: impl FnOnce(Operand, Operand) -> Step,
    ) -> Result<Tensor, TensorError> {
        let tape = self.joint_tape(other)?;
        Ok(Tensor::record(value, tape, step(self.operand(), other.operand())))
    }

    /// Matrix product.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        if self.cols() != other.rows() {
            return Err(shape_err("matmul", &self.value, &other.value));
        }
        let value = self.value.matmul(&other.value);
        self.binary(other, value, |a, b| Step::Matmul { a, b })
    }

    /// Element-wise sum of two same-shaped tensors.
    pub fn add(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        if self.shape() != other.shape() {
            return Err(shape_err("add", &self.value, &other.value));
        }
        let value = self.value.add(&other.value);
        self.binary(other, value, |a, b| Step::Add { a, b })
    }

    /// Element-wise difference of two same-shaped tensors.
    pub fn sub(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        if self.shape() != other.shape() {
            return Err(shape_err("sub", &self.value, &other.value));
        }
        let value = self.value.sub(&other.value);
        self.binary(other, value, |a, b| Step::Sub { a, b })
    }

    /// Element-wise (Hadamard) product of two same-shaped tensors.
    pub fn hadamard(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        if self.shape() != other.shape() {
            return Err(shape_err("hadamard", &self.value, &other.value));
        }
        let value = self.value.hadamard(&other.value);
        self.binary(other, value, |a, b| Step::Hadamard { a, b })
    }

    /// Multiplication by a compile-time-known scalar.
    pub fn scale(&self, factor: f64) -> Tensor {
        self.unary(self.value.scale(factor), |a| Step::Scale { a, factor })
    }

    /// Addition of a constant to every entry (gradient passes through).
    pub fn add_const(&self, offset: f64) -> Tensor {
        self.unary(self.value.map(|x| x + offset), |a| Step::AddConst { a })
    }

    /// Multiplication by a tracked 1x1 scalar tensor.
    pub fn mul_scalar(&self, s: &Tensor) -> Result<Tensor, TensorError> {
        if s.shape() != (1, 1) {
            return Err(shape_err("mul_scalar", &self.value, &s.value));
        }
        let value = self.value.scale(s.value.scalar_value());
        self.binary(s, value, |a, s| Step::MulScalar { a, s })
    }

    /// Horizontal concatenation `[self | other]` of tensors with equal row counts.
    pub fn concat_cols(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        if self.rows() != other.rows() {
            return Err(shape_err("concat_cols", &self.value, &other.value));
        }
        let (rows, ca, cb) = (self.rows(), self.cols(), other.cols());
        let mut out = Matrix::zeros(rows, ca + cb);
        for r in 0..rows {
            out.row_mut(r)[..ca].copy_from_slice(self.value.row(r));
            out.row_mut(r)[ca..].copy_from_slice(other.value.row(r));
        }
        let split = ca;
        self.binary(other, out, |a, b| Step::ConcatCols { a, b, split })
    }

    pub fn transpose(&self) -> Tensor {
        self.unary(self.value.transpose(), |a| Step::Transpose { a })
    }

    pub fn sigmoid(&self) -> Tensor {
        self.unary(self.value.map(sigmoid), |a| Step::Sigmoid { a })
    }

    pub fn tanh(&self) -> Tensor {
        self.unary(self.value.map(f64::tanh), |a| Step::Tanh { a })
    }

    pub fn relu(&self) -> Tensor {
        self.unary(self.value.map(|x| x.max(0.0)), |a| Step::Relu { a })
    }

    /// Element-wise natural logarithm.
    pub fn ln(&self) -> Tensor {
        self.unary(self.value.map(f64::ln), |a| Step::Ln { a })
    }

    /// Softmax over each row, computed with a per-row max shift. Rows sum
    /// to one and every output entry is strictly positive.
    pub fn row_softmax(&self) -> Tensor {
        let mut out = Matrix::zeros(self.rows(), self.cols());
        for r in 0..self.rows() {
            let row = self.value.row(r);
            let max = row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
            let mut sum = 0.0;
            let out_row = out.row_mut(r);
            for (o, &x) in out_row.iter_mut().zip(row) {
                *o = (x - max).exp();
                sum += *o;
            }
            for o in out_row.iter_mut() {
                *o /= sum;
            }
        }
        self.unary(out, |a| Step::RowSoftmax { a })
    }

    /// Scales row `i` by the fixed weight `weights[i]`.
    pub fn row_scale(&self, weights: &[f64]) -> Result<Tensor, TensorError> {
        if weights.len() != self.rows() {
            return Err(TensorError::InvalidArgument {
                op: "row_scale",
                message: format!("{} weights for {} rows", weights.len(), self.rows()),
            });
        }
        let mut out = self.value.as_ref().clone();
        for (r, &w) in weights.iter().enumerate() {
            for x in out.row_mut(r) {
                *x *= w;
            }
        }
        let weights = Rc::new(weights.to_vec());
        Ok(self.unary(out, |a| Step::RowScale { a, weights }))
    }

    /// Adds a 1 x cols row vector to every row.
    pub fn add_row_broadcast(&self, bias: &Tensor) -> Result<Tensor, TensorError> {
        if bias.rows() != 1 || bias.cols() != self.cols() {
            return Err(shape_err("add_row_broadcast", &self.value, &bias.value));
        }
        let mut out = self.value.as_ref().clone();
        for r in 0..out.rows() {
            for (x, &b) in out.row_mut(r).iter_mut().zip(bias.value.row(0)) {
                *x += b;
            }
        }
        self.binary(bias, out, |a, b| Step::AddRowBroadcast { a, b })
    }

    /// Selects rows by index (duplicates allowed): `out[i] = self[rows[i]]`.
    pub fn gather_rows(&self, rows: &[usize]) -> Result<Tensor, TensorError> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.rows()) {
            return Err(TensorError::InvalidArgument {
                op: "gather_rows",
                message: format!("row index {bad} out of range for {} rows", self.rows()),
            });
        }
        let mut out = Matrix::zeros(rows.len(), self.cols());
        for (i, &r) in rows.iter().enumerate() {
            out.row_mut(i).copy_from_slice(self.value.row(r));
        }
        let src_rows = self.rows();
        let rows = Rc::new(rows.to_vec());
        Ok(self.unary(out, |a| Step::GatherRows { a, rows, src_rows }))
    }

    /// Sums rows along fixed `(dst, src)` pairs: `out[dst] += self[src]`
    /// for every pair, with the output having the same shape as the input.
    /// This is the gather-style aggregation used for sparse adjacency.
    pub fn neighbor_sum(&self, edges: &[(usize, usize)]) -> Result<Tensor, TensorError> {
        let n = self.rows();
        if let Some(&(d, s)) = edges.iter().find(|&&(d, s)| d >= n || s >= n) {
            return Err(TensorError::InvalidArgument {
                op: "neighbor_sum",
                message: format!("edge ({d}, {s}) out of range for {n} rows"),
            });
        }
        let mut out = Matrix::zeros(n, self.cols());
        for &(dst, src) in edges {
            let src_row = self.value.row(src).to_vec();
            for (o, x) in out.row_mut(dst).iter_mut().zip(src_row) {
                *o += x;
            }
        }
        let edges = Rc::new(edges.to_vec());
        Ok(self.unary(out, |a| Step::NeighborSum { a, edges }))
    }

    /// Mean of the selected rows, as a 1 x cols tensor. Errors when the
    /// selection is empty.
    pub fn mean_rows(&self, rows: &[usize]) -> Result<Tensor, TensorError> {
        if rows.is_empty() {
            return Err(TensorError::InvalidArgument {
                op: "mean_rows",
                message: "empty row selection".into(),
            });
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.rows()) {
            return Err(TensorError::InvalidArgument {
                op: "mean_rows",
                message: format!("row index {bad} out of range for {} rows", self.rows()),
            });
        }
        let mut out = Matrix::zeros(1, self.cols());
        for &r in rows {
            for (o, &x) in out.row_mut(0).iter_mut().zip(self.value.row(r)) {
                *o += x;
            }
        }
        let inv = 1.0 / rows.len() as f64;
        for o in out.row_mut(0) {
            *o *= inv;
        }
        let src_rows = self.rows();
        let rows = Rc::new(rows.to_vec());
        Ok(self.unary(out, |a| Step::MeanRows { a, rows, src_rows }))
    }

    /// Mean of the rows whose mask entry is set. An all-false mask falls
    /// back to the mean over every row (the caller dropped everything).
    pub fn masked_mean_rows(&self, keep: &[bool]) -> Result<Tensor, TensorError> {
        if keep.len() != self.rows() {
            return Err(TensorError::InvalidArgument {
                op: "masked_mean_rows",
                message: format!("{} mask entries for {} rows", keep.len(), self.rows()),
            });
        }
        let mut rows: Vec<usize> =
            keep.iter().enumerate().filter_map(|(i, &k)| k.then_some(i)).collect();
        if rows.is_empty() {
            rows = (0..self.rows()).collect();
        }
        self.mean_rows(&rows)
    }

    /// Sum of the element-wise product of two same-shaped tensors, as 1x1.
    /// For two 1 x d row vectors this is the ordinary inner product.
    pub fn inner_product(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        if self.shape() != other.shape() {
            return Err(shape_err("inner_product", &self.value, &other.value));
        }
        let value = Matrix::scalar(self.value.dot(&other.value));
        self.binary(other, value, |a, b| Step::InnerProduct { a, b })
    }

    /// Extracts one entry as a 1x1 tensor.
    pub fn entry(&self, r: usize, c: usize) -> Result<Tensor, TensorError> {
        if r >= self.rows() || c >= self.cols() {
            return Err(TensorError::InvalidArgument {
                op: "entry",
                message: format!("({r}, {c}) out of range for {}x{}", self.rows(), self.cols()),
            });
        }
        let value = Matrix::scalar(self.value.get(r, c));
        let src_shape = self.shape();
        Ok(self.unary(value, |a| Step::Entry { a, r, c, src_shape }))
    }

    /// Sum of every entry, as a 1x1 tensor.
    pub fn sum_all(&self) -> Tensor {
        let value = Matrix::scalar(self.value.data().iter().sum());
        let src_shape = self.shape();
        self.unary(value, |a| Step::SumAll { a, src_shape })
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn operand_value<'a>(op: &'a Operand, nodes: &'a [Node]) -> &'a Matrix {
    match op {
        Operand::Node(i) => &nodes[*i].value,
        Operand::Const(m) => m,
    }
}

fn accumulate(grads: &mut [Option<Matrix>], op: &Operand, delta: Matrix) {
    if let Operand::Node(i) = op {
        match &mut grads[*i] {
            Some(g) => g.add_scaled(&delta, 1.0),
            slot @ None => *slot = Some(delta),
        }
    }
}

/// Redistributes `grad` (the gradient at `node`'s output) onto the node's
/// operands. Constants absorb nothing.
fn propagate(node: &Node, grad: &Matrix, nodes: &[Node], grads: &mut [Option<Matrix>]) {
    match &node.step {
        Step::Leaf => {}
        Step::Matmul { a, b } => {
            let (av, bv) = (operand_value(a, nodes), operand_value(b, nodes));
            accumulate(grads, a, grad.matmul(&bv.transpose()));
            accumulate(grads, b, av.transpose().matmul(grad));
        }
        Step::Add { a, b } => {
            accumulate(grads, a, grad.clone());
            accumulate(grads, b, grad.clone());
        }
        Step::Sub { a, b } => {
            accumulate(grads, a, grad.clone());
            accumulate(grads, b, grad.scale(-1.0));
        }
        Step::Hadamard { a, b } => {
            let (av, bv) = (operand_value(a, nodes), operand_value(b, nodes));
            accumulate(grads, a, grad.hadamard(bv));
            accumulate(grads, b, grad.hadamard(av));
        }
        Step::Scale { a, factor } => {
            accumulate(grads, a, grad.scale(*factor));
        }
        Step::AddConst { a } => {
            accumulate(grads, a, grad.clone());
        }
        Step::MulScalar { a, s } => {
            let (av, sv) = (operand_value(a, nodes), operand_value(s, nodes));
            accumulate(grads, a, grad.scale(sv.scalar_value()));
            accumulate(grads, s, Matrix::scalar(grad.dot(av)));
        }
        Step::ConcatCols { a, b, split } => {
            let rows = grad.rows();
            let cb = grad.cols() - split;
            let mut ga = Matrix::zeros(rows, *split);
            let mut gb = Matrix::zeros(rows, cb);
            for r in 0..rows {
                ga.row_mut(r).copy_from_slice(&grad.row(r)[..*split]);
                gb.row_mut(r).copy_from_slice(&grad.row(r)[*split..]);
            }
            accumulate(grads, a, ga);
            accumulate(grads, b, gb);
        }
        Step::Transpose { a } => {
            accumulate(grads, a, grad.transpose());
        }
        Step::Sigmoid { a } => {
            let y = &node.value;
            accumulate(grads, a, grad.zip_map(y, |g, y| g * y * (1.0 - y)));
        }
        Step::Tanh { a } => {
            let y = &node.value;
            accumulate(grads, a, grad.zip_map(y, |g, y| g * (1.0 - y * y)));
        }
        Step::Relu { a } => {
            let x = operand_value(a, nodes);
            accumulate(grads, a, grad.zip_map(x, |g, x| if x > 0.0 { g } else { 0.0 }));
        }
        Step::Ln { a } => {
            let x = operand_value(a, nodes);
            accumulate(grads, a, grad.zip_map(x, |g, x| g / x));
        }
        Step::RowSoftmax { a } => {
            let y = &node.value;
            let mut ga = Matrix::zeros(grad.rows(), grad.cols());
            for r in 0..grad.rows() {
                let dot: f64 =
                    grad.row(r).iter().zip(y.row(r)).map(|(&g, &y)| g * y).sum();
                for (o, (&g, &yv)) in
                    ga.row_mut(r).iter_mut().zip(grad.row(r).iter().zip(y.row(r)))
                {
                    *o = yv * (g - dot);
                }
            }
            accumulate(grads, a, ga);
        }
        Step::RowScale { a, weights } => {
            let mut ga = grad.clone();
            for (r, &w) in weights.iter().enumerate() {
                for x in ga.row_mut(r) {
                    *x *= w;
                }
            }
            accumulate(grads, a, ga);
        }
        Step::AddRowBroadcast { a, b } => {
            accumulate(grads, a, grad.clone());
            let mut gb = Matrix::zeros(1, grad.cols());
            for r in 0..grad.rows() {
                for (o, &g) in gb.row_mut(0).iter_mut().zip(grad.row(r)) {
                    *o += g;
                }
            }
            accumulate(grads, b, gb);
        }
        Step::GatherRows { a, rows, src_rows } => {
            let mut ga = Matrix::zeros(*src_rows, grad.cols());
            for (i, &r) in rows.iter().enumerate() {
                for (o, &g) in ga.row_mut(r).iter_mut().zip(grad.row(i)) {
                    *o += g;
                }
            }
            accumulate(grads, a, ga);
        }
        Step::NeighborSum { a, edges } => {
            let mut ga = Matrix::zeros(grad.rows(), grad.cols());
            for &(dst, src) in edges.iter() {
                let g_row = grad.row(dst).to_vec();
                for (o, g) in ga.row_mut(src).iter_mut().zip(g_row) {
                    *o += g;
                }
            }
            accumulate(grads, a, ga);
        }
        Step::MeanRows { a, rows, src_rows } => {
            let inv = 1.0 / rows.len() as f64;
            let mut ga = Matrix::zeros(*src_rows, grad.cols());
            for &r in rows.iter() {
                for (o, &g) in ga.row_mut(r).iter_mut().zip(grad.row(0)) {
                    *o += g * inv;
                }
            }
            accumulate(grads, a, ga);
        }
        Step::InnerProduct { a, b } => {
            let g = grad.scalar_value();
            let (av, bv) = (operand_value(a, nodes), operand_value(b, nodes));
            accumulate(grads, a, bv.scale(g));
            accumulate(grads, b, av.scale(g));
        }
        Step::Entry { a, r, c, src_shape } => {
            let mut ga = Matrix::zeros(src_shape.0, src_shape.1);
            ga.set(*r, *c, grad.scalar_value());
            accumulate(grads, a, ga);
        }
        Step::SumAll { a, src_shape } => {
            accumulate(grads, a, Matrix::filled(src_shape.0, src_shape.1, grad.scalar_value()));
        }
    }
}
