//! Dense tensors with tape-free reverse-mode differentiation.
//!
//! Every [`Tensor`] is an immutable, reference-counted value. Operations on
//! tensors that require gradients record their inputs and a backward rule;
//! [`Tensor::backward`] walks the resulting DAG in reverse topological order
//! and accumulates `∂loss/∂leaf` into every leaf created with
//! `requires_grad = true`.
//!
//! Shapes are row-major. Binary elementwise operations broadcast by
//! trailing-axis alignment with size-1 expansion, as in NumPy.

mod broadcast;
mod gradcheck;
mod graph;
mod linalg;
mod ops;
mod param;

use std::cell::Cell;
use std::fmt;
use std::sync::{Arc, Mutex};

pub use gradcheck::{grad_check, relative_error, GradCheckEntry, GradCheckOptions, GradCheckReport};
pub use graph::Graph;
pub use param::Param;

use crate::error::{Error, Result};

/// Scalar element type. Implemented for `f32` (training) and `f64`
/// (gradient verification).
pub trait Float:
    num_traits::Float
    + std::iter::Sum
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + Default
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
    const NAME: &'static str;

    /// `c = alpha * op(a) * op(b) + beta * c` with explicit row/column strides.
    ///
    /// # Safety
    /// The pointers and strides must describe valid, non-overlapping
    /// `m×k`, `k×n` and `m×n` matrices.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );

    /// Nearest representable value of an `f64` literal.
    fn lit(v: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Float for f32 {
    const NAME: &'static str = "f32";

    fn lit(v: f64) -> Self {
        v as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, 1.0, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }
}

impl Float for f64 {
    const NAME: &'static str = "f64";

    fn lit(v: f64) -> Self {
        v
    }

    fn as_f64(self) -> f64 {
        self
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, 1.0, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }
}

thread_local! {
    static GRAD_ENABLED: Cell<bool> = const { Cell::new(true) };
}

/// Runs `f` with graph recording disabled on the current thread.
///
/// Operations evaluated inside produce constant tensors, which keeps
/// inference from retaining intermediate activations.
pub fn no_grad<R>(f: impl FnOnce() -> R) -> R {
    struct Restore(bool);
    impl Drop for Restore {
        fn drop(&mut self) {
            GRAD_ENABLED.with(|g| g.set(self.0));
        }
    }
    let prev = GRAD_ENABLED.with(|g| g.replace(false));
    let _restore = Restore(prev);
    f()
}

pub fn grad_enabled() -> bool {
    GRAD_ENABLED.with(|g| g.get())
}

/// Gradient contributions for each recorded input, `None` for inputs that do
/// not need one.
pub(crate) type InputGrads<T> = Vec<Option<Vec<T>>>;

pub(crate) struct BackwardCtx<'a, T: Float> {
    pub grad: &'a [T],
    pub out: &'a [T],
    pub inputs: &'a [Tensor<T>],
}

impl<T: Float> BackwardCtx<'_, T> {
    pub fn needs(&self, i: usize) -> bool {
        self.inputs[i].requires_grad()
    }
}

pub(crate) type BackwardFn<T> =
    Box<dyn Fn(&BackwardCtx<'_, T>) -> InputGrads<T> + Send + Sync + 'static>;

pub(crate) struct Op<T: Float> {
    pub name: &'static str,
    pub inputs: Vec<Tensor<T>>,
    pub backward: BackwardFn<T>,
}

pub(crate) struct Inner<T: Float> {
    data: Vec<T>,
    shape: Vec<usize>,
    requires_grad: bool,
    grad: Mutex<Option<Vec<T>>>,
    op: Option<Op<T>>,
}

/// Dense row-major tensor participating in reverse-mode differentiation.
pub struct Tensor<T: Float = f32> {
    inner: Arc<Inner<T>>,
}

impl<T: Float> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Tensor {
            inner: Arc::clone(&self.inner),
        }
    }
}

impl<T: Float> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("Tensor");
        d.field("shape", &self.inner.shape);
        if self.numel() <= 16 {
            d.field("data", &self.inner.data);
        }
        d.field("requires_grad", &self.inner.requires_grad);
        if let Some(op) = &self.inner.op {
            d.field("op", &op.name);
        }
        d.finish()
    }
}

pub(crate) fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl<T: Float> Tensor<T> {
    fn check_shape(op: &'static str, data_len: usize, shape: &[usize]) -> Result<()> {
        if shape.contains(&0) {
            return Err(Error::shape(op, format!("zero extent in {shape:?}")));
        }
        if numel(shape) != data_len {
            return Err(Error::shape(
                op,
                format!("{} values do not fill shape {shape:?}", data_len),
            ));
        }
        Ok(())
    }

    /// Constant tensor (no gradient).
    pub fn new(data: Vec<T>, shape: &[usize]) -> Result<Self> {
        Self::check_shape("new", data.len(), shape)?;
        Ok(Self::raw(data, shape.to_vec(), false))
    }

    /// Leaf tensor that receives gradients.
    pub fn leaf(data: Vec<T>, shape: &[usize]) -> Result<Self> {
        Self::check_shape("leaf", data.len(), shape)?;
        Ok(Self::raw(data, shape.to_vec(), true))
    }

    pub fn from_slice(data: &[T], shape: &[usize]) -> Result<Self> {
        Self::new(data.to_vec(), shape)
    }

    pub fn from_f64s(data: &[f64], shape: &[usize]) -> Result<Self> {
        Self::new(data.iter().map(|&v| T::lit(v)).collect(), shape)
    }

    pub fn scalar(v: T) -> Self {
        Self::raw(vec![v], Vec::new(), false)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::raw(vec![T::zero(); numel(shape)], shape.to_vec(), false)
    }

    pub fn ones(shape: &[usize]) -> Self {
        Self::raw(vec![T::one(); numel(shape)], shape.to_vec(), false)
    }

    pub fn full(shape: &[usize], v: T) -> Self {
        Self::raw(vec![v; numel(shape)], shape.to_vec(), false)
    }

    pub(crate) fn raw(data: Vec<T>, shape: Vec<usize>, requires_grad: bool) -> Self {
        debug_assert_eq!(data.len(), numel(&shape));
        Tensor {
            inner: Arc::new(Inner {
                data,
                shape,
                requires_grad,
                grad: Mutex::new(None),
                op: None,
            }),
        }
    }

    /// Builds the output of an operation, recording it when any input needs
    /// a gradient and recording is enabled on this thread.
    pub(crate) fn from_op(
        name: &'static str,
        data: Vec<T>,
        shape: Vec<usize>,
        inputs: Vec<Tensor<T>>,
        backward: BackwardFn<T>,
    ) -> Self {
        debug_assert_eq!(data.len(), numel(&shape), "{name}");
        let record = grad_enabled() && inputs.iter().any(Tensor::requires_grad);
        if !record {
            return Self::raw(data, shape, false);
        }
        Tensor {
            inner: Arc::new(Inner {
                data,
                shape,
                requires_grad: true,
                grad: Mutex::new(None),
                op: Some(Op {
                    name,
                    inputs,
                    backward,
                }),
            }),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn rank(&self) -> usize {
        self.inner.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.inner.data.len()
    }

    pub fn data(&self) -> &[T] {
        &self.inner.data
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.inner.data.clone()
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.inner.data.iter().map(|v| v.as_f64()).collect()
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> Result<T> {
        if self.numel() != 1 {
            return Err(Error::Contract(format!(
                "item() on tensor of shape {:?}",
                self.shape()
            )));
        }
        Ok(self.inner.data[0])
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.requires_grad
    }

    pub fn is_leaf(&self) -> bool {
        self.inner.op.is_none()
    }

    pub(crate) fn op(&self) -> Option<&Op<T>> {
        self.inner.op.as_ref()
    }

    /// Name of the operation that produced this tensor, if recorded.
    pub fn op_name(&self) -> Option<&'static str> {
        self.inner.op.as_ref().map(|o| o.name)
    }

    /// Accumulated gradient of a leaf.
    pub fn grad(&self) -> Option<Vec<T>> {
        self.inner.grad.lock().expect("grad lock").clone()
    }

    pub fn zero_grad(&self) {
        *self.inner.grad.lock().expect("grad lock") = None;
    }

    pub(crate) fn accumulate_grad(&self, g: &[T]) {
        let mut slot = self.inner.grad.lock().expect("grad lock");
        match slot.as_mut() {
            Some(acc) => {
                for (a, &b) in acc.iter_mut().zip(g) {
                    *a += b;
                }
            }
            None => *slot = Some(g.to_vec()),
        }
    }

    /// Same values, detached from any recorded graph.
    pub fn detach(&self) -> Tensor<T> {
        Self::raw(self.inner.data.clone(), self.inner.shape.clone(), false)
    }

    /// Stable identity of the underlying node.
    pub(crate) fn id(&self) -> usize {
        Arc::as_ptr(&self.inner) as *const () as usize
    }

    /// Converts element type, producing a constant.
    pub fn cast<U: Float>(&self) -> Tensor<U> {
        Tensor::raw(
            self.inner
                .data
                .iter()
                .map(|v| U::lit(v.as_f64()))
                .collect(),
            self.inner.shape.clone(),
            false,
        )
    }

    /// Accumulates `∂self/∂leaf` into every gradient-requiring leaf.
    ///
    /// `self` must hold exactly one element.
    pub fn backward(&self) -> Result<()> {
        Graph::build(self)?.backward()
    }
}

pub(crate) fn normalize_axis(axis: isize, rank: usize, op: &'static str) -> Result<usize> {
    let r = rank as isize;
    let a = if axis < 0 { axis + r } else { axis };
    if a < 0 || a >= r {
        return Err(Error::shape(
            op,
            format!("axis {axis} out of range for rank {rank}"),
        ));
    }
    Ok(a as usize)
}
