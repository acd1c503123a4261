use std::sync::RwLock;

use super::{numel, Float, Tensor};
use crate::error::{Error, Result};

/// A trainable leaf. Holds the current value as an immutable leaf tensor;
/// updates swap in a fresh leaf, so graphs built from earlier values are
/// unaffected.
pub struct Param<T: Float> {
    slot: RwLock<Tensor<T>>,
}

impl<T: Float> Param<T> {
    pub fn new(data: Vec<T>, shape: &[usize]) -> Result<Self> {
        Ok(Param {
            slot: RwLock::new(Tensor::leaf(data, shape)?),
        })
    }

    pub fn full(shape: &[usize], v: T) -> Self {
        Param {
            slot: RwLock::new(Tensor::raw(vec![v; numel(shape)], shape.to_vec(), true)),
        }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, T::zero())
    }

    pub fn ones(shape: &[usize]) -> Self {
        Self::full(shape, T::one())
    }

    /// The current value as a graph leaf.
    pub fn tensor(&self) -> Tensor<T> {
        self.slot.read().expect("param lock").clone()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tensor().shape().to_vec()
    }

    pub fn numel(&self) -> usize {
        self.tensor().numel()
    }

    pub fn values(&self) -> Vec<T> {
        self.tensor().to_vec()
    }

    /// Replaces the value. Any accumulated gradient is carried over.
    pub fn set_values(&self, data: Vec<T>) -> Result<()> {
        let mut slot = self.slot.write().expect("param lock");
        if data.len() != slot.numel() {
            return Err(Error::mismatch("set_values", slot.shape(), &[data.len()]));
        }
        let fresh = Tensor::raw(data, slot.shape().to_vec(), true);
        if let Some(g) = slot.grad() {
            fresh.accumulate_grad(&g);
        }
        *slot = fresh;
        Ok(())
    }

    pub fn grad(&self) -> Option<Vec<T>> {
        self.tensor().grad()
    }

    pub fn zero_grad(&self) {
        self.tensor().zero_grad();
    }
}

impl<T: Float> std::fmt::Debug for Param<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Param").field("shape", &self.shape()).finish()
    }
}
