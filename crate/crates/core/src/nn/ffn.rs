use super::{join, Linear, Module};
use crate::error::Result;
use crate::rng::SeededRng;
use crate::tensor::{Float, Param, Tensor};

/// `(SiLU(x·W_gate) ⊙ (x·W_up))·W_down`
pub fn swiglu<T: Float>(
    x: &Tensor<T>,
    w_gate: &Tensor<T>,
    w_up: &Tensor<T>,
    w_down: &Tensor<T>,
) -> Result<Tensor<T>> {
    let gate = x.matmul(w_gate)?.silu();
    gate.mul(&x.matmul(w_up)?)?.matmul(w_down)
}

/// Gated feed-forward block without biases.
pub struct SwiGlu<T: Float> {
    pub gate: Linear<T>,
    pub up: Linear<T>,
    pub down: Linear<T>,
}

impl<T: Float> SwiGlu<T> {
    /// Hidden width is `round(ratio · d)`.
    pub fn new(d: usize, ratio: f64, rng: &mut SeededRng) -> Self {
        let h = Self::hidden_width(d, ratio);
        SwiGlu {
            gate: Linear::new(d, h, false, rng),
            up: Linear::new(d, h, false, rng),
            down: Linear::new(h, d, false, rng),
        }
    }

    pub fn hidden_width(d: usize, ratio: f64) -> usize {
        ((ratio * d as f64).round() as usize).max(1)
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        swiglu(
            x,
            &self.gate.weight.tensor(),
            &self.up.weight.tensor(),
            &self.down.weight.tensor(),
        )
    }
}

impl<T: Float> Module<T> for SwiGlu<T> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        self.gate.collect(&join(prefix, "gate"), out);
        self.up.collect(&join(prefix, "up"), out);
        self.down.collect(&join(prefix, "down"), out);
    }
}
