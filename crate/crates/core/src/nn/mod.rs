//! Layers composed by the field models.

mod adaln;
mod attention;
mod conv;
mod embed;
mod ffn;
mod norm;

pub use adaln::{adaln_modulate, modulate, AdaLnHead, ModulationParams};
pub use attention::{
    attention_weights, linear_attention, softmax_attention, AttentionKind, MultiHeadAttention,
};
pub use conv::Conv1d;
pub use embed::{sinusoidal_features, CondBatch, ConditionEmbedder, TimeEmbedding};
pub use ffn::{swiglu, SwiGlu};
pub use norm::{rms_norm, rms_norm_axis, RMS_EPS};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::{Float, Param, Tensor};

/// Anything holding named trainable parameters.
pub trait Module<T: Float> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>);

    /// Parameters in a stable order, names joined with `.`.
    fn named_params(&self) -> Vec<(String, &Param<T>)> {
        let mut out = Vec::new();
        self.collect("", &mut out);
        out
    }

    fn param_count(&self) -> usize {
        self.named_params().iter().map(|(_, p)| p.numel()).sum()
    }

    fn zero_grad(&self) {
        for (_, p) in self.named_params() {
            p.zero_grad();
        }
    }
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// `fan_in · fan_out` draws uniform in `±sqrt(6 / (fan_in + fan_out))`.
pub fn xavier_uniform<T: Float>(fan_in: usize, fan_out: usize, rng: &mut SeededRng) -> Vec<T> {
    let bound = xavier_bound(fan_in, fan_out);
    rng.uniform_vec(fan_in * fan_out, -bound, bound)
}

/// Dense layer `y = x·W + b` with `W` stored `[in, out]`.
pub struct Linear<T: Float> {
    pub weight: Param<T>,
    pub bias: Option<Param<T>>,
}

impl<T: Float> Linear<T> {
    pub fn new(fan_in: usize, fan_out: usize, bias: bool, rng: &mut SeededRng) -> Self {
        let w = xavier_uniform(fan_in, fan_out, rng);
        Linear {
            weight: Param::new(w, &[fan_in, fan_out]).expect("positive extents"),
            bias: bias.then(|| Param::zeros(&[fan_out])),
        }
    }

    pub fn zeros(fan_in: usize, fan_out: usize, bias: bool) -> Self {
        Linear {
            weight: Param::zeros(&[fan_in, fan_out]),
            bias: bias.then(|| Param::zeros(&[fan_out])),
        }
    }

    pub fn in_features(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn out_features(&self) -> usize {
        self.weight.shape()[1]
    }

    /// Applies to the last axis of `x`.
    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let d = *x.shape().last().unwrap_or(&0);
        if d != self.in_features() {
            return Err(Error::mismatch("linear", x.shape(), &self.weight.shape()));
        }
        let y = x.matmul(&self.weight.tensor())?;
        match &self.bias {
            Some(b) => y.add(&b.tensor()),
            None => Ok(y),
        }
    }
}

impl<T: Float> Module<T> for Linear<T> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        out.push((join(prefix, "weight"), &self.weight));
        if let Some(b) = &self.bias {
            out.push((join(prefix, "bias"), b));
        }
    }
}
