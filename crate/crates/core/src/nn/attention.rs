use super::{join, rms_norm, Linear, Module};
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::{Float, Param, Tensor};

pub const LINEAR_ATTENTION_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttentionKind {
    Softmax,
    Linear,
}

fn check_qkv<T: Float>(q: &Tensor<T>, k: &Tensor<T>, v: &Tensor<T>) -> Result<()> {
    if q.rank() < 2 || q.shape() != k.shape() || q.shape() != v.shape() {
        return Err(Error::mismatch("attention", q.shape(), k.shape()));
    }
    Ok(())
}

/// `softmax(q·kᵀ / sqrt(d_h))` over keys, shape `[.., N, N]`.
pub fn attention_weights<T: Float>(q: &Tensor<T>, k: &Tensor<T>) -> Result<Tensor<T>> {
    let dh = *q.shape().last().unwrap_or(&1);
    q.matmul(&k.transpose(-1, -2)?)?
        .scale(T::lit(1.0 / (dh as f64).sqrt()))
        .softmax(-1)
}

/// Scaled dot-product attention on `[.., N, d_h]` inputs.
pub fn softmax_attention<T: Float>(q: &Tensor<T>, k: &Tensor<T>, v: &Tensor<T>) -> Result<Tensor<T>> {
    check_qkv(q, k, v)?;
    attention_weights(q, k)?.matmul(v)
}

/// `φ(Q)(φ(K)ᵀV) / (φ(Q)·Σⱼ φ(kⱼ) + ε)` with `φ = ReLU`. The `d_h × d_h`
/// context is formed first, so cost is linear in `N`.
pub fn linear_attention<T: Float>(q: &Tensor<T>, k: &Tensor<T>, v: &Tensor<T>) -> Result<Tensor<T>> {
    check_qkv(q, k, v)?;
    let (fq, fk) = (q.relu(), k.relu());
    let context = fk.transpose(-1, -2)?.matmul(v)?;
    let numerator = fq.matmul(&context)?;
    let denominator = fq
        .mul(&fk.sum_axis(-2, true)?)?
        .sum_axis(-1, true)?
        .add_scalar(T::lit(LINEAR_ATTENTION_EPS));
    numerator.div(&denominator)
}

/// Self-attention over `[B, T, d]` token batches.
pub struct MultiHeadAttention<T: Float> {
    pub qkv: Linear<T>,
    pub out: Linear<T>,
    pub q_gain: Option<Param<T>>,
    pub k_gain: Option<Param<T>>,
    pub heads: usize,
    pub kind: AttentionKind,
}

impl<T: Float> MultiHeadAttention<T> {
    /// `inner` is the concatenated width of all heads.
    pub fn new(
        d: usize,
        inner: usize,
        heads: usize,
        kind: AttentionKind,
        qk_norm: bool,
        qkv_bias: bool,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        if heads == 0 || inner % heads != 0 {
            return Err(Error::Config(format!(
                "attention width {inner} is not divisible by {heads} heads"
            )));
        }
        let dh = inner / heads;
        Ok(MultiHeadAttention {
            qkv: Linear::new(d, 3 * inner, qkv_bias, rng),
            out: Linear::new(inner, d, true, rng),
            q_gain: qk_norm.then(|| Param::ones(&[dh])),
            k_gain: qk_norm.then(|| Param::ones(&[dh])),
            heads,
            kind,
        })
    }

    pub fn inner(&self) -> usize {
        self.out.in_features()
    }

    pub fn head_dim(&self) -> usize {
        self.inner() / self.heads
    }

    fn split_heads(&self, x: &Tensor<T>, b: usize, t: usize) -> Result<Tensor<T>> {
        let (h, dh) = (self.heads, self.head_dim());
        x.reshape(&[b, t, h, dh])?
            .permute(&[0, 2, 1, 3])?
            .reshape(&[b * h, t, dh])
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let &[b, t, _] = x.shape() else {
            return Err(Error::shape("attention", format!("expected [B, T, d], got {:?}", x.shape())));
        };
        let qkv = self.qkv.forward(x)?.chunk(3, -1)?;
        let mut q = self.split_heads(&qkv[0], b, t)?;
        let mut k = self.split_heads(&qkv[1], b, t)?;
        let v = self.split_heads(&qkv[2], b, t)?;
        if let (Some(gq), Some(gk)) = (&self.q_gain, &self.k_gain) {
            q = rms_norm(&q, Some(&gq.tensor()))?;
            k = rms_norm(&k, Some(&gk.tensor()))?;
        }
        let y = match self.kind {
            AttentionKind::Softmax => softmax_attention(&q, &k, &v)?,
            AttentionKind::Linear => linear_attention(&q, &k, &v)?,
        };
        let y = y
            .reshape(&[b, self.heads, t, self.head_dim()])?
            .permute(&[0, 2, 1, 3])?
            .reshape(&[b, t, self.inner()])?;
        self.out.forward(&y)
    }
}

impl<T: Float> Module<T> for MultiHeadAttention<T> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        self.qkv.collect(&join(prefix, "qkv"), out);
        if let Some(g) = &self.q_gain {
            out.push((join(prefix, "q_gain"), g));
        }
        if let Some(g) = &self.k_gain {
            out.push((join(prefix, "k_gain"), g));
        }
        self.out.collect(&join(prefix, "out"), out);
    }
}
