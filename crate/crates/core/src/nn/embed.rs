use super::{join, Linear, Module};
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::{Float, Param, Tensor};

const FREQ_BASE: f64 = 10000.0;
const TIME_SCALE: f64 = 1000.0;

/// `[sin(ω_i·t·1000) .., cos(ω_i·t·1000) ..]` with `ω_i = 10000^(−2i/d)`,
/// one row per entry of `t`.
pub fn sinusoidal_features<T: Float>(t: &[T], d: usize) -> Result<Tensor<T>> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::Config(format!("time embedding width must be even, got {d}")));
    }
    if t.is_empty() {
        return Err(Error::Contract("time embedding of an empty batch".into()));
    }
    let half = d / 2;
    let mut out = Vec::with_capacity(t.len() * d);
    for &ti in t {
        let arg = ti.as_f64() * TIME_SCALE;
        let omegas = (0..half).map(|i| FREQ_BASE.powf(-2.0 * i as f64 / d as f64));
        let (sin, cos): (Vec<f64>, Vec<f64>) = omegas.map(|w| ((w * arg).sin(), (w * arg).cos())).unzip();
        out.extend(sin.into_iter().chain(cos).map(T::lit));
    }
    Tensor::new(out, &[t.len(), d])
}

/// Sinusoidal features followed by `Linear → SiLU → Linear`.
pub struct TimeEmbedding<T: Float> {
    pub l1: Linear<T>,
    pub l2: Linear<T>,
}

impl<T: Float> TimeEmbedding<T> {
    pub fn new(d: usize, rng: &mut SeededRng) -> Result<Self> {
        if d % 2 != 0 {
            return Err(Error::Config(format!("time embedding width must be even, got {d}")));
        }
        Ok(TimeEmbedding {
            l1: Linear::new(d, d, true, rng),
            l2: Linear::new(d, d, true, rng),
        })
    }

    pub fn dim(&self) -> usize {
        self.l2.out_features()
    }

    /// `[B, d]` for `B` time values.
    pub fn forward(&self, t: &[T]) -> Result<Tensor<T>> {
        let f = sinusoidal_features(t, self.l1.in_features())?;
        self.l2.forward(&self.l1.forward(&f)?.silu())
    }
}

impl<T: Float> Module<T> for TimeEmbedding<T> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        self.l1.collect(&join(prefix, "l1"), out);
        self.l2.collect(&join(prefix, "l2"), out);
    }
}

/// A batch of condition vectors, some of which may be dropped.
#[derive(Debug, Clone)]
pub struct CondBatch<T: Float> {
    values: Tensor<T>,
    keep: Vec<bool>,
}

impl<T: Float> CondBatch<T> {
    /// `values` is row-major `[batch, k]`; rows with `keep[i] == false` are
    /// replaced by zeros.
    pub fn new(mut values: Vec<T>, batch: usize, k: usize, keep: Vec<bool>) -> Result<Self> {
        if keep.len() != batch {
            return Err(Error::mismatch("cond_batch", &[batch], &[keep.len()]));
        }
        for (row, kept) in values.chunks_mut(k.max(1)).zip(&keep) {
            if !kept {
                row.iter_mut().for_each(|v| *v = T::zero());
            }
        }
        Ok(CondBatch {
            values: Tensor::new(values, &[batch, k])?,
            keep,
        })
    }

    pub fn conditional(values: Vec<T>, batch: usize, k: usize) -> Result<Self> {
        Self::new(values, batch, k, vec![true; batch])
    }

    pub fn dropped(batch: usize, k: usize) -> Result<Self> {
        Self::new(vec![T::zero(); batch * k], batch, k, vec![false; batch])
    }

    /// Same batch with every condition dropped.
    pub fn to_dropped(&self) -> Self {
        CondBatch {
            values: Tensor::zeros(self.values.shape()),
            keep: vec![false; self.batch()],
        }
    }

    pub fn batch(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn dim(&self) -> usize {
        self.values.shape()[1]
    }

    pub fn values(&self) -> &Tensor<T> {
        &self.values
    }

    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    pub fn is_dropped(&self, i: usize) -> bool {
        !self.keep[i]
    }

    pub fn all_dropped(&self) -> bool {
        self.keep.iter().all(|k| !k)
    }

    pub fn none_dropped(&self) -> bool {
        self.keep.iter().all(|&k| k)
    }
}

/// Two-layer SiLU perceptron with a learned null embedding for dropped
/// conditions.
pub struct ConditionEmbedder<T: Float> {
    pub l1: Linear<T>,
    pub l2: Linear<T>,
    pub null_embedding: Param<T>,
}

impl<T: Float> ConditionEmbedder<T> {
    pub fn new(k: usize, d: usize, rng: &mut SeededRng) -> Self {
        let null = rng.normal_vec::<T>(d).into_iter().map(|v| v * T::lit(0.02)).collect();
        ConditionEmbedder {
            l1: Linear::new(k, d, true, rng),
            l2: Linear::new(d, d, true, rng),
            null_embedding: Param::new(null, &[d]).expect("positive extent"),
        }
    }

    pub fn cond_dim(&self) -> usize {
        self.l1.in_features()
    }

    pub fn dim(&self) -> usize {
        self.l2.out_features()
    }

    /// `[B, d]`: the perceptron output for kept rows, the null embedding for
    /// dropped rows.
    pub fn forward(&self, cond: &CondBatch<T>) -> Result<Tensor<T>> {
        if cond.dim() != self.cond_dim() {
            return Err(Error::mismatch("embed_condition", &[cond.dim()], &[self.cond_dim()]));
        }
        let null = self.null_embedding.tensor();
        let b = cond.batch();
        if cond.all_dropped() {
            return Tensor::zeros(&[b, self.dim()]).add(&null);
        }
        let mlp = self.l2.forward(&self.l1.forward(cond.values())?.silu())?;
        if cond.none_dropped() {
            return Ok(mlp);
        }
        let keep: Vec<T> = cond.keep().iter().map(|&k| if k { T::one() } else { T::zero() }).collect();
        let drop: Vec<T> = keep.iter().map(|&k| T::one() - k).collect();
        let keep = Tensor::new(keep, &[b, 1])?;
        let drop = Tensor::new(drop, &[b, 1])?;
        mlp.mul(&keep)?.add(&null.mul(&drop)?)
    }
}

impl<T: Float> Module<T> for ConditionEmbedder<T> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        self.l1.collect(&join(prefix, "l1"), out);
        self.l2.collect(&join(prefix, "l2"), out);
        out.push((join(prefix, "null_embedding"), &self.null_embedding));
    }
}
