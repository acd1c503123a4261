use super::ModelConfig;
use crate::error::{Error, Result};
use crate::nn::{join, Linear, Module};
use crate::rng::SeededRng;
use crate::tensor::{Float, Param, Tensor};

/// Pointwise regressor: `(coords, condition) → field value` at one point.
pub struct PointwiseMlp<T: Float> {
    pub layers: Vec<Linear<T>>,
    pub head: Linear<T>,
    pub dropout: f64,
    pub coord_dim: usize,
    pub cond_dim: usize,
    pub channels: usize,
}

impl<T: Float> PointwiseMlp<T> {
    pub fn new(cfg: &ModelConfig, rng: &mut SeededRng) -> Result<Self> {
        cfg.validate()?;
        let mc = cfg.mlp()?;
        let input = cfg.coord_dim + cfg.cond_dim;
        let layers = (0..mc.num_layers)
            .map(|i| Linear::new(if i == 0 { input } else { mc.hidden_dim }, mc.hidden_dim, true, rng))
            .collect();
        Ok(PointwiseMlp {
            layers,
            head: Linear::new(mc.hidden_dim, cfg.channels, true, rng),
            dropout: mc.dropout,
            coord_dim: cfg.coord_dim,
            cond_dim: cfg.cond_dim,
            channels: cfg.channels,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.coord_dim + self.cond_dim
    }

    /// `x: [P, D + K] → [P, C]`. Dropout is applied after every hidden
    /// layer when `train` supplies a generator.
    pub fn forward(&self, x: &Tensor<T>, mut train: Option<&mut SeededRng>) -> Result<Tensor<T>> {
        if x.rank() != 2 || x.shape()[1] != self.input_dim() {
            return Err(Error::mismatch("mlp_baseline", x.shape(), &[0, self.input_dim()]));
        }
        let mut h = x.clone();
        for layer in &self.layers {
            h = layer.forward(&h)?.elu();
            if let Some(rng) = train.as_deref_mut() {
                if self.dropout > 0.0 {
                    let keep = 1.0 - self.dropout;
                    let mask: Vec<T> = (0..h.numel())
                        .map(|_| if rng.uniform() < keep { T::lit(1.0 / keep) } else { T::zero() })
                        .collect();
                    h = h.mul(&Tensor::new(mask, h.shape())?)?;
                }
            }
        }
        self.head.forward(&h)
    }

    /// Rows `[coords_k, cond]` for every point `k` of one sample.
    pub fn inputs_for(&self, coords: &[T], cond: &[T]) -> Result<Tensor<T>> {
        if cond.len() != self.cond_dim || coords.len() % self.coord_dim.max(1) != 0 {
            return Err(Error::mismatch("mlp_baseline", &[coords.len(), cond.len()], &[self.coord_dim, self.cond_dim]));
        }
        let n = coords.len() / self.coord_dim;
        let mut rows = Vec::with_capacity(n * self.input_dim());
        for point in coords.chunks(self.coord_dim) {
            rows.extend_from_slice(point);
            rows.extend_from_slice(cond);
        }
        Tensor::new(rows, &[n, self.input_dim()])
    }

    /// Predicted field `[C, N]` for one condition (no dropout).
    pub fn predict_field(&self, coords: &[T], cond: &[T]) -> Result<Tensor<T>> {
        self.forward(&self.inputs_for(coords, cond)?, None)?.transpose(0, 1)
    }
}

impl<T: Float> Module<T> for PointwiseMlp<T> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        for (i, l) in self.layers.iter().enumerate() {
            l.collect(&join(prefix, &format!("layers.{i}")), out);
        }
        self.head.collect(&join(prefix, "head"), out);
    }
}
