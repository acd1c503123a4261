//! Velocity-field networks (U-Net, DiT) and the pointwise MLP baseline.

mod config;
mod dit;
mod mlp;
mod patch;
mod unet;

pub use config::{Architecture, DitConfig, MlpConfig, ModelConfig, UnetConfig};
pub use dit::{Dit, DitBlock};
pub use mlp::PointwiseMlp;
pub use patch::{patchify, patchify_raw, unpatchify, unpatchify_raw};
pub use unet::{AttnBlock, DecoderLevel, EncoderLevel, ResBlock, UNet1d};

use crate::error::{Error, Result};
use crate::nn::{CondBatch, Module};
use crate::rng::SeededRng;
use crate::tensor::{Float, Param, Tensor};

/// `v_θ(z, t, c)` for a batch: `z: [B, C, N]`, one `t` and one condition row
/// per sample.
pub trait VelocityField<T: Float>: Send + Sync {
    fn velocity(&self, z: &Tensor<T>, t: &[T], cond: &CondBatch<T>) -> Result<Tensor<T>>;
}

pub(crate) fn check_input<T: Float>(
    z: &Tensor<T>,
    channels: usize,
    points: usize,
    t: &[T],
    cond: &CondBatch<T>,
) -> Result<()> {
    let s = z.shape();
    if s.len() != 3 || s[1] != channels || s[2] != points {
        return Err(Error::mismatch("velocity", s, &[0, channels, points]));
    }
    if t.len() != s[0] || cond.batch() != s[0] {
        return Err(Error::shape(
            "velocity",
            format!("batch {} with {} times and {} conditions", s[0], t.len(), cond.batch()),
        ));
    }
    Ok(())
}

/// Fixed point coordinates appended to the field as extra input channels.
pub struct InputCoords<T: Float> {
    dim: usize,
    values: Option<Tensor<T>>,
}

impl<T: Float> InputCoords<T> {
    pub(crate) fn new(cfg: &ModelConfig) -> Self {
        InputCoords {
            dim: if cfg.append_coords { cfg.coord_dim } else { 0 },
            values: None,
        }
    }

    pub fn enabled(&self) -> bool {
        self.dim > 0
    }

    /// `coords` is row-major `[N, D]`.
    pub fn set(&mut self, coords: &[T], points: usize) -> Result<()> {
        if coords.len() != points * self.dim {
            return Err(Error::mismatch("coords", &[coords.len()], &[points, self.dim]));
        }
        let t = Tensor::new(coords.to_vec(), &[points, self.dim])?.transpose(0, 1)?.detach();
        self.values = Some(t.reshape(&[1, self.dim, points])?.detach());
        Ok(())
    }

    /// Row-major `[N, D]` copy of the stored coordinates.
    pub fn get(&self) -> Option<Vec<T>> {
        let v = self.values.as_ref()?;
        let &[_, d, n] = v.shape() else { return None };
        let data = v.data();
        Some((0..n).flat_map(|k| (0..d).map(move |j| data[j * n + k])).collect())
    }

    pub(crate) fn append(&self, z: &Tensor<T>) -> Result<Tensor<T>> {
        if !self.enabled() {
            return Ok(z.clone());
        }
        let coords = self.values.as_ref().ok_or_else(|| {
            Error::Contract("model expects point coordinates but none were supplied".into())
        })?;
        let &[b, _, n] = z.shape() else { unreachable!("checked by check_input") };
        let tiled = Tensor::zeros(&[b, self.dim, n]).add(coords)?;
        Tensor::concat(&[z, &tiled], 1)
    }
}

pub enum Model<T: Float> {
    Dit(Dit<T>),
    UNet(UNet1d<T>),
    Mlp(PointwiseMlp<T>),
}

impl<T: Float> Model<T> {
    /// Builds a freshly initialized model. `cfg` must have resolved dims.
    pub fn new(cfg: &ModelConfig, rng: &mut SeededRng) -> Result<Self> {
        Ok(match cfg.architecture {
            Architecture::Dit => Model::Dit(Dit::new(cfg, rng)?),
            Architecture::Unet1d => Model::UNet(UNet1d::new(cfg, rng)?),
            Architecture::MlpBaseline => Model::Mlp(PointwiseMlp::new(cfg, rng)?),
        })
    }

    pub fn is_field_model(&self) -> bool {
        !matches!(self, Model::Mlp(_))
    }

    pub fn coords_mut(&mut self) -> Option<&mut InputCoords<T>> {
        match self {
            Model::Dit(m) => Some(&mut m.coords),
            Model::UNet(m) => Some(&mut m.coords),
            Model::Mlp(_) => None,
        }
    }

    pub fn coords(&self) -> Option<&InputCoords<T>> {
        match self {
            Model::Dit(m) => Some(&m.coords),
            Model::UNet(m) => Some(&m.coords),
            Model::Mlp(_) => None,
        }
    }

    /// Copies parameter values from `(name, shape, data)` triples; every
    /// model parameter must be supplied exactly once.
    pub fn load_params(&self, tensors: &[(String, Vec<usize>, Vec<T>)]) -> Result<()> {
        let params = self.named_params();
        let lookup: std::collections::HashMap<&str, (&Vec<usize>, &Vec<T>)> =
            tensors.iter().map(|(n, s, d)| (n.as_str(), (s, d))).collect();
        for (name, p) in &params {
            let (shape, data) = lookup
                .get(name.as_str())
                .ok_or_else(|| Error::Format(format!("missing parameter {name}")))?;
            if **shape != p.shape() {
                return Err(Error::mismatch("load_params", &p.shape(), shape));
            }
            p.set_values((*data).clone())?;
        }
        Ok(())
    }
}

impl<T: Float> VelocityField<T> for Model<T> {
    fn velocity(&self, z: &Tensor<T>, t: &[T], cond: &CondBatch<T>) -> Result<Tensor<T>> {
        match self {
            Model::Dit(m) => m.velocity(z, t, cond),
            Model::UNet(m) => m.velocity(z, t, cond),
            Model::Mlp(_) => Err(Error::Contract(
                "the pointwise baseline is a regressor, not a velocity field".into(),
            )),
        }
    }
}

impl<T: Float> Module<T> for Model<T> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        match self {
            Model::Dit(m) => m.collect(prefix, out),
            Model::UNet(m) => m.collect(prefix, out),
            Model::Mlp(m) => m.collect(prefix, out),
        }
    }
}
