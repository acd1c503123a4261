//! Rectified flow matching: interpolation path, training loss, guided
//! velocity and Euler sampling.

use crate::error::{Error, Result};
use crate::models::VelocityField;
use crate::nn::CondBatch;
use crate::rng::SeededRng;
use crate::tensor::{no_grad, Float, Tensor};
use serde::{Deserialize, Serialize};

/// A point on the straight path from noise `eps` (t = 0) to data `x` (t = 1).
#[derive(Debug, Clone)]
pub struct FlowState<T: Float> {
    pub z: Tensor<T>,
    pub t: T,
    pub eps: Tensor<T>,
    pub x: Tensor<T>,
}

/// `z = (1 - t)·eps + t·x`
pub fn interpolate<T: Float>(x: &Tensor<T>, eps: &Tensor<T>, t: T) -> Result<FlowState<T>> {
    if x.shape() != eps.shape() {
        return Err(Error::mismatch("interpolate", x.shape(), eps.shape()));
    }
    if !(t >= T::zero() && t <= T::one()) {
        return Err(Error::Domain {
            op: "interpolate",
            msg: format!("t = {} outside [0, 1]", t.as_f64()),
        });
    }
    let z = lerp(eps.data(), x.data(), t);
    Ok(FlowState {
        z: Tensor::new(z, x.shape())?,
        t,
        eps: eps.detach(),
        x: x.detach(),
    })
}

fn lerp<T: Float>(eps: &[T], x: &[T], t: T) -> Vec<T> {
    let s = T::one() - t;
    eps.iter().zip(x).map(|(&e, &v)| s * e + t * v).collect()
}

/// `x - eps`; the path's velocity does not depend on `t`.
pub fn target_velocity<T: Float>(state: &FlowState<T>) -> Result<Tensor<T>> {
    Ok(state.x.sub(&state.eps)?.detach())
}

/// Random draws behind one loss evaluation: a time, a noise field and a
/// keep/drop decision per sample.
#[derive(Debug, Clone)]
pub struct FlowDraw<T: Float> {
    pub t: Vec<T>,
    pub eps: Vec<T>,
    pub keep: Vec<bool>,
}

impl<T: Float> FlowDraw<T> {
    /// `t ~ U[0, 1]` per sample, `eps ~ N(0, I)` of `batch × per_sample`
    /// values, conditions dropped with probability `p_drop`.
    pub fn sample(rng: &mut SeededRng, batch: usize, per_sample: usize, p_drop: f64) -> Self {
        let t = (0..batch).map(|_| T::lit(rng.uniform())).collect();
        let eps = rng.normal_vec(batch * per_sample);
        let keep = (0..batch).map(|_| rng.uniform() >= p_drop).collect();
        FlowDraw { t, eps, keep }
    }
}

/// Flow-matching loss for `x: [B, C, N]` with condition rows `cond: [B·K]`
/// and explicit random draws.
pub fn fm_loss_with<T: Float>(
    model: &dyn VelocityField<T>,
    x: &Tensor<T>,
    cond: &[T],
    draw: &FlowDraw<T>,
) -> Result<Tensor<T>> {
    let &[b, c, n] = x.shape() else {
        return Err(Error::shape("fm_loss", format!("expected [B, C, N], got {:?}", x.shape())));
    };
    if b == 0 {
        return Err(Error::Contract("fm_loss on an empty batch".into()));
    }
    let per = c * n;
    if draw.t.len() != b || draw.keep.len() != b || draw.eps.len() != b * per {
        return Err(Error::shape("fm_loss", "random draws do not match the batch"));
    }
    if cond.len() % b != 0 {
        return Err(Error::mismatch("fm_loss", &[cond.len()], &[b, 0]));
    }
    let k = cond.len() / b;
    let mut z = Vec::with_capacity(b * per);
    let mut target = Vec::with_capacity(b * per);
    for i in 0..b {
        let xs = &x.data()[i * per..(i + 1) * per];
        let es = &draw.eps[i * per..(i + 1) * per];
        z.extend(lerp(es, xs, draw.t[i]));
        target.extend(xs.iter().zip(es).map(|(&v, &e)| v - e));
    }
    let z = Tensor::new(z, x.shape())?;
    let target = Tensor::new(target, x.shape())?;
    let cond = CondBatch::new(cond.to_vec(), b, k, draw.keep.clone())?;
    let v = model.velocity(&z, &draw.t, &cond)?;
    Ok(v.sub(&target)?.square().mean_all())
}

/// Draws `FlowDraw` from `rng` and evaluates the loss.
pub fn fm_loss<T: Float>(
    model: &dyn VelocityField<T>,
    x: &Tensor<T>,
    cond: &[T],
    p_drop: f64,
    rng: &mut SeededRng,
) -> Result<Tensor<T>> {
    let s = x.shape();
    if s.len() != 3 {
        return Err(Error::shape("fm_loss", format!("expected [B, C, N], got {s:?}")));
    }
    let draw = FlowDraw::sample(rng, s[0], s[1] * s[2], p_drop);
    fm_loss_with(model, x, cond, &draw)
}

/// `v(z, t, ∅) + s·(v(z, t, c) - v(z, t, ∅))`, evaluated once when `s == 1`.
pub fn guided_velocity<T: Float>(
    model: &dyn VelocityField<T>,
    z: &Tensor<T>,
    t: &[T],
    cond: &CondBatch<T>,
    scale: f64,
) -> Result<Tensor<T>> {
    let v_cond = model.velocity(z, t, cond)?;
    if scale == 1.0 {
        return Ok(v_cond);
    }
    let v_null = model.velocity(z, t, &cond.to_dropped())?;
    v_null.add(&v_cond.sub(&v_null)?.scale(T::lit(scale)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_scale")]
    pub guidance_scale: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_steps() -> usize {
    500
}

fn default_scale() -> f64 {
    2.0
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            steps: default_steps(),
            guidance_scale: default_scale(),
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::Config("sampler steps must be at least 1".into()));
        }
        if !(self.guidance_scale >= 0.0 && self.guidance_scale.is_finite()) {
            return Err(Error::Config(format!(
                "guidance scale must be finite and non-negative, got {}",
                self.guidance_scale
            )));
        }
        Ok(())
    }
}

/// Initial noise for condition row `i`: its own stream of `cfg.seed`, so a
/// sample does not depend on how conditions are batched.
pub fn initial_noise<T: Float>(seed: u64, row: usize, len: usize) -> Vec<T> {
    SeededRng::stream(seed, row as u64).normal_vec(len)
}

/// Integrates `dz/dt = v` from Gaussian noise at t = 0 to t = 1 for every
/// condition row of `cond: [B·K]`. Returns `[B, C, N]` with `shape = [C, N]`.
pub fn euler_sample_batch<T: Float>(
    model: &dyn VelocityField<T>,
    cond: &[T],
    batch: usize,
    shape: [usize; 2],
    cfg: &SamplerConfig,
) -> Result<Tensor<T>> {
    euler_sample_rows(model, cond, batch, 0, shape, cfg)
}

/// [`euler_sample_batch`] for rows `first_row..first_row + batch` of a larger
/// condition list, so splitting the list into chunks changes nothing.
pub fn euler_sample_rows<T: Float>(
    model: &dyn VelocityField<T>,
    cond: &[T],
    batch: usize,
    first_row: usize,
    shape: [usize; 2],
    cfg: &SamplerConfig,
) -> Result<Tensor<T>> {
    cfg.validate()?;
    if batch == 0 {
        return Err(Error::Contract("euler_sample with no conditions".into()));
    }
    if cond.len() % batch != 0 {
        return Err(Error::mismatch("euler_sample", &[cond.len()], &[batch, 0]));
    }
    let k = cond.len() / batch;
    let per = shape[0] * shape[1];
    let cond = CondBatch::conditional(cond.to_vec(), batch, k)?;
    let mut z: Vec<T> = (0..batch).flat_map(|i| initial_noise::<T>(cfg.seed, first_row + i, per)).collect();
    let dt = T::lit(1.0 / cfg.steps as f64);
    no_grad(|| {
        for step in 0..cfg.steps {
            let t = vec![T::lit(step as f64 / cfg.steps as f64); batch];
            let zt = Tensor::new(z.clone(), &[batch, shape[0], shape[1]])?;
            let v = guided_velocity(model, &zt, &t, &cond, cfg.guidance_scale)?;
            if v.shape() != zt.shape() {
                return Err(Error::mismatch("euler_sample", v.shape(), zt.shape()));
            }
            for (zi, &vi) in z.iter_mut().zip(v.data()) {
                *zi = *zi + dt * vi;
            }
        }
        Tensor::new(z, &[batch, shape[0], shape[1]])
    })
}

/// One condition vector in, one `[C, N]` field out.
pub fn euler_sample<T: Float>(
    model: &dyn VelocityField<T>,
    cond: &[T],
    shape: [usize; 2],
    cfg: &SamplerConfig,
) -> Result<Tensor<T>> {
    euler_sample_batch(model, cond, 1, shape, cfg)?.reshape(&shape)
}
