use crate::error::{Error, Result};
use crate::tensor::{Float, Param};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled decay; 0 gives plain Adam.
    pub weight_decay: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// One AdamW update of `p` in place. `step` counts from 1.
///
/// `p ← p(1 − lr·wd)`, then `p ← p − lr·m̂ / (√v̂ + eps)`.
pub fn adamw_step<T: Float>(p: &mut [T], g: &[T], m: &mut [T], v: &mut [T], step: u64, lr: f64, hp: &AdamParams) {
    assert!(step >= 1, "adam steps count from 1");
    assert!(p.len() == g.len() && p.len() == m.len() && p.len() == v.len(), "adam buffers misaligned");
    let bc1 = 1.0 - hp.beta1.powi(step as i32);
    let bc2_sqrt = (1.0 - hp.beta2.powi(step as i32)).sqrt();
    let (b1, b2) = (T::lit(hp.beta1), T::lit(hp.beta2));
    let decay = T::lit(1.0 - lr * hp.weight_decay);
    let step_size = T::lit(lr / bc1);
    let (bc2_sqrt, eps) = (T::lit(bc2_sqrt), T::lit(hp.eps));
    for i in 0..p.len() {
        let gi = g[i];
        m[i] = b1 * m[i] + (T::one() - b1) * gi;
        v[i] = b2 * v[i] + (T::one() - b2) * gi * gi;
        let denom = v[i].sqrt() / bc2_sqrt + eps;
        p[i] = p[i] * decay - step_size * m[i] / denom;
    }
}

/// L² norm of all gradients concatenated, accumulated in `f64` in order.
pub fn global_norm<T: Float>(grads: &[Vec<T>]) -> f64 {
    grads
        .iter()
        .flat_map(|g| g.iter())
        .map(|v| v.as_f64() * v.as_f64())
        .sum::<f64>()
        .sqrt()
}

/// Rescales every gradient by `max_norm / norm` when the global norm
/// exceeds `max_norm`. Returns the norm observed before clipping.
pub fn clip_grad_norm<T: Float>(grads: &mut [Vec<T>], max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm > max_norm && norm.is_finite() {
        let s = T::lit(max_norm / norm);
        grads.iter_mut().flat_map(|g| g.iter_mut()).for_each(|v| *v = *v * s);
    }
    norm
}

/// First and second moments per parameter, plus the number of updates
/// applied so far.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimState<T: Float> {
    pub step: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Float> OptimState<T> {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Param<T>>) -> Self {
        let sizes: Vec<usize> = params.into_iter().map(Param::numel).collect();
        OptimState {
            step: 0,
            m: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            v: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }

    /// Applies one update with precomputed (possibly clipped) gradients.
    pub fn update(&mut self, params: &[&Param<T>], grads: &[Vec<T>], lr: f64, hp: &AdamParams) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != params.len() {
            return Err(Error::Contract(format!(
                "optimizer holds {} moment buffers for {} parameters and {} gradients",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.step += 1;
        for (i, p) in params.iter().enumerate() {
            let mut values = p.values();
            adamw_step(&mut values, &grads[i], &mut self.m[i], &mut self.v[i], self.step, lr, hp);
            p.set_values(values)?;
        }
        Ok(())
    }
}

/// Gradient of each parameter, zeros where none was produced.
pub(crate) fn collect_grads<T: Float>(params: &[&Param<T>]) -> Vec<Vec<T>> {
    params
        .iter()
        .map(|p| p.grad().unwrap_or_else(|| vec![T::zero(); p.numel()]))
        .collect()
}
