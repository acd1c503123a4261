use crate::error::Result;
use crate::tensor::{Float, Tensor};

pub const RMS_EPS: f64 = 1e-6;

/// `gain ⊙ x / sqrt(mean(x²) + ε)` over the last axis.
pub fn rms_norm<T: Float>(x: &Tensor<T>, gain: Option<&Tensor<T>>) -> Result<Tensor<T>> {
    rms_norm_axis(x, -1, gain)
}

/// RMS normalization over an arbitrary axis; `gain` must broadcast against `x`.
pub fn rms_norm_axis<T: Float>(
    x: &Tensor<T>,
    axis: isize,
    gain: Option<&Tensor<T>>,
) -> Result<Tensor<T>> {
    let inv = x
        .square()
        .mean_axis(axis, true)?
        .add_scalar(T::lit(RMS_EPS))
        .powf(T::lit(-0.5))?;
    let y = x.mul(&inv)?;
    match gain {
        Some(g) => y.mul(g),
        None => Ok(y),
    }
}
