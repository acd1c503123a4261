use crate::error::{Error, Result};
use crate::nn::Linear;
use crate::tensor::{Float, Tensor};

/// `[B, C, N] → [B, N/p, p·C]`. Token `j` holds points `j·p .. j·p + p`;
/// within a token the layout is point-major, channel-minor.
pub fn patchify_raw<T: Float>(x: &Tensor<T>, p: usize) -> Result<Tensor<T>> {
    let &[b, c, n] = x.shape() else {
        return Err(Error::shape("patchify", format!("expected [B, C, N], got {:?}", x.shape())));
    };
    if p == 0 || n % p != 0 {
        return Err(Error::Config(format!("points {n} not divisible by patch size {p}")));
    }
    x.permute(&[0, 2, 1])?.reshape(&[b, n / p, p * c])
}

/// Inverse of [`patchify_raw`]: `[B, T, p·C] → [B, C, T·p]`.
pub fn unpatchify_raw<T: Float>(tokens: &Tensor<T>, channels: usize) -> Result<Tensor<T>> {
    let &[b, t, w] = tokens.shape() else {
        return Err(Error::shape("unpatchify", format!("expected [B, T, p·C], got {:?}", tokens.shape())));
    };
    if channels == 0 || w % channels != 0 {
        return Err(Error::shape(
            "unpatchify",
            format!("token width {w} is not a multiple of {channels} channels"),
        ));
    }
    let p = w / channels;
    tokens.reshape(&[b, t * p, channels])?.permute(&[0, 2, 1])
}

/// Groups points into tokens and projects each to the model width.
pub fn patchify<T: Float>(x: &Tensor<T>, p: usize, proj: &Linear<T>) -> Result<Tensor<T>> {
    proj.forward(&patchify_raw(x, p)?)
}

/// Projects each token to `p·C` values and scatters them back to `[B, C, N]`.
pub fn unpatchify<T: Float>(
    tokens: &Tensor<T>,
    p: usize,
    channels: usize,
    points: usize,
    proj: &Linear<T>,
) -> Result<Tensor<T>> {
    if tokens.rank() != 3 || tokens.shape()[1] * p != points {
        return Err(Error::shape(
            "unpatchify",
            format!("{:?} tokens × patch {p} ≠ {points} points", tokens.shape()),
        ));
    }
    if proj.out_features() != p * channels {
        return Err(Error::mismatch("unpatchify", &[proj.out_features()], &[p * channels]));
    }
    unpatchify_raw(&proj.forward(tokens)?, channels)
}
