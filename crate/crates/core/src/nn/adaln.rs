use super::{join, rms_norm, Linear, Module};
use crate::error::{Error, Result};
use crate::tensor::{Float, Param, Tensor};

/// Shift `beta`, scale `gamma` and gate `alpha`, each broadcastable against
/// the activations they modulate.
#[derive(Debug, Clone)]
pub struct ModulationParams<T: Float> {
    pub beta: Tensor<T>,
    pub gamma: Tensor<T>,
    pub alpha: Tensor<T>,
}

/// `x·(1 + gamma) + beta`
pub fn modulate<T: Float>(x: &Tensor<T>, beta: &Tensor<T>, gamma: &Tensor<T>) -> Result<Tensor<T>> {
    x.mul(&gamma.add_scalar(T::one()))?.add(beta)
}

/// `alpha ⊙ layer(rms_norm(x)·(1 + gamma) + beta)`; the caller adds the
/// result to the residual stream.
pub fn adaln_modulate<T: Float>(
    x: &Tensor<T>,
    mods: &ModulationParams<T>,
    layer: impl FnOnce(&Tensor<T>) -> Result<Tensor<T>>,
) -> Result<Tensor<T>> {
    let h = modulate(&rms_norm(x, None)?, &mods.beta, &mods.gamma)?;
    layer(&h)?.mul(&mods.alpha)
}

/// Zero-initialized linear map from the (already activated) conditioning
/// vector to a list of modulation vectors.
pub struct AdaLnHead<T: Float> {
    pub lin: Linear<T>,
    pub widths: Vec<usize>,
}

impl<T: Float> AdaLnHead<T> {
    /// `parts` outputs of width `d`.
    pub fn new(emb: usize, d: usize, parts: usize) -> Self {
        Self::with_widths(emb, &vec![d; parts])
    }

    pub fn with_widths(emb: usize, widths: &[usize]) -> Self {
        AdaLnHead {
            lin: Linear::zeros(emb, widths.iter().sum(), true),
            widths: widths.to_vec(),
        }
    }

    /// One `[B, width]` tensor per configured width.
    pub fn forward(&self, c: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        if c.rank() != 2 {
            return Err(Error::shape("adaln_head", format!("expected [B, emb], got {:?}", c.shape())));
        }
        let all = self.lin.forward(c)?;
        let mut start = 0;
        self.widths
            .iter()
            .map(|&w| {
                let part = all.narrow(-1, start, w);
                start += w;
                part
            })
            .collect()
    }
}

impl<T: Float> Module<T> for AdaLnHead<T> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        self.lin.collect(&join(prefix, "lin"), out);
    }
}
