use crate::models::{DitConfig, ModelConfig, UnetConfig};
use crate::nn::Module;
use crate::rng::SeededRng;
use crate::tensor::Float;

pub fn randn(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.normal()).collect()
}

/// Random values everywhere, zero-initialized heads included. Norm gains are
/// perturbed around 1 rather than 0.
pub fn randomize<T: Float>(m: &impl Module<T>, seed: u64, scale: f64) {
    let mut rng = SeededRng::new(seed);
    for (name, p) in m.named_params() {
        let centre = if name.ends_with("gain") { 1.0 } else { 0.0 };
        let v = (0..p.numel()).map(|_| T::lit(centre + rng.normal() * scale)).collect();
        p.set_values(v).unwrap();
    }
}

pub fn zero_where<T: Float>(m: &impl Module<T>, pred: impl Fn(&str) -> bool) {
    for (name, p) in m.named_params() {
        if pred(&name) {
            p.set_values(vec![T::zero(); p.numel()]).unwrap();
        }
    }
}

pub fn tiny_dit(linear: bool, qk_norm: bool) -> ModelConfig {
    ModelConfig {
        channels: 2,
        points: 8,
        cond_dim: 2,
        dit: Some(DitConfig {
            num_blocks: 2,
            num_heads: 2,
            hidden_dim: 16,
            patch_size: 2,
            mlp_ratio: 2.0,
            linear_attention: linear,
            qk_norm,
            qkv_bias: false,
        }),
        ..ModelConfig::airfoil_dit()
    }
}

pub fn tiny_unet() -> ModelConfig {
    ModelConfig {
        channels: 1,
        points: 16,
        cond_dim: 2,
        embed_dim: Some(16),
        unet: Some(UnetConfig {
            block_dims: vec![8, 16],
            attn_heads: 2,
            attn_hidden: 8,
        }),
        ..ModelConfig::airfoil_unet()
    }
}

