use super::patch::{patchify, unpatchify};
use super::{check_input, InputCoords, ModelConfig, VelocityField};
use crate::error::Result;
use crate::nn::{
    adaln_modulate, join, modulate, rms_norm, AdaLnHead, AttentionKind, CondBatch,
    ConditionEmbedder, Linear, ModulationParams, Module, MultiHeadAttention, SwiGlu,
    TimeEmbedding,
};
use crate::rng::SeededRng;
use crate::tensor::{Float, Param, Tensor};

/// `[B, d] → [B, 1, d]` so a per-sample vector broadcasts over tokens.
fn per_token<T: Float>(m: &Tensor<T>) -> Result<Tensor<T>> {
    let &[b, d] = m.shape() else { unreachable!("modulation vectors are [B, d]") };
    m.reshape(&[b, 1, d])
}

pub struct DitBlock<T: Float> {
    pub ada: AdaLnHead<T>,
    pub attn: MultiHeadAttention<T>,
    pub ffn: SwiGlu<T>,
}

impl<T: Float> DitBlock<T> {
    pub fn new(
        d: usize,
        heads: usize,
        ratio: f64,
        kind: AttentionKind,
        qk_norm: bool,
        qkv_bias: bool,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        Ok(DitBlock {
            ada: AdaLnHead::new(d, d, 6),
            attn: MultiHeadAttention::new(d, d, heads, kind, qk_norm, qkv_bias, rng)?,
            ffn: SwiGlu::new(d, ratio, rng),
        })
    }

    /// `x: [B, T, d]`, `c: [B, d]` (already passed through SiLU).
    pub fn forward(&self, x: &Tensor<T>, c: &Tensor<T>) -> Result<Tensor<T>> {
        let m = self
            .ada
            .forward(c)?
            .iter()
            .map(per_token)
            .collect::<Result<Vec<_>>>()?;
        let attn_mods = ModulationParams {
            beta: m[0].clone(),
            gamma: m[1].clone(),
            alpha: m[2].clone(),
        };
        let ffn_mods = ModulationParams {
            beta: m[3].clone(),
            gamma: m[4].clone(),
            alpha: m[5].clone(),
        };
        let x = x.add(&adaln_modulate(x, &attn_mods, |h| self.attn.forward(h))?)?;
        x.add(&adaln_modulate(&x, &ffn_mods, |h| self.ffn.forward(h))?)
    }
}

impl<T: Float> Module<T> for DitBlock<T> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        self.ada.collect(&join(prefix, "ada"), out);
        self.attn.collect(&join(prefix, "attn"), out);
        self.ffn.collect(&join(prefix, "ffn"), out);
    }
}

/// Diffusion transformer over 1D patch tokens.
pub struct Dit<T: Float> {
    pub channels: usize,
    pub points: usize,
    pub patch: usize,
    pub patch_embed: Linear<T>,
    pub pos_embed: Param<T>,
    pub time: TimeEmbedding<T>,
    pub cond: ConditionEmbedder<T>,
    pub blocks: Vec<DitBlock<T>>,
    pub final_ada: AdaLnHead<T>,
    pub final_proj: Linear<T>,
    pub coords: InputCoords<T>,
}

impl<T: Float> Dit<T> {
    pub fn new(cfg: &ModelConfig, rng: &mut SeededRng) -> Result<Self> {
        cfg.validate()?;
        let dc = cfg.dit()?;
        let (d, p) = (dc.hidden_dim, dc.patch_size);
        let tokens = cfg.points / p;
        let kind = if dc.linear_attention {
            AttentionKind::Linear
        } else {
            AttentionKind::Softmax
        };
        let patch_embed = Linear::new(cfg.input_channels() * p, d, true, rng);
        let pos: Vec<T> = rng
            .normal_vec::<T>(tokens * d)
            .into_iter()
            .map(|v| v * T::lit(0.02))
            .collect();
        let time = TimeEmbedding::new(d, rng)?;
        let cond = ConditionEmbedder::new(cfg.cond_dim, d, rng);
        let blocks = (0..dc.num_blocks)
            .map(|_| DitBlock::new(d, dc.num_heads, dc.mlp_ratio, kind, dc.qk_norm, dc.qkv_bias, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dit {
            channels: cfg.channels,
            points: cfg.points,
            patch: p,
            patch_embed,
            pos_embed: Param::new(pos, &[tokens, d])?,
            time,
            cond,
            blocks,
            final_ada: AdaLnHead::new(d, d, 2),
            final_proj: Linear::zeros(d, cfg.channels * p, true),
            coords: InputCoords::new(cfg),
        })
    }

    /// `SiLU(time_embedding(t) + embed_condition(c))`, `[B, d]`.
    pub fn conditioning(&self, t: &[T], cond: &CondBatch<T>) -> Result<Tensor<T>> {
        Ok(self.time.forward(t)?.add(&self.cond.forward(cond)?)?.silu())
    }
}

impl<T: Float> VelocityField<T> for Dit<T> {
    fn velocity(&self, z: &Tensor<T>, t: &[T], cond: &CondBatch<T>) -> Result<Tensor<T>> {
        check_input(z, self.channels, self.points, t, cond)?;
        let c = self.conditioning(t, cond)?;
        let input = self.coords.append(z)?;
        let mut x = patchify(&input, self.patch, &self.patch_embed)?.add(&self.pos_embed.tensor())?;
        for block in &self.blocks {
            x = block.forward(&x, &c)?;
        }
        let m = self.final_ada.forward(&c)?;
        let h = modulate(&rms_norm(&x, None)?, &per_token(&m[0])?, &per_token(&m[1])?)?;
        unpatchify(&h, self.patch, self.channels, self.points, &self.final_proj)
    }
}

impl<T: Float> Module<T> for Dit<T> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        self.patch_embed.collect(&join(prefix, "patch_embed"), out);
        out.push((join(prefix, "pos_embed"), &self.pos_embed));
        self.time.collect(&join(prefix, "time"), out);
        self.cond.collect(&join(prefix, "cond"), out);
        for (i, b) in self.blocks.iter().enumerate() {
            b.collect(&join(prefix, &format!("blocks.{i}")), out);
        }
        self.final_ada.collect(&join(prefix, "final_ada"), out);
        self.final_proj.collect(&join(prefix, "final_proj"), out);
    }
}
