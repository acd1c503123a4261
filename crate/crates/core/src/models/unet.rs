use super::{check_input, InputCoords, ModelConfig, VelocityField};
use crate::error::Result;
use crate::nn::{
    adaln_modulate, join, modulate, rms_norm_axis, AdaLnHead, AttentionKind, CondBatch,
    ConditionEmbedder, Conv1d, ModulationParams, Module, MultiHeadAttention, TimeEmbedding,
};
use crate::rng::SeededRng;
use crate::tensor::{Float, Param, Tensor};

/// `[B, C] → [B, C, 1]` so a per-sample vector broadcasts over points.
fn per_channel<T: Float>(m: &Tensor<T>) -> Result<Tensor<T>> {
    let &[b, c] = m.shape() else { unreachable!("modulation vectors are [B, C]") };
    m.reshape(&[b, c, 1])
}

/// `res(x) + α ⊙ conv2(SiLU(conv1(rms(x)·(1+γ) + β)))`
pub struct ResBlock<T: Float> {
    pub ada: AdaLnHead<T>,
    pub conv1: Conv1d<T>,
    pub conv2: Conv1d<T>,
    pub skip: Option<Conv1d<T>>,
}

impl<T: Float> ResBlock<T> {
    pub fn new(cin: usize, cout: usize, emb: usize, rng: &mut SeededRng) -> Self {
        ResBlock {
            ada: AdaLnHead::with_widths(emb, &[cin, cin, cout]),
            conv1: Conv1d::new(cin, cout, 3, 1, 1, rng),
            conv2: Conv1d::new(cout, cout, 3, 1, 1, rng),
            skip: (cin != cout).then(|| Conv1d::new(cin, cout, 1, 1, 0, rng)),
        }
    }

    pub fn forward(&self, x: &Tensor<T>, c: &Tensor<T>) -> Result<Tensor<T>> {
        let m = self.ada.forward(c)?;
        let h = modulate(&rms_norm_axis(x, 1, None)?, &per_channel(&m[0])?, &per_channel(&m[1])?)?;
        let h = self.conv2.forward(&self.conv1.forward(&h)?.silu())?;
        let residual = match &self.skip {
            Some(s) => s.forward(x)?,
            None => x.clone(),
        };
        residual.add(&h.mul(&per_channel(&m[2])?)?)
    }
}

impl<T: Float> Module<T> for ResBlock<T> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        self.ada.collect(&join(prefix, "ada"), out);
        self.conv1.collect(&join(prefix, "conv1"), out);
        self.conv2.collect(&join(prefix, "conv2"), out);
        if let Some(s) = &self.skip {
            s.collect(&join(prefix, "skip"), out);
        }
    }
}

/// adaLN-Zero self-attention over the points of a `[B, C, N]` feature map.
pub struct AttnBlock<T: Float> {
    pub ada: AdaLnHead<T>,
    pub attn: MultiHeadAttention<T>,
}

impl<T: Float> AttnBlock<T> {
    pub fn new(d: usize, inner: usize, heads: usize, emb: usize, rng: &mut SeededRng) -> Result<Self> {
        Ok(AttnBlock {
            ada: AdaLnHead::new(emb, d, 3),
            attn: MultiHeadAttention::new(d, inner, heads, AttentionKind::Softmax, false, false, rng)?,
        })
    }

    pub fn forward(&self, x: &Tensor<T>, c: &Tensor<T>) -> Result<Tensor<T>> {
        let m = self.ada.forward(c)?;
        let per_token = |v: &Tensor<T>| {
            let &[b, d] = v.shape() else { unreachable!() };
            v.reshape(&[b, 1, d])
        };
        let mods = ModulationParams {
            beta: per_token(&m[0])?,
            gamma: per_token(&m[1])?,
            alpha: per_token(&m[2])?,
        };
        let tokens = x.transpose(1, 2)?;
        let y = tokens.add(&adaln_modulate(&tokens, &mods, |h| self.attn.forward(h))?)?;
        y.transpose(1, 2)
    }
}

impl<T: Float> Module<T> for AttnBlock<T> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        self.ada.collect(&join(prefix, "ada"), out);
        self.attn.collect(&join(prefix, "attn"), out);
    }
}

pub struct EncoderLevel<T: Float> {
    pub res: [ResBlock<T>; 2],
    pub attn: Option<AttnBlock<T>>,
    /// Stride-2 convolution into the next level; absent at the deepest level.
    pub down: Option<Conv1d<T>>,
}

pub struct DecoderLevel<T: Float> {
    /// Applied after nearest-neighbour upsampling.
    pub up: Conv1d<T>,
    pub res: [ResBlock<T>; 2],
    pub attn: Option<AttnBlock<T>>,
}

/// Encoder-decoder over `[B, C, N]` with skip connections at every level.
pub struct UNet1d<T: Float> {
    pub channels: usize,
    pub points: usize,
    pub time: TimeEmbedding<T>,
    pub cond: ConditionEmbedder<T>,
    pub input: Conv1d<T>,
    pub encoder: Vec<EncoderLevel<T>>,
    pub decoder: Vec<DecoderLevel<T>>,
    pub out_gain: Param<T>,
    pub output: Conv1d<T>,
    pub coords: InputCoords<T>,
}

impl<T: Float> UNet1d<T> {
    pub fn new(cfg: &ModelConfig, rng: &mut SeededRng) -> Result<Self> {
        cfg.validate()?;
        let uc = cfg.unet()?;
        let dims = &uc.block_dims;
        let levels = dims.len();
        let emb = cfg.embed_dim();
        let deep = |l: usize| l + 2 >= levels;
        let time = TimeEmbedding::new(emb, rng)?;
        let cond = ConditionEmbedder::new(cfg.cond_dim, emb, rng);
        let input = Conv1d::new(cfg.input_channels(), dims[0], 3, 1, 1, rng);
        let mut encoder = Vec::with_capacity(levels);
        for l in 0..levels {
            let d = dims[l];
            encoder.push(EncoderLevel {
                res: [ResBlock::new(d, d, emb, rng), ResBlock::new(d, d, emb, rng)],
                attn: deep(l)
                    .then(|| AttnBlock::new(d, uc.attn_hidden, uc.attn_heads, emb, rng))
                    .transpose()?,
                down: (l + 1 < levels).then(|| Conv1d::new(d, dims[l + 1], 3, 2, 1, rng)),
            });
        }
        let mut decoder = Vec::with_capacity(levels.saturating_sub(1));
        for l in (0..levels - 1).rev() {
            let d = dims[l];
            decoder.push(DecoderLevel {
                up: Conv1d::new(dims[l + 1], d, 3, 1, 1, rng),
                res: [ResBlock::new(2 * d, d, emb, rng), ResBlock::new(d, d, emb, rng)],
                attn: deep(l)
                    .then(|| AttnBlock::new(d, uc.attn_hidden, uc.attn_heads, emb, rng))
                    .transpose()?,
            });
        }
        Ok(UNet1d {
            channels: cfg.channels,
            points: cfg.points,
            time,
            cond,
            input,
            encoder,
            decoder,
            out_gain: Param::ones(&[dims[0], 1]),
            output: Conv1d::zeros(dims[0], cfg.channels, 1, 1, 0),
            coords: InputCoords::new(cfg),
        })
    }

    pub fn conditioning(&self, t: &[T], cond: &CondBatch<T>) -> Result<Tensor<T>> {
        Ok(self.time.forward(t)?.add(&self.cond.forward(cond)?)?.silu())
    }
}

impl<T: Float> VelocityField<T> for UNet1d<T> {
    fn velocity(&self, z: &Tensor<T>, t: &[T], cond: &CondBatch<T>) -> Result<Tensor<T>> {
        check_input(z, self.channels, self.points, t, cond)?;
        let c = self.conditioning(t, cond)?;
        let mut h = self.input.forward(&self.coords.append(z)?)?;
        let mut skips = Vec::with_capacity(self.encoder.len());
        for level in &self.encoder {
            h = level.res[0].forward(&h, &c)?;
            h = level.res[1].forward(&h, &c)?;
            if let Some(a) = &level.attn {
                h = a.forward(&h, &c)?;
            }
            if let Some(down) = &level.down {
                skips.push(h.clone());
                h = down.forward(&h)?;
            }
        }
        for level in &self.decoder {
            let skip = skips.pop().expect("one skip per decoder level");
            h = level.up.forward(&h.repeat_interleave(2, 2)?)?;
            h = Tensor::concat(&[&h, &skip], 1)?;
            h = level.res[0].forward(&h, &c)?;
            h = level.res[1].forward(&h, &c)?;
            if let Some(a) = &level.attn {
                h = a.forward(&h, &c)?;
            }
        }
        let h = rms_norm_axis(&h, 1, Some(&self.out_gain.tensor()))?.silu();
        self.output.forward(&h)
    }
}

impl<T: Float> Module<T> for UNet1d<T> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        self.time.collect(&join(prefix, "time"), out);
        self.cond.collect(&join(prefix, "cond"), out);
        self.input.collect(&join(prefix, "input"), out);
        for (l, level) in self.encoder.iter().enumerate() {
            let p = join(prefix, &format!("enc.{l}"));
            level.res[0].collect(&join(&p, "res.0"), out);
            level.res[1].collect(&join(&p, "res.1"), out);
            if let Some(a) = &level.attn {
                a.collect(&join(&p, "attn"), out);
            }
            if let Some(d) = &level.down {
                d.collect(&join(&p, "down"), out);
            }
        }
        for (i, level) in self.decoder.iter().enumerate() {
            let p = join(prefix, &format!("dec.{i}"));
            level.up.collect(&join(&p, "up"), out);
            level.res[0].collect(&join(&p, "res.0"), out);
            level.res[1].collect(&join(&p, "res.1"), out);
            if let Some(a) = &level.attn {
                a.collect(&join(&p, "attn"), out);
            }
        }
        out.push((join(prefix, "out_gain"), &self.out_gain));
        self.output.collect(&join(prefix, "output"), out);
    }
}
