use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Unet1d,
    Dit,
    MlpBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnetConfig {
    /// Channel width per resolution level; the list length is the depth.
    pub block_dims: Vec<usize>,
    pub attn_heads: usize,
    /// Inner width of the attention blocks at the two deepest levels.
    pub attn_hidden: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DitConfig {
    pub num_blocks: usize,
    pub num_heads: usize,
    pub hidden_dim: usize,
    pub patch_size: usize,
    pub mlp_ratio: f64,
    #[serde(default)]
    pub linear_attention: bool,
    #[serde(default)]
    pub qk_norm: bool,
    #[serde(default)]
    pub qkv_bias: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub dropout: f64,
}

/// Architecture hyperparameters. `channels`, `points` and `cond_dim` may be
/// left at 0 and filled from the dataset with [`ModelConfig::resolve_dims`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub architecture: Architecture,
    #[serde(default)]
    pub channels: usize,
    #[serde(default)]
    pub points: usize,
    #[serde(default)]
    pub cond_dim: usize,
    /// Width of the time/condition embedding. Defaults to the DiT hidden
    /// width or four times the first U-Net level.
    #[serde(default)]
    pub embed_dim: Option<usize>,
    /// Append point coordinates as extra input channels (field models) or
    /// the coordinate width fed to the pointwise baseline.
    #[serde(default)]
    pub append_coords: bool,
    #[serde(default)]
    pub coord_dim: usize,
    /// Recorded only; execution is always binary32.
    #[serde(default = "default_precision")]
    pub precision: String,
    #[serde(default)]
    pub unet: Option<UnetConfig>,
    #[serde(default)]
    pub dit: Option<DitConfig>,
    #[serde(default)]
    pub mlp: Option<MlpConfig>,
}

fn default_precision() -> String {
    "float32".into()
}

impl ModelConfig {
    fn base(architecture: Architecture, channels: usize, points: usize, cond_dim: usize) -> Self {
        ModelConfig {
            architecture,
            channels,
            points,
            cond_dim,
            embed_dim: None,
            append_coords: false,
            coord_dim: 0,
            precision: default_precision(),
            unet: None,
            dit: None,
            mlp: None,
        }
    }

    pub fn airfoil_unet() -> Self {
        ModelConfig {
            unet: Some(UnetConfig {
                block_dims: vec![128, 256, 512],
                attn_heads: 8,
                attn_hidden: 512,
            }),
            ..Self::base(Architecture::Unet1d, 1, 0, 2)
        }
    }

    pub fn airfoil_dit() -> Self {
        ModelConfig {
            dit: Some(DitConfig {
                num_blocks: 6,
                num_heads: 4,
                hidden_dim: 128,
                patch_size: 1,
                mlp_ratio: 2.5,
                linear_attention: false,
                qk_norm: false,
                qkv_bias: false,
            }),
            ..Self::base(Architecture::Dit, 1, 0, 2)
        }
    }

    pub fn aircraft_dit() -> Self {
        ModelConfig {
            precision: "bfloat16".into(),
            dit: Some(DitConfig {
                num_blocks: 12,
                num_heads: 8,
                hidden_dim: 256,
                patch_size: 1,
                mlp_ratio: 4.0,
                linear_attention: true,
                qk_norm: true,
                qkv_bias: false,
            }),
            ..Self::base(Architecture::Dit, 4, 260_774, 3)
        }
    }

    pub fn airfoil_mlp() -> Self {
        ModelConfig {
            coord_dim: 1,
            mlp: Some(MlpConfig {
                hidden_dim: 113,
                num_layers: 10,
                dropout: 7.76e-4,
            }),
            ..Self::base(Architecture::MlpBaseline, 1, 0, 2)
        }
    }

    /// Desk-scale DiT used against the synthetic dataset.
    pub fn synth_dit() -> Self {
        ModelConfig {
            dit: Some(DitConfig {
                num_blocks: 2,
                num_heads: 4,
                hidden_dim: 64,
                patch_size: 1,
                mlp_ratio: 2.5,
                linear_attention: false,
                qk_norm: false,
                qkv_bias: false,
            }),
            ..Self::base(Architecture::Dit, 1, 64, 2)
        }
    }

    /// Desk-scale U-Net used against the synthetic dataset.
    pub fn synth_unet() -> Self {
        ModelConfig {
            unet: Some(UnetConfig {
                block_dims: vec![32, 64],
                attn_heads: 4,
                attn_hidden: 64,
            }),
            ..Self::base(Architecture::Unet1d, 1, 64, 2)
        }
    }

    /// Desk-scale pointwise baseline used against the synthetic dataset.
    pub fn synth_mlp() -> Self {
        ModelConfig {
            coord_dim: 1,
            mlp: Some(MlpConfig {
                hidden_dim: 113,
                num_layers: 10,
                dropout: 7.76e-4,
            }),
            ..Self::base(Architecture::MlpBaseline, 1, 64, 2)
        }
    }

    /// Fills zero-valued dimensions from a dataset and rejects conflicts.
    pub fn resolve_dims(&mut self, channels: usize, points: usize, cond_dim: usize) -> Result<()> {
        for (name, slot, value) in [
            ("channels", &mut self.channels, channels),
            ("points", &mut self.points, points),
            ("cond_dim", &mut self.cond_dim, cond_dim),
        ] {
            if *slot == 0 {
                *slot = value;
            } else if *slot != value {
                return Err(Error::Config(format!(
                    "model.{name} = {} but the dataset has {value}",
                    *slot
                )));
            }
        }
        Ok(())
    }

    pub fn embed_dim(&self) -> usize {
        if let Some(e) = self.embed_dim {
            return e;
        }
        match self.architecture {
            Architecture::Dit => self.dit.as_ref().map_or(0, |d| d.hidden_dim),
            Architecture::Unet1d => self.unet.as_ref().map_or(0, |u| 4 * u.block_dims.first().copied().unwrap_or(0)),
            Architecture::MlpBaseline => 0,
        }
    }

    /// Channels seen by the field models' input layer.
    pub fn input_channels(&self) -> usize {
        self.channels + if self.append_coords { self.coord_dim } else { 0 }
    }

    pub fn dit(&self) -> Result<&DitConfig> {
        self.dit
            .as_ref()
            .ok_or_else(|| Error::Config("model.dit section is required for architecture dit".into()))
    }

    pub fn unet(&self) -> Result<&UnetConfig> {
        self.unet
            .as_ref()
            .ok_or_else(|| Error::Config("model.unet section is required for architecture unet1d".into()))
    }

    pub fn mlp(&self) -> Result<&MlpConfig> {
        self.mlp.as_ref().ok_or_else(|| {
            Error::Config("model.mlp section is required for architecture mlp_baseline".into())
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.channels == 0 || self.points == 0 || self.cond_dim == 0 {
            return bad(format!(
                "channels, points and cond_dim must be positive (got {}, {}, {})",
                self.channels, self.points, self.cond_dim
            ));
        }
        if self.append_coords && self.coord_dim == 0 {
            return bad("append_coords requires coord_dim > 0".into());
        }
        let emb = self.embed_dim();
        match self.architecture {
            Architecture::Dit => {
                let d = self.dit()?;
                if d.num_blocks == 0 || d.num_heads == 0 || d.hidden_dim == 0 || d.patch_size == 0 {
                    return bad("dit extents must be positive".into());
                }
                if self.points % d.patch_size != 0 {
                    return bad(format!(
                        "points {} not divisible by patch size {}",
                        self.points, d.patch_size
                    ));
                }
                if d.hidden_dim % d.num_heads != 0 {
                    return bad(format!(
                        "hidden_dim {} not divisible by {} heads",
                        d.hidden_dim, d.num_heads
                    ));
                }
                if !(d.mlp_ratio > 0.0) {
                    return bad("mlp_ratio must be positive".into());
                }
                if emb != d.hidden_dim {
                    return bad(format!("dit embed_dim must equal hidden_dim {}", d.hidden_dim));
                }
            }
            Architecture::Unet1d => {
                let u = self.unet()?;
                if u.block_dims.is_empty() || u.block_dims.contains(&0) {
                    return bad("unet block_dims must be a nonempty list of positive widths".into());
                }
                if u.attn_heads == 0 || u.attn_hidden % u.attn_heads != 0 {
                    return bad(format!(
                        "attn_hidden {} not divisible by {} heads",
                        u.attn_hidden, u.attn_heads
                    ));
                }
                let factor = 1usize << (u.block_dims.len() - 1);
                if self.points % factor != 0 {
                    let padded = self.points.div_ceil(factor) * factor;
                    return bad(format!(
                        "points {} must be divisible by {factor} for a {}-level U-Net; pad the field to {padded} points ({} extra)",
                        self.points,
                        u.block_dims.len(),
                        padded - self.points
                    ));
                }
            }
            Architecture::MlpBaseline => {
                let m = self.mlp()?;
                if m.hidden_dim == 0 || m.num_layers == 0 {
                    return bad("mlp extents must be positive".into());
                }
                if !(0.0..1.0).contains(&m.dropout) {
                    return bad(format!("dropout {} outside [0, 1)", m.dropout));
                }
                if self.coord_dim == 0 {
                    return bad("mlp_baseline requires coord_dim > 0".into());
                }
            }
        }
        if self.architecture != Architecture::MlpBaseline && (emb == 0 || emb % 2 != 0) {
            return bad(format!("embed_dim must be even and positive, got {emb}"));
        }
        Ok(())
    }
}
