//! Optimization: AdamW, the cosine schedule, gradient clipping, the
//! training loops and FFCK checkpoints.

mod baseline;
mod checkpoint;
mod optim;
mod trainer;

pub use baseline::{mlp_rows, train_baseline, BaselineOutcome};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta, NamedTensor,
    FFCK_MAGIC, FFCK_VERSION,
};
pub use optim::{adamw_step, clip_grad_norm, global_norm, AdamParams, OptimState};
pub use trainer::{train_loop, validation_loss, TraceRow, TrainData, TrainEvent, TrainOutcome};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Adamw,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub lr_max: f64,
    #[serde(default = "default_lr_min")]
    pub lr_min: f64,
    #[serde(default = "default_wd")]
    pub weight_decay: f64,
    #[serde(default = "default_clip")]
    pub max_grad_norm: f64,
    #[serde(default = "default_p_drop")]
    pub p_drop: f64,
    #[serde(default)]
    pub seed: u64,
    /// Validation loss interval in steps; 0 disables.
    #[serde(default)]
    pub eval_every: usize,
    /// Periodic checkpoint interval in steps; 0 disables.
    #[serde(default)]
    pub checkpoint_every: usize,
    #[serde(default = "default_log_every")]
    pub log_every: usize,
    #[serde(default = "default_optimizer")]
    pub optimizer: Optimizer,
    /// Epoch count for the pointwise baseline; flow models count steps.
    #[serde(default)]
    pub epochs: Option<usize>,
    /// Multiplicative learning-rate decay per epoch (baseline only).
    #[serde(default)]
    pub lr_decay: Option<f64>,
}

fn default_lr_min() -> f64 {
    1e-6
}
fn default_wd() -> f64 {
    1e-2
}
fn default_clip() -> f64 {
    1.0
}
fn default_p_drop() -> f64 {
    0.2
}
fn default_log_every() -> usize {
    1
}
fn default_optimizer() -> Optimizer {
    Optimizer::Adamw
}

impl TrainConfig {
    fn flow(steps: usize, batch_size: usize) -> Self {
        TrainConfig {
            steps,
            batch_size,
            lr_max: 2e-4,
            lr_min: default_lr_min(),
            weight_decay: default_wd(),
            max_grad_norm: default_clip(),
            p_drop: default_p_drop(),
            seed: 0,
            eval_every: 5000,
            checkpoint_every: 20000,
            log_every: 100,
            optimizer: Optimizer::Adamw,
            epochs: None,
            lr_decay: None,
        }
    }

    pub fn airfoil() -> Self {
        Self::flow(200_000, 64)
    }

    pub fn aircraft() -> Self {
        Self::flow(300_000, 32)
    }

    pub fn airfoil_mlp() -> Self {
        TrainConfig {
            steps: 0,
            batch_size: 177,
            lr_max: 1.47e-3,
            lr_min: 0.0,
            weight_decay: 0.0,
            max_grad_norm: 0.0,
            p_drop: 0.0,
            eval_every: 0,
            checkpoint_every: 0,
            log_every: 100,
            optimizer: Optimizer::Adam,
            epochs: Some(58),
            lr_decay: Some(0.99),
            seed: 0,
        }
    }

    /// Desk-scale flow-matching run on the synthetic dataset.
    pub fn synth_small() -> Self {
        TrainConfig {
            lr_max: 1e-3,
            eval_every: 1000,
            checkpoint_every: 0,
            log_every: 50,
            ..Self::flow(5000, 32)
        }
    }

    pub fn is_epoch_based(&self) -> bool {
        self.epochs.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.batch_size < 1 {
            return bad("batch_size must be at least 1".into());
        }
        match self.epochs {
            Some(0) => return bad("epochs must be at least 1".into()),
            None if self.steps < 1 => return bad("steps must be at least 1".into()),
            _ => {}
        }
        if !(self.lr_max > 0.0 && self.lr_max.is_finite()) {
            return bad(format!("lr_max must be positive, got {}", self.lr_max));
        }
        if !(self.lr_min >= 0.0 && self.lr_min <= self.lr_max) {
            return bad(format!("need 0 <= lr_min <= lr_max, got {} and {}", self.lr_min, self.lr_max));
        }
        if !(0.0..=1.0).contains(&self.p_drop) {
            return bad(format!("p_drop must lie in [0, 1], got {}", self.p_drop));
        }
        if !(self.weight_decay >= 0.0) || !(self.max_grad_norm >= 0.0) {
            return bad("weight_decay and max_grad_norm must be non-negative".into());
        }
        if let Some(d) = self.lr_decay {
            if !(d > 0.0 && d <= 1.0) {
                return bad(format!("lr_decay must lie in (0, 1], got {d}"));
            }
        }
        Ok(())
    }
}

/// `lr_min + ½(lr_max − lr_min)(1 + cos(π·step/total))`; `lr_min` once
/// `step ≥ total`.
pub fn cosine_lr(step: usize, total: usize, lr_max: f64, lr_min: f64) -> f64 {
    if step >= total {
        return lr_min;
    }
    let frac = step as f64 / total as f64;
    let lr = lr_min + 0.5 * (lr_max - lr_min) * (1.0 + (std::f64::consts::PI * frac).cos());
    lr.clamp(lr_min, lr_max)
}

/// Learning rate for optimizer step `k` in `1..=total`: `lr_max` on the
/// first step, `lr_min` on the last.
pub fn lr_at(k: usize, total: usize, lr_max: f64, lr_min: f64) -> f64 {
    cosine_lr(k.saturating_sub(1), total.saturating_sub(1), lr_max, lr_min)
}
