use super::optim::collect_grads;
use super::{lr_at, AdamParams, Optimizer, OptimState, TrainConfig};
use crate::data::FieldDataset;
use crate::error::{Error, Result};
use crate::flowmatch::fm_loss;
use crate::models::Model;
use crate::nn::Module;
use crate::rng::SeededRng;
use crate::tensor::{no_grad, Float, Param, Tensor};

/// Standardized training and validation samples.
#[derive(Debug, Clone, Copy)]
pub struct TrainData<'a> {
    pub train: &'a FieldDataset,
    pub val: Option<&'a FieldDataset>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub loss: f64,
    pub lr: f64,
    pub grad_norm: f64,
}

impl TraceRow {
    pub const CSV_HEADER: &'static str = "step,loss,lr,grad_norm";

    pub fn csv_line(&self) -> String {
        format!("{},{},{},{}", self.step, self.loss, self.lr, self.grad_norm)
    }
}

pub enum TrainEvent<'a, T: Float> {
    Log(TraceRow),
    Eval { step: usize, val_loss: f64 },
    Checkpoint { step: usize, opt: &'a OptimState<T> },
}

/// Generator for optimizer step `k`; stream 0 is left to initialization.
fn step_rng(seed: u64, k: usize) -> SeededRng {
    SeededRng::stream(seed, k as u64)
}

/// `[B, C, N]` fields and `[B·K]` conditions of samples `idx`.
pub(crate) fn gather<T: Float>(ds: &FieldDataset, idx: &[usize]) -> Result<(Tensor<T>, Vec<T>)> {
    let mut x = Vec::with_capacity(idx.len() * ds.field_len());
    let mut c = Vec::with_capacity(idx.len() * ds.cond_dim);
    for &i in idx {
        x.extend(ds.field(i).iter().map(|&v| T::lit(v as f64)));
        c.extend(ds.condition(i).iter().map(|&v| T::lit(v as f64)));
    }
    Ok((Tensor::new(x, &[idx.len(), ds.channels, ds.points])?, c))
}

/// Mean flow-matching loss over `ds` with every condition kept and draws
/// fixed by `seed`, so successive evaluations are comparable.
pub fn validation_loss<T: Float>(model: &Model<T>, ds: &FieldDataset, batch: usize, seed: u64) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::Contract("validation split is empty".into()));
    }
    let mut rng = SeededRng::stream(seed, u64::MAX);
    let idx: Vec<usize> = (0..ds.len()).collect();
    no_grad(|| {
        let mut total = 0.0;
        for chunk in idx.chunks(batch.max(1)) {
            let (x, c) = gather::<T>(ds, chunk)?;
            let loss = fm_loss(model, &x, &c, 0.0, &mut rng)?.item()?.as_f64();
            total += loss * chunk.len() as f64;
        }
        Ok(total / ds.len() as f64)
    })
}

#[derive(Debug, Clone, Default)]
pub struct TrainOutcome {
    pub trace: Vec<TraceRow>,
    pub evals: Vec<(usize, f64)>,
}

fn hyper(cfg: &TrainConfig) -> AdamParams {
    AdamParams {
        weight_decay: match cfg.optimizer {
            Optimizer::Adamw => cfg.weight_decay,
            Optimizer::Adam => 0.0,
        },
        ..AdamParams::default()
    }
}

/// Flow-matching training from `opt.step + 1` through `cfg.steps`.
///
/// Each step draws `batch_size` training samples uniformly with
/// replacement, evaluates the loss with condition dropout, clips the
/// gradient norm and applies AdamW at the cosine learning rate.
pub fn train_loop<T: Float>(
    model: &Model<T>,
    data: TrainData<'_>,
    cfg: &TrainConfig,
    opt: &mut OptimState<T>,
    on_event: &mut dyn FnMut(TrainEvent<'_, T>) -> Result<()>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if !model.is_field_model() {
        return Err(Error::Contract("train_loop needs a velocity-field model; use train_baseline".into()));
    }
    let m = data.train.len();
    if m == 0 {
        return Err(Error::Contract("training split is empty".into()));
    }
    let named = model.named_params();
    let params: Vec<&Param<T>> = named.iter().map(|(_, p)| *p).collect();
    let hp = hyper(cfg);
    let mut out = TrainOutcome::default();
    for p in &params {
        p.zero_grad();
    }
    for k in opt.step as usize + 1..=cfg.steps {
        let mut rng = step_rng(cfg.seed, k);
        let idx: Vec<usize> = (0..cfg.batch_size).map(|_| rng.below(m)).collect();
        let (x, c) = gather::<T>(data.train, &idx)?;
        let loss = fm_loss(model, &x, &c, cfg.p_drop, &mut rng)?;
        let lr = lr_at(k, cfg.steps, cfg.lr_max, cfg.lr_min);
        let value = loss.item()?.as_f64();
        if !value.is_finite() {
            return Err(Error::Diverged { step: k, loss: value, lr, grad_norm: f64::NAN });
        }
        loss.backward()?;
        let mut grads = collect_grads(&params);
        for p in &params {
            p.zero_grad();
        }
        let grad_norm = if cfg.max_grad_norm > 0.0 {
            super::clip_grad_norm(&mut grads, cfg.max_grad_norm)
        } else {
            super::global_norm(&grads)
        };
        if !grad_norm.is_finite() {
            return Err(Error::Diverged { step: k, loss: value, lr, grad_norm });
        }
        opt.update(&params, &grads, lr, &hp)?;
        let row = TraceRow { step: k, loss: value, lr, grad_norm };
        out.trace.push(row);
        if cfg.log_every > 0 && (k % cfg.log_every == 0 || k == cfg.steps) {
            on_event(TrainEvent::Log(row))?;
        }
        if let Some(val) = data.val.filter(|v| !v.is_empty()) {
            if cfg.eval_every > 0 && (k % cfg.eval_every == 0 || k == cfg.steps) {
                let val_loss = validation_loss(model, val, cfg.batch_size, cfg.seed)?;
                out.evals.push((k, val_loss));
                on_event(TrainEvent::Eval { step: k, val_loss })?;
            }
        }
        if cfg.checkpoint_every > 0 && k % cfg.checkpoint_every == 0 && k != cfg.steps {
            on_event(TrainEvent::Checkpoint { step: k, opt })?;
        }
    }
    Ok(out)
}
