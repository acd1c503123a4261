use super::optim::collect_grads;
use super::trainer::{TraceRow, TrainData, TrainEvent};
use super::{AdamParams, OptimState, TrainConfig};
use crate::data::FieldDataset;
use crate::error::{Error, Result};
use crate::models::PointwiseMlp;
use crate::nn::Module;
use crate::rng::SeededRng;
use crate::tensor::{no_grad, Float, Param, Tensor};

/// One regression row per (sample, point): inputs `[coords_k, c]` of
/// width `D + K` and the `C` field values at that point.
pub fn mlp_rows<T: Float>(ds: &FieldDataset) -> Result<(Vec<T>, Vec<T>)> {
    let coords = ds
        .coords
        .as_ref()
        .ok_or_else(|| Error::Contract("the pointwise baseline needs point coordinates in the dataset".into()))?;
    let (n, d, c) = (ds.points, ds.coord_dim, ds.channels);
    let width = d + ds.cond_dim;
    let mut inputs = Vec::with_capacity(ds.len() * n * width);
    let mut targets = Vec::with_capacity(ds.len() * n * c);
    for i in 0..ds.len() {
        let field = ds.field(i);
        for k in 0..n {
            inputs.extend(coords[k * d..(k + 1) * d].iter().map(|&v| T::lit(v as f64)));
            inputs.extend(ds.condition(i).iter().map(|&v| T::lit(v as f64)));
            targets.extend((0..c).map(|ch| T::lit(field[ch * n + k] as f64)));
        }
    }
    Ok((inputs, targets))
}

fn rows_tensor<T: Float>(src: &[T], width: usize, idx: &[usize]) -> Result<Tensor<T>> {
    let data = idx.iter().flat_map(|&r| src[r * width..(r + 1) * width].iter().copied()).collect();
    Tensor::new(data, &[idx.len(), width])
}

#[derive(Debug, Clone, Default)]
pub struct BaselineOutcome {
    pub trace: Vec<TraceRow>,
    /// Validation MSE (standardized units) after each epoch.
    pub evals: Vec<(usize, f64)>,
}

fn mse<T: Float>(mlp: &PointwiseMlp<T>, inputs: &[T], targets: &[T], batch: usize) -> Result<f64> {
    let (w, c) = (mlp.input_dim(), mlp.channels);
    let rows = targets.len() / c;
    let idx: Vec<usize> = (0..rows).collect();
    no_grad(|| {
        let mut total = 0.0;
        for chunk in idx.chunks(batch.max(1)) {
            let pred = mlp.forward(&rows_tensor(inputs, w, chunk)?, None)?;
            let target = rows_tensor(targets, c, chunk)?;
            total += pred.sub(&target)?.square().sum_all().item()?.as_f64();
        }
        Ok(total / targets.len() as f64)
    })
}

/// Epoch-based MSE regression with Adam and a per-epoch multiplicative
/// learning-rate decay. Rows are reshuffled every epoch.
pub fn train_baseline<T: Float>(
    mlp: &PointwiseMlp<T>,
    data: TrainData<'_>,
    cfg: &TrainConfig,
    opt: &mut OptimState<T>,
    on_event: &mut dyn FnMut(TrainEvent<'_, T>) -> Result<()>,
) -> Result<BaselineOutcome> {
    cfg.validate()?;
    let epochs = cfg
        .epochs
        .ok_or_else(|| Error::Config("the pointwise baseline needs train.epochs".into()))?;
    if data.train.coord_dim != mlp.coord_dim || data.train.cond_dim != mlp.cond_dim {
        return Err(Error::Config(format!(
            "baseline expects {}-D coordinates and {} conditions, dataset has {} and {}",
            mlp.coord_dim, mlp.cond_dim, data.train.coord_dim, data.train.cond_dim
        )));
    }
    let (inputs, targets) = mlp_rows::<T>(data.train)?;
    let val = data.val.filter(|v| !v.is_empty()).map(mlp_rows::<T>).transpose()?;
    let (w, c) = (mlp.input_dim(), mlp.channels);
    let rows = targets.len() / c;
    let named = mlp.named_params();
    let params: Vec<&Param<T>> = named.iter().map(|(_, p)| *p).collect();
    let hp = AdamParams { weight_decay: cfg.weight_decay, ..AdamParams::default() };
    let decay = cfg.lr_decay.unwrap_or(1.0);
    let mut out = BaselineOutcome::default();
    let mut step = 0usize;
    for p in &params {
        p.zero_grad();
    }
    for epoch in 0..epochs {
        let lr = cfg.lr_max * decay.powi(epoch as i32);
        let mut rng = SeededRng::stream(cfg.seed, epoch as u64 + 1);
        let mut order: Vec<usize> = (0..rows).collect();
        rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            step += 1;
            let pred = mlp.forward(&rows_tensor(&inputs, w, chunk)?, Some(&mut rng))?;
            let loss = pred.sub(&rows_tensor(&targets, c, chunk)?)?.square().mean_all();
            let value = loss.item()?.as_f64();
            if !value.is_finite() {
                return Err(Error::Diverged { step, loss: value, lr, grad_norm: f64::NAN });
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
                return Err(Error::Diverged { step, loss: value, lr, grad_norm });
            }
            opt.update(&params, &grads, lr, &hp)?;
            let row = TraceRow { step, loss: value, lr, grad_norm };
            out.trace.push(row);
            if cfg.log_every > 0 && step % cfg.log_every == 0 {
                on_event(TrainEvent::Log(row))?;
            }
        }
        if let Some((vi, vt)) = &val {
            let val_loss = mse(mlp, vi, vt, cfg.batch_size.max(1024))?;
            out.evals.push((epoch + 1, val_loss));
            on_event(TrainEvent::Eval { step, val_loss })?;
        }
    }
    Ok(out)
}
