use crate::config::tiny_model;
use crate::fail::{CliResult, Failure};
use flowfield::models::{Model, VelocityField};
use flowfield::nn::{CondBatch, Module};
use flowfield::rng::SeededRng;
use flowfield::tensor::{grad_check, GradCheckOptions};
use flowfield::Tensor;

/// Moves every parameter off its initialization so zero-initialized gates
/// and heads do not hide gradient paths.
fn randomize(model: &Model<f64>, seed: u64) {
    let mut rng = SeededRng::new(seed);
    for (name, p) in model.named_params() {
        let centre = if name.ends_with("gain") { 1.0 } else { 0.0 };
        let v = (0..p.numel()).map(|_| centre + 0.3 * rng.normal()).collect();
        p.set_values(v).expect("same length");
    }
}

pub fn gradcheck(preset: &str, tolerance: f64) -> CliResult {
    if !(tolerance > 0.0) {
        return Err(Failure::usage(format!("tolerance must be positive, got {tolerance}")));
    }
    let mut cfg = tiny_model(preset)?;
    if cfg.append_coords && cfg.coord_dim == 0 {
        cfg.coord_dim = 1;
    }
    let mut rng = SeededRng::new(11);
    let mut model = Model::<f64>::new(&cfg, &mut rng)?;
    randomize(&model, 12);
    let (c, n, k) = (cfg.channels, cfg.points, cfg.cond_dim);
    if let Some(slot) = model.coords_mut().filter(|s| s.enabled()) {
        slot.set(&rng.normal_vec(n * cfg.coord_dim), n)?;
    }
    let named = model.named_params();
    let report = match &model {
        Model::Mlp(mlp) => {
            let rows = 5;
            let x = Tensor::new(rng.normal_vec(rows * mlp.input_dim()), &[rows, mlp.input_dim()])?;
            let w = Tensor::new(rng.normal_vec(rows * c), &[rows, c])?;
            grad_check(&named, || Ok(mlp.forward(&x, None)?.mul(&w)?.sum_all()), &GradCheckOptions::default())?
        }
        _ => {
            let b = 3;
            let z = Tensor::new(rng.normal_vec(b * c * n), &[b, c, n])?;
            let t: Vec<f64> = (0..b).map(|_| rng.uniform()).collect();
            let cond = CondBatch::new(rng.normal_vec(b * k), b, k, vec![true, false, true])?;
            let w = Tensor::new(rng.normal_vec(b * c * n), &[b, c, n])?;
            grad_check(
                &named,
                || Ok(model.velocity(&z, &t, &cond)?.mul(&w)?.sum_all()),
                &GradCheckOptions::default(),
            )?
        }
    };
    for e in &report.entries {
        let verdict = if e.max_rel_error <= tolerance { "ok  " } else { "FAIL" };
        println!("{verdict} {:<40} rel {:.3e}  abs {:.3e}  ({} coords)", e.name, e.max_rel_error, e.max_abs_error, e.checked);
    }
    let worst = report.worst().expect("models have parameters");
    if report.passes(tolerance) {
        println!(
            "gradcheck {preset}: {} tensors pass at {tolerance:e} (worst {} at {:.3e})",
            report.entries.len(),
            worst.name,
            worst.max_rel_error
        );
        Ok(())
    } else {
        Err(Failure::check(format!(
            "gradcheck {preset} failed at {tolerance:e}: worst parameter {} (index {}) has relative error {:.3e}",
            worst.name, worst.worst_index, worst.max_rel_error
        )))
    }
}
