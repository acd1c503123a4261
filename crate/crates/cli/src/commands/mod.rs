mod evaluate;
mod gradcheck;
mod train;

pub use evaluate::{evaluate, EvalArgs};
pub use gradcheck::gradcheck;
pub use train::train;

use crate::config;
use crate::fail::{write_file, CliResult, Failure};
use crate::predict::{predict, threads};
use flowfield::data::{import_csv, load_dataset, save_dataset, synth_generate, CsvLayout, FieldDataset, SynthSpec};
use flowfield::train::load_checkpoint;
use std::path::Path;

pub fn synth(out: &Path, points: usize, grid: &str, seed: u64) -> CliResult {
    let grid = SynthSpec::parse_grid(grid)?;
    let spec = SynthSpec { points, grid, seed };
    spec.validate()?;
    let ds = synth_generate(&spec)?;
    save_dataset(&ds, out)?;
    println!("wrote {} samples x {} points to {}", ds.len(), ds.points, out.display());
    Ok(())
}

pub fn import(csv: &Path, out: &Path, cond_columns: usize, coord_columns: usize) -> CliResult {
    let ds = import_csv(csv, CsvLayout { cond_columns, coord_columns })?;
    save_dataset(&ds, out)?;
    println!(
        "wrote {} samples x {} channels x {} points to {}",
        ds.len(),
        ds.channels,
        ds.points,
        out.display()
    );
    Ok(())
}

pub fn preset(name: &str, out: Option<&Path>) -> CliResult {
    let rc = config::preset(name)?;
    let text = serde_json::to_string_pretty(&rc).expect("configs serialize") + "\n";
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Rows of a headerless or headed CSV of numbers; a first row that does not
/// parse is taken as the header.
fn read_conditions(path: &Path) -> CliResult<Vec<Vec<f32>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Failure::io(format!("cannot read conditions {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        let parsed: Result<Vec<f32>, _> = rec.iter().map(str::parse::<f32>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Failure::io(format!("{} row {}: {e}", path.display(), i + 1))),
        }
    }
    Ok(rows)
}

pub fn sample(
    checkpoint: &Path,
    conditions: &Path,
    steps: Option<usize>,
    guidance: Option<f64>,
    seed: Option<u64>,
    out: &Path,
) -> CliResult {
    let ck = load_checkpoint(checkpoint)?;
    let mut cfg = ck.meta.sampler.clone();
    cfg.steps = steps.unwrap_or(cfg.steps);
    cfg.guidance_scale = guidance.unwrap_or(cfg.guidance_scale);
    cfg.seed = seed.unwrap_or(cfg.seed);
    cfg.validate()?;
    let rows = read_conditions(conditions)?;
    let mc = &ck.meta.model;
    if rows.is_empty() {
        return Err(Failure::usage(format!("{} holds no condition rows", conditions.display())));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != mc.cond_dim) {
        return Err(Failure::usage(format!(
            "conditions row {} has {} columns, the checkpoint expects {}",
            i + 1,
            r.len(),
            mc.cond_dim
        )));
    }
    let stats = ck.meta.stats.as_ref().ok_or_else(|| Failure::io("checkpoint lacks standardization stats"))?;
    let raw: Vec<f32> = rows.concat();
    let model = ck.restore_model()?;
    let mut fields = predict(&model, &ck, &stats.apply_conditions(&raw)?, rows.len(), &cfg, threads()?)?;
    stats.destandardize_fields(&mut fields, mc.points)?;
    let ds = FieldDataset::new(mc.channels, mc.points, mc.cond_dim, raw, fields, ck.coords())?;
    save_dataset(&ds, out)?;
    println!(
        "wrote {} fields ({} Euler steps, guidance {}) to {}",
        ds.len(),
        cfg.steps,
        cfg.guidance_scale,
        out.display()
    );
    Ok(())
}

pub(crate) fn load_data(path: &Path) -> CliResult<FieldDataset> {
    Ok(load_dataset(path)?)
}
