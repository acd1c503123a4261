use super::load_data;
use crate::fail::{create_dir, write_file, CliResult, Failure};
use crate::predict::{predict, threads};
use flowfield::data::Split;
use flowfield::metrics::{aoa_weights, compute_metrics, mre_delta_from_std, weighted_r2_report, FieldPair, MetricsReport};
use flowfield::models::Model;
use flowfield::train::load_checkpoint;
use serde_json::Value;
use std::fmt::Write as _;
use std::path::Path;

pub struct EvalArgs<'a> {
    pub checkpoint: &'a Path,
    pub data: &'a Path,
    pub split: &'a str,
    pub sweep: &'a str,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub aoa_column: Option<usize>,
    pub out: &'a Path,
}

fn parse_split(s: &str) -> CliResult<Split> {
    match s {
        "train" => Ok(Split::Train),
        "val" => Ok(Split::Val),
        "test" => Ok(Split::Test),
        other => Err(Failure::usage(format!("unknown split {other:?}; expected train, val or test"))),
    }
}

pub fn parse_sweep(s: &str) -> CliResult<Vec<f64>> {
    let values = s
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::usage(format!("bad guidance sweep {s:?}: {e}")))?;
    if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Failure::usage(format!("guidance sweep {s:?} must list finite non-negative scales")));
    }
    Ok(values)
}

fn scatter_csv(idx: &[usize], truth: &[f32], pred: &[f32], c: usize, n: usize) -> String {
    let mut out = String::from("sample,channel,point,true,predicted,residual\n");
    for (row, &sample) in idx.iter().enumerate() {
        for ch in 0..c {
            for k in 0..n {
                let j = (row * c + ch) * n + k;
                let (y, p) = (truth[j], pred[j]);
                writeln!(out, "{sample},{ch},{k},{y},{p},{}", p - y).expect("string write");
            }
        }
    }
    out
}

pub fn evaluate(a: EvalArgs<'_>) -> CliResult {
    let split = parse_split(a.split)?;
    let ck = load_checkpoint(a.checkpoint)?;
    let ds = load_data(a.data)?;
    let mc = &ck.meta.model;
    if (ds.channels, ds.points, ds.cond_dim) != (mc.channels, mc.points, mc.cond_dim) {
        return Err(Failure::usage(format!(
            "dataset is {}x{} with {} conditions, the checkpoint expects {}x{} with {}",
            ds.channels, ds.points, ds.cond_dim, mc.channels, mc.points, mc.cond_dim
        )));
    }
    let stats = ck.meta.stats.as_ref().ok_or_else(|| Failure::io("checkpoint lacks standardization stats"))?;
    let splits = ck.meta.split.apply(ds.len())?;
    let idx = splits.get(split).to_vec();
    if idx.is_empty() {
        return Err(Failure::usage(format!("split {} of {} is empty", a.split, a.data.display())));
    }
    let subset = ds.subset(&idx);
    let aoa = match a.aoa_column {
        Some(col) if col >= ds.cond_dim => {
            return Err(Failure::usage(format!("--aoa-column {col} out of range for {} conditions", ds.cond_dim)))
        }
        Some(col) => Some(aoa_weights(&(0..subset.len()).map(|i| subset.condition(i)[col] as f64).collect::<Vec<_>>())),
        None => None,
    };
    let mut cfg = ck.meta.sampler.clone();
    cfg.steps = a.steps.unwrap_or(cfg.steps);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    let model = ck.restore_model()?;
    // guidance has no meaning for the pointwise regressor
    let scales: Vec<Option<f64>> = match model {
        Model::Mlp(_) => vec![None],
        _ => parse_sweep(a.sweep)?.into_iter().map(Some).collect(),
    };
    cfg.validate()?;
    let cond = stats.apply_conditions(&subset.conditions)?;
    let workers = threads()?;
    let delta = mre_delta_from_std(&stats.fields.std);
    create_dir(a.out)?;
    let mut summary = String::from("guidance_scale,relative_l2,r2,mse,mae,mre_percent,weighted_r2\n");
    for s in scales {
        if let Some(s) = s {
            cfg.guidance_scale = s;
        }
        let mut pred = predict(&model, &ck, &cond, subset.len(), &cfg, workers)?;
        stats.destandardize_fields(&mut pred, mc.points)?;
        let pair = FieldPair::new(&subset.fields, &pred, mc.channels, mc.points)?;
        let mut report: MetricsReport = compute_metrics(&pair, &delta)?;
        if let Some(w) = &aoa {
            report.weighted_r2 = Some(weighted_r2_report(&pair, w)?);
        }
        let tag = s.map_or(String::new(), |s| format!("_s{s}"));
        let mut doc = serde_json::Map::new();
        doc.insert("guidance_scale".into(), s.map_or(Value::Null, Value::from));
        doc.insert("euler_steps".into(), cfg.steps.into());
        doc.insert("samples".into(), subset.len().into());
        if let Value::Object(m) = report.to_flat_json() {
            doc.extend(m);
        }
        write_file(
            &a.out.join(format!("metrics{tag}.json")),
            serde_json::to_string_pretty(&Value::Object(doc)).expect("json") + "\n",
        )?;
        write_file(&a.out.join(format!("metrics{tag}.csv")), report.to_csv())?;
        write_file(
            &a.out.join(format!("scatter{tag}.csv")),
            scatter_csv(&idx, &subset.fields, &pred, mc.channels, mc.points),
        )?;
        let o = &report.overall;
        let w = report.weighted_r2.as_ref().map_or(String::new(), |w| w.global.to_string());
        let label = s.map_or(String::new(), |s| s.to_string());
        writeln!(summary, "{label},{},{},{},{},{},{w}", o.relative_l2, o.r2, o.mse, o.mae, o.mre_percent).expect("string write");
        println!(
            "s={:<4} relative_l2={:.5} r2={:.5} mse={:.3e} mre={:.2}%{}",
            if label.is_empty() { "-" } else { &label },
            o.relative_l2,
            o.r2,
            o.mse,
            o.mre_percent,
            if w.is_empty() { String::new() } else { format!(" weighted_r2={w}") }
        );
    }
    write_file(&a.out.join("summary.csv"), summary)
}
