use super::load_data;
use crate::config::RunConfig;
use crate::fail::{create_dir, write_file, CliResult, Failure};
use flowfield::data::Standardizer;
use flowfield::models::{Architecture, Model};
use flowfield::nn::Module;
use flowfield::rng::SeededRng;
use flowfield::train::{
    save_checkpoint, train_baseline, train_loop, Checkpoint, CheckpointMeta, OptimState, TraceRow, TrainData,
    TrainEvent,
};
use flowfield::Error;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

fn open(path: &Path, header: &str) -> CliResult<BufWriter<File>> {
    let f = File::create(path).map_err(|e| Failure::io(format!("cannot create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(f);
    writeln!(w, "{header}").map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    Ok(w)
}

pub fn train(mut rc: RunConfig, data: &Path, out: &Path, steps: Option<usize>) -> CliResult {
    if let Some(s) = steps {
        rc.train.steps = s;
    }
    rc.train.validate()?;
    rc.sampler.validate()?;
    let ds = load_data(data)?;
    let m = &mut rc.model;
    m.resolve_dims(ds.channels, ds.points, ds.cond_dim)?;
    let needs_coords = m.append_coords || m.architecture == Architecture::MlpBaseline;
    if needs_coords {
        if ds.coords.is_none() {
            return Err(Failure::usage(format!("{} has no point coordinates, which this model needs", data.display())));
        }
        if m.coord_dim == 0 {
            m.coord_dim = ds.coord_dim;
        } else if m.coord_dim != ds.coord_dim {
            return Err(Failure::usage(format!(
                "model.coord_dim = {} but the dataset has {}-D coordinates",
                m.coord_dim, ds.coord_dim
            )));
        }
    }
    m.validate()?;
    let splits = rc.data.apply(ds.len())?;
    let stats = Standardizer::fit(&ds, &splits.train)?;
    let train_set = stats.apply(&ds.subset(&splits.train))?;
    let val_set = stats.apply(&ds.subset(&splits.val))?;
    let mut model = Model::<f32>::new(&rc.model, &mut SeededRng::stream(rc.train.seed, 0))?;
    if let (Some(slot), Some(coords)) = (model.coords_mut().filter(|c| c.enabled()), ds.coords.as_ref()) {
        slot.set(coords, ds.points)?;
    }
    create_dir(out)?;
    write_file(&out.join("config.json"), serde_json::to_string_pretty(&rc).expect("configs serialize") + "\n")?;
    eprintln!(
        "training {:?} with {} parameters on {} samples ({} validation)",
        rc.model.architecture,
        model.param_count(),
        train_set.len(),
        val_set.len()
    );

    let meta = |step: u64| CheckpointMeta {
        model: rc.model.clone(),
        train: rc.train.clone(),
        sampler: rc.sampler.clone(),
        split: rc.data,
        stats: Some(stats.clone()),
        step,
    };
    let coords = ds.coords.as_deref().map(|c| (c, ds.coord_dim));
    let mut trace = open(&out.join("trace.csv"), TraceRow::CSV_HEADER)?;
    let mut evals = open(&out.join("val.csv"), "step,val_loss")?;
    let data = TrainData { train: &train_set, val: Some(&val_set) };
    let mut opt = OptimState::new(model.named_params().into_iter().map(|(_, p)| p));
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |e: std::io::Error| Error::io(p, e)
    };
    let trace_path = out.join("trace.csv");
    let val_path = out.join("val.csv");
    let log_every = rc.train.log_every.max(1);
    let mut on_event = |e: TrainEvent<'_, f32>| -> flowfield::Result<()> {
        match e {
            TrainEvent::Log(row) => {
                writeln!(trace, "{}", row.csv_line()).map_err(io(&trace_path))?;
                if row.step % (log_every * 10) == 0 || row.step == 1 {
                    eprintln!("step {:>7}  loss {:.5}  lr {:.3e}  |g| {:.4}", row.step, row.loss, row.lr, row.grad_norm);
                }
            }
            TrainEvent::Eval { step, val_loss } => {
                writeln!(evals, "{step},{val_loss}").map_err(io(&val_path))?;
                eprintln!("step {step:>7}  validation loss {val_loss:.5}");
            }
            TrainEvent::Checkpoint { step, opt } => {
                let ck = Checkpoint::capture(&model, Some(opt), meta(step as u64), coords)?;
                save_checkpoint(&ck, out.join(format!("checkpoint-{step:07}.ffck")))?;
            }
        }
        Ok(())
    };
    let result = match &model {
        Model::Mlp(mlp) => train_baseline(mlp, data, &rc.train, &mut opt, &mut on_event).map(|_| ()),
        _ => train_loop(&model, data, &rc.train, &mut opt, &mut on_event).map(|_| ()),
    };
    trace.flush().map_err(|e| Failure::io(format!("{}: {e}", trace_path.display())))?;
    evals.flush().map_err(|e| Failure::io(format!("{}: {e}", val_path.display())))?;
    result?;
    let ck = Checkpoint::capture(&model, Some(&opt), meta(opt.step), coords)?;
    let path = out.join("checkpoint.ffck");
    save_checkpoint(&ck, &path)?;
    println!("wrote {} after {} optimizer steps", path.display(), opt.step);
    Ok(())
}
