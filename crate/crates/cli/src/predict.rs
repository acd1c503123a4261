use crate::fail::{CliResult, Failure};
use flowfield::flowmatch::{euler_sample_rows, SamplerConfig};
use flowfield::models::Model;
use flowfield::train::Checkpoint;
use flowfield::Result;

/// Worker cap from `FLOWFIELD_THREADS`; 1 when unset.
pub fn threads() -> CliResult<usize> {
    match std::env::var("FLOWFIELD_THREADS") {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Failure::usage(format!("FLOWFIELD_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

/// Rows handed to one sampler call.
const CHUNK: usize = 16;

/// Standardized `[M × C × N]` predictions for standardized conditions
/// `[M × K]`. Workers take whole chunks and results are stitched in row
/// order, so the output does not depend on the thread count.
pub fn predict(
    model: &Model<f32>,
    ck: &Checkpoint,
    cond: &[f32],
    rows: usize,
    cfg: &SamplerConfig,
    threads: usize,
) -> CliResult<Vec<f32>> {
    let mc = &ck.meta.model;
    let (c, n, k) = (mc.channels, mc.points, mc.cond_dim);
    let starts: Vec<usize> = (0..rows).step_by(CHUNK).collect();
    let run = |start: usize| -> Result<Vec<f32>> {
        let end = (start + CHUNK).min(rows);
        let part = &cond[start * k..end * k];
        match model {
            Model::Mlp(mlp) => {
                let (coords, _) = ck
                    .coords()
                    .ok_or_else(|| flowfield::Error::Format("baseline checkpoint lacks point coordinates".into()))?;
                let mut out = Vec::with_capacity((end - start) * c * n);
                flowfield::no_grad(|| {
                    for row in part.chunks(k.max(1)).take(end - start) {
                        out.extend_from_slice(mlp.predict_field(&coords, row)?.data());
                    }
                    Ok::<_, flowfield::Error>(())
                })?;
                Ok(out)
            }
            _ => Ok(euler_sample_rows(model, part, end - start, start, [c, n], cfg)?.data().to_vec()),
        }
    };
    let workers = threads.min(starts.len()).max(1);
    let parts: Vec<Result<Vec<f32>>> = if workers == 1 {
        starts.iter().map(|&s| run(s)).collect()
    } else {
        let mut slots: Vec<Option<Result<Vec<f32>>>> = (0..starts.len()).map(|_| None).collect();
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let (starts, run) = (&starts, &run);
                    scope.spawn(move || {
                        (w..starts.len()).step_by(workers).map(|i| (i, run(starts[i]))).collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("sampling worker panicked") {
                    slots[i] = Some(r);
                }
            }
        });
        slots.into_iter().map(|s| s.expect("every chunk assigned")).collect()
    };
    let mut out = Vec::with_capacity(rows * c * n);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}
