use super::{OptimState, TrainConfig};
use crate::data::{SplitConfig, Standardizer};
use crate::error::{Error, Result};
use crate::flowmatch::SamplerConfig;
use crate::models::{Model, ModelConfig};
use crate::nn::Module;
use crate::rng::SeededRng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;

pub const FFCK_MAGIC: [u8; 4] = *b"FFCK";
pub const FFCK_VERSION: u32 = 1;

const OPTIM_M: &str = "optim.m.";
const OPTIM_V: &str = "optim.v.";
const COORDS: &str = "input.coords";

/// The JSON blob: everything needed to rebuild and use the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    pub model: ModelConfig,
    pub train: TrainConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub split: SplitConfig,
    pub stats: Option<Standardizer>,
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    /// Parameters in model order, then optimizer moments, then point
    /// coordinates `[N, D]` when given.
    pub fn capture(
        model: &Model<f32>,
        opt: Option<&OptimState<f32>>,
        meta: CheckpointMeta,
        coords: Option<(&[f32], usize)>,
    ) -> Result<Self> {
        let named = model.named_params();
        let mut tensors: Vec<NamedTensor> = named
            .iter()
            .map(|(n, p)| NamedTensor { name: n.clone(), shape: p.shape(), data: p.values() })
            .collect();
        if let Some(opt) = opt {
            if opt.m.len() != named.len() {
                return Err(Error::Contract("optimizer state does not match the model".into()));
            }
            for (prefix, bufs) in [(OPTIM_M, &opt.m), (OPTIM_V, &opt.v)] {
                for ((n, p), b) in named.iter().zip(bufs) {
                    tensors.push(NamedTensor { name: format!("{prefix}{n}"), shape: p.shape(), data: b.clone() });
                }
            }
        }
        if let Some((c, d)) = coords {
            if d == 0 || c.len() % d != 0 {
                return Err(Error::mismatch("checkpoint coords", &[c.len()], &[0, d]));
            }
            tensors.push(NamedTensor { name: COORDS.into(), shape: vec![c.len() / d, d], data: c.to_vec() });
        }
        Ok(Checkpoint { meta, tensors })
    }

    pub fn tensor(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn coords(&self) -> Option<(Vec<f32>, usize)> {
        self.tensor(COORDS).map(|t| (t.data.clone(), t.shape[1]))
    }

    fn is_param(name: &str) -> bool {
        !(name.starts_with(OPTIM_M) || name.starts_with(OPTIM_V) || name == COORDS)
    }

    /// Rebuilds the model from its config and copies every parameter.
    pub fn restore_model(&self) -> Result<Model<f32>> {
        let mut model = Model::new(&self.meta.model, &mut SeededRng::new(0))?;
        let params: Vec<(String, Vec<usize>, Vec<f32>)> = self
            .tensors
            .iter()
            .filter(|t| Self::is_param(&t.name))
            .map(|t| (t.name.clone(), t.shape.clone(), t.data.clone()))
            .collect();
        if params.len() != model.named_params().len() {
            return Err(Error::Format(format!(
                "checkpoint holds {} parameters, the configured model has {}",
                params.len(),
                model.named_params().len()
            )));
        }
        model.load_params(&params)?;
        if let Some(slot) = model.coords_mut().filter(|c| c.enabled()) {
            let (c, _) = self
                .coords()
                .ok_or_else(|| Error::Format("model appends coordinates but the checkpoint has none".into()))?;
            let points = self.meta.model.points;
            slot.set(&c, points)?;
        }
        Ok(model)
    }

    /// Moment buffers in model parameter order, if they were saved.
    pub fn restore_optim(&self, model: &Model<f32>) -> Result<Option<OptimState<f32>>> {
        let named = model.named_params();
        if self.tensor(&format!("{OPTIM_M}{}", named[0].0)).is_none() {
            return Ok(None);
        }
        let fetch = |prefix: &str| {
            named
                .iter()
                .map(|(n, p)| {
                    let t = self
                        .tensor(&format!("{prefix}{n}"))
                        .ok_or_else(|| Error::Format(format!("missing {prefix}{n}")))?;
                    if t.shape != p.shape() {
                        return Err(Error::mismatch("checkpoint moments", &t.shape, &p.shape()));
                    }
                    Ok(t.data.clone())
                })
                .collect::<Result<Vec<_>>>()
        };
        Ok(Some(OptimState { step: self.meta.step, m: fetch(OPTIM_M)?, v: fetch(OPTIM_V)? }))
    }
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Result<Vec<u8>> {
    let mut seen = HashSet::new();
    if let Some(t) = ck.tensors.iter().find(|t| !seen.insert(t.name.as_str())) {
        return Err(Error::Contract(format!("duplicate tensor name {:?}", t.name)));
    }
    let blob = serde_json::to_vec(&ck.meta)?;
    let mut out = Vec::new();
    out.extend_from_slice(&FFCK_MAGIC);
    out.extend_from_slice(&FFCK_VERSION.to_le_bytes());
    out.extend_from_slice(&(blob.len() as u64).to_le_bytes());
    out.extend_from_slice(&blob);
    let count = u32::try_from(ck.tensors.len()).map_err(|_| Error::Format("too many tensors".into()))?;
    out.extend_from_slice(&count.to_le_bytes());
    for t in &ck.tensors {
        let name = t.name.as_bytes();
        let len = u16::try_from(name.len()).map_err(|_| Error::Format(format!("tensor name too long: {}", t.name)))?;
        if t.shape.iter().product::<usize>() != t.data.len() {
            return Err(Error::mismatch("checkpoint tensor", &t.shape, &[t.data.len()]));
        }
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(name);
        out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for &d in &t.shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let left = self.buf.len() - self.pos;
        if n > left {
            return Err(Error::Corrupt {
                offset: self.pos as u64,
                msg: format!("{what} needs {n} bytes but only {left} remain"),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().expect("exact length"))
    }

    fn corrupt(&self, msg: String) -> Error {
        Error::Corrupt { offset: self.pos as u64, msg }
    }
}

pub fn decode_checkpoint(buf: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { buf, pos: 0 };
    let magic = r.take(4, "magic").map_err(|_| Error::Format("file too short for an FFCK header".into()))?;
    if magic != FFCK_MAGIC {
        return Err(Error::Format(format!("bad magic {:?}, expected \"FFCK\"", String::from_utf8_lossy(magic))));
    }
    let version = u32::from_le_bytes(r.array("version")?);
    if version != FFCK_VERSION {
        return Err(Error::Format(format!("unsupported FFCK version {version}")));
    }
    let blob_len = u64::from_le_bytes(r.array("config length")?);
    let blob_len = usize::try_from(blob_len).map_err(|_| r.corrupt("config length overflows".into()))?;
    let blob_at = r.pos;
    let blob = r.take(blob_len, "config blob")?;
    let meta: CheckpointMeta = serde_json::from_slice(blob).map_err(|e| Error::Corrupt {
        offset: blob_at as u64,
        msg: format!("config blob: {e}"),
    })?;
    let count = u32::from_le_bytes(r.array("tensor count")?) as usize;
    let mut tensors = Vec::with_capacity(count.min(1 << 16));
    let mut seen = HashSet::new();
    for _ in 0..count {
        let at = r.pos;
        let len = u16::from_le_bytes(r.array("name length")?) as usize;
        let name = std::str::from_utf8(r.take(len, "tensor name")?)
            .map_err(|_| Error::Corrupt { offset: at as u64, msg: "tensor name is not UTF-8".into() })?
            .to_string();
        if !seen.insert(name.clone()) {
            return Err(Error::Corrupt { offset: at as u64, msg: format!("duplicate tensor name {name:?}") });
        }
        let rank = u32::from_le_bytes(r.array("rank")?) as usize;
        let mut shape = Vec::with_capacity(rank.min(16));
        for _ in 0..rank {
            let d = u64::from_le_bytes(r.array("dimension")?);
            shape.push(usize::try_from(d).map_err(|_| r.corrupt(format!("dimension {d} overflows")))?);
        }
        let numel = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| r.corrupt(format!("{name} size overflows")))?;
        let data = r
            .take(numel, &name)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        tensors.push(NamedTensor { name, shape, data });
    }
    if r.pos != buf.len() {
        return Err(r.corrupt(format!("{} trailing bytes after the last tensor", buf.len() - r.pos)));
    }
    Ok(Checkpoint { meta, tensors })
}

pub fn save_checkpoint(ck: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_checkpoint(ck)?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&buf)
}
