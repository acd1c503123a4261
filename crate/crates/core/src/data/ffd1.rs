use super::FieldDataset;
use crate::error::{Error, Result};
use std::path::Path;

pub const FFD1_MAGIC: [u8; 4] = *b"FFD1";
pub const FFD1_VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit the u32 header field")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_f32s(out: &mut Vec<u8>, values: &[f32]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_dataset(ds: &FieldDataset) -> Result<Vec<u8>> {
    ds.validate()?;
    let payload = 4 * (ds.conditions.len() + ds.fields.len() + ds.coords.as_ref().map_or(0, Vec::len));
    let mut out = Vec::with_capacity(29 + payload);
    out.extend_from_slice(&FFD1_MAGIC);
    put_u32(&mut out, FFD1_VERSION as usize)?;
    put_u32(&mut out, ds.len())?;
    put_u32(&mut out, ds.points)?;
    put_u32(&mut out, ds.channels)?;
    put_u32(&mut out, ds.cond_dim)?;
    out.push(u8::from(ds.coords.is_some()));
    put_u32(&mut out, ds.coord_dim)?;
    put_f32s(&mut out, &ds.conditions);
    put_f32s(&mut out, &ds.fields);
    if let Some(c) = &ds.coords {
        put_f32s(&mut out, c);
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

    fn u32(&mut self, what: &str) -> Result<usize> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
    }

    fn f32s(&mut self, count: Option<usize>, what: &str) -> Result<Vec<f32>> {
        let bytes = count.and_then(|c| c.checked_mul(4)).ok_or_else(|| Error::Corrupt {
            offset: self.pos as u64,
            msg: format!("{what} size overflows"),
        })?;
        Ok(self
            .take(bytes, what)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect())
    }
}

pub fn decode_dataset(buf: &[u8]) -> Result<FieldDataset> {
    let mut r = Reader { buf, pos: 0 };
    let magic = r.take(4, "magic").map_err(|_| Error::Format("file too short for an FFD1 header".into()))?;
    if magic != FFD1_MAGIC {
        return Err(Error::Format(format!("bad magic {:?}, expected \"FFD1\"", String::from_utf8_lossy(magic))));
    }
    let version = r.u32("version")?;
    if version != FFD1_VERSION as usize {
        return Err(Error::Format(format!("unsupported FFD1 version {version}")));
    }
    let m = r.u32("sample count")?;
    let n = r.u32("point count")?;
    let c = r.u32("channel count")?;
    let k = r.u32("condition dim")?;
    let has_coords = r.take(1, "coordinate flag")?[0];
    let d = r.u32("coordinate dim")?;
    if has_coords > 1 {
        return Err(Error::Format(format!("coordinate flag must be 0 or 1, got {has_coords}")));
    }
    if (has_coords == 1) != (d > 0) {
        return Err(Error::Format(format!("coordinate flag {has_coords} inconsistent with D = {d}")));
    }
    let conditions = r.f32s(m.checked_mul(k), "conditions")?;
    let fields = r.f32s(m.checked_mul(c).and_then(|v| v.checked_mul(n)), "fields")?;
    let coords = if has_coords == 1 {
        Some((r.f32s(n.checked_mul(d), "coordinates")?, d))
    } else {
        None
    };
    if r.pos != buf.len() {
        return Err(Error::Corrupt {
            offset: r.pos as u64,
            msg: format!("{} trailing bytes after the payload", buf.len() - r.pos),
        });
    }
    let ds = FieldDataset::new(c, n, k, conditions, fields, coords)?;
    if ds.len() != m {
        return Err(Error::Format(format!("header declares {m} samples but K = 0 and fields hold {}", ds.len())));
    }
    Ok(ds)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<FieldDataset> {
    let path = path.as_ref();
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dataset(&buf)
}

pub fn save_dataset(ds: &FieldDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_dataset(ds)?).map_err(|e| Error::io(path, e))
}
