//! Field datasets: the FFD1 container, CSV import, standardization,
//! condition-space splits and the synthetic generator.

mod csv_import;
mod ffd1;
mod split;
mod standardize;
mod synth;
#[cfg(test)]
mod tests;

pub use csv_import::{import_csv, import_csv_reader, CsvLayout};
pub use ffd1::{decode_dataset, encode_dataset, load_dataset, save_dataset, FFD1_MAGIC, FFD1_VERSION};
pub use split::{split_conditions, Split, SplitConfig, Splits};
pub use standardize::{ChannelStats, Standardizer};
pub use synth::{synth_field, synth_generate, SynthSpec};

use crate::error::{Error, Result};

/// One operating condition and its field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub c: Vec<f32>,
    /// Channel-major `[C × N]`.
    pub x: Vec<f32>,
}

/// `M` samples of a `[C × N]` field over one fixed point set.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDataset {
    pub channels: usize,
    pub points: usize,
    pub cond_dim: usize,
    /// `[M × K]`
    pub conditions: Vec<f32>,
    /// `[M × C × N]`
    pub fields: Vec<f32>,
    /// Point coordinates `[N × D]`, shared by every sample.
    pub coords: Option<Vec<f32>>,
    pub coord_dim: usize,
}

impl FieldDataset {
    pub fn new(
        channels: usize,
        points: usize,
        cond_dim: usize,
        conditions: Vec<f32>,
        fields: Vec<f32>,
        coords: Option<(Vec<f32>, usize)>,
    ) -> Result<Self> {
        let (coords, coord_dim) = match coords {
            Some((c, d)) => (Some(c), d),
            None => (None, 0),
        };
        let ds = FieldDataset {
            channels,
            points,
            cond_dim,
            conditions,
            fields,
            coords,
            coord_dim,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn from_samples(samples: &[FieldSample], points: usize, coords: Option<(Vec<f32>, usize)>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::Contract("dataset needs at least one sample".into()))?;
        let k = first.c.len();
        if points == 0 || first.x.len() % points != 0 {
            return Err(Error::mismatch("dataset", &[first.x.len()], &[0, points]));
        }
        let c = first.x.len() / points;
        let mut conditions = Vec::with_capacity(samples.len() * k);
        let mut fields = Vec::with_capacity(samples.len() * c * points);
        for s in samples {
            if s.c.len() != k || s.x.len() != c * points {
                return Err(Error::mismatch("dataset", &[s.c.len(), s.x.len()], &[k, c * points]));
            }
            conditions.extend_from_slice(&s.c);
            fields.extend_from_slice(&s.x);
        }
        Self::new(c, points, k, conditions, fields, coords)
    }

    pub fn len(&self) -> usize {
        if self.cond_dim > 0 {
            self.conditions.len() / self.cond_dim
        } else {
            self.fields.len() / self.field_len().max(1)
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `C × N`
    pub fn field_len(&self) -> usize {
        self.channels * self.points
    }

    pub fn condition(&self, i: usize) -> &[f32] {
        &self.conditions[i * self.cond_dim..(i + 1) * self.cond_dim]
    }

    pub fn field(&self, i: usize) -> &[f32] {
        let n = self.field_len();
        &self.fields[i * n..(i + 1) * n]
    }

    pub fn sample(&self, i: usize) -> FieldSample {
        FieldSample {
            c: self.condition(i).to_vec(),
            x: self.field(i).to_vec(),
        }
    }

    /// Samples `idx` in the given order; coordinates are shared.
    pub fn subset(&self, idx: &[usize]) -> FieldDataset {
        FieldDataset {
            channels: self.channels,
            points: self.points,
            cond_dim: self.cond_dim,
            conditions: idx.iter().flat_map(|&i| self.condition(i).iter().copied()).collect(),
            fields: idx.iter().flat_map(|&i| self.field(i).iter().copied()).collect(),
            coords: self.coords.clone(),
            coord_dim: self.coord_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.points == 0 {
            return Err(Error::Contract("dataset needs at least one channel and one point".into()));
        }
        let m = self.len();
        if self.conditions.len() != m * self.cond_dim || self.fields.len() != m * self.field_len() {
            return Err(Error::shape(
                "dataset",
                format!(
                    "{} condition values and {} field values do not describe {m} samples of K={}, C={}, N={}",
                    self.conditions.len(),
                    self.fields.len(),
                    self.cond_dim,
                    self.channels,
                    self.points
                ),
            ));
        }
        match &self.coords {
            Some(c) if self.coord_dim == 0 || c.len() != self.points * self.coord_dim => {
                return Err(Error::mismatch("coords", &[c.len()], &[self.points, self.coord_dim]));
            }
            None if self.coord_dim != 0 => {
                return Err(Error::Contract("coord_dim set without coordinates".into()));
            }
            _ => {}
        }
        let arrays = [
            ("conditions", &self.conditions),
            ("fields", &self.fields),
        ];
        for (what, a) in arrays.into_iter().chain(self.coords.as_ref().map(|c| ("coords", c))) {
            if let Some(i) = a.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("{what}[{i}] = {}", a[i])));
            }
        }
        Ok(())
    }
}
