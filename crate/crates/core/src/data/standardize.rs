use super::FieldDataset;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Per-entry mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ChannelStats {
    fn check(&self, what: &str) -> Result<()> {
        if let Some(i) = self.std.iter().position(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::Degenerate(format!(
                "{what} {i} has standard deviation {} on the training split",
                self.std[i]
            )));
        }
        Ok(())
    }
}

fn moments(groups: usize, values: impl Iterator<Item = (usize, f64)> + Clone) -> ChannelStats {
    let mut sum = vec![0.0; groups];
    let mut count = vec![0usize; groups];
    for (g, v) in values.clone() {
        sum[g] += v;
        count[g] += 1;
    }
    let mean: Vec<f64> = sum.iter().zip(&count).map(|(s, &n)| s / n.max(1) as f64).collect();
    let mut sq = vec![0.0; groups];
    for (g, v) in values {
        sq[g] += (v - mean[g]).powi(2);
    }
    let std = sq.iter().zip(&count).map(|(s, &n)| (s / n.max(1) as f64).sqrt()).collect();
    ChannelStats { mean, std }
}

/// Field statistics per channel and condition statistics per entry, fitted
/// on a training subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub fields: ChannelStats,
    pub conditions: ChannelStats,
}

impl Standardizer {
    pub fn fit(ds: &FieldDataset, train: &[usize]) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Contract("standardization needs a nonempty training split".into()));
        }
        let (c, n, k) = (ds.channels, ds.points, ds.cond_dim);
        let fields = moments(
            c,
            train
                .iter()
                .flat_map(move |&i| ds.field(i).iter().enumerate().map(move |(j, &v)| (j / n, v as f64))),
        );
        let conditions = moments(
            k,
            train
                .iter()
                .flat_map(move |&i| ds.condition(i).iter().enumerate().map(|(j, &v)| (j, v as f64))),
        );
        let s = Standardizer { fields, conditions };
        s.fields.check("field channel")?;
        s.conditions.check("condition entry")?;
        Ok(s)
    }

    pub fn channels(&self) -> usize {
        self.fields.mean.len()
    }

    pub fn cond_dim(&self) -> usize {
        self.conditions.mean.len()
    }

    /// Standardized copy of every sample (all splits) of `ds`.
    pub fn apply(&self, ds: &FieldDataset) -> Result<FieldDataset> {
        let mut out = ds.clone();
        self.apply_fields(&mut out.fields, ds.points)?;
        out.conditions = self.apply_conditions(&ds.conditions)?;
        Ok(out)
    }

    /// In place over `[.. × C × N]`.
    pub fn apply_fields(&self, fields: &mut [f32], points: usize) -> Result<()> {
        self.map_fields(fields, points, |v, m, s| (v - m) / s)
    }

    pub fn destandardize_fields(&self, fields: &mut [f32], points: usize) -> Result<()> {
        self.map_fields(fields, points, |v, m, s| v * s + m)
    }

    fn map_fields(&self, fields: &mut [f32], points: usize, f: impl Fn(f64, f64, f64) -> f64) -> Result<()> {
        let c = self.channels();
        if points == 0 || fields.len() % (c * points) != 0 {
            return Err(Error::mismatch("standardize", &[fields.len()], &[0, c, points]));
        }
        for (j, v) in fields.iter_mut().enumerate() {
            let ch = (j / points) % c;
            *v = f(*v as f64, self.fields.mean[ch], self.fields.std[ch]) as f32;
        }
        Ok(())
    }

    pub fn apply_conditions(&self, cond: &[f32]) -> Result<Vec<f32>> {
        self.map_conditions(cond, |v, m, s| (v - m) / s)
    }

    pub fn destandardize_conditions(&self, cond: &[f32]) -> Result<Vec<f32>> {
        self.map_conditions(cond, |v, m, s| v * s + m)
    }

    fn map_conditions(&self, cond: &[f32], f: impl Fn(f64, f64, f64) -> f64) -> Result<Vec<f32>> {
        let k = self.cond_dim();
        if k == 0 {
            return if cond.is_empty() { Ok(Vec::new()) } else { Err(Error::mismatch("standardize", &[cond.len()], &[0])) };
        }
        if cond.len() % k != 0 {
            return Err(Error::mismatch("standardize", &[cond.len()], &[0, k]));
        }
        Ok(cond
            .iter()
            .enumerate()
            .map(|(j, &v)| f(v as f64, self.conditions.mean[j % k], self.conditions.std[j % k]) as f32)
            .collect())
    }
}
