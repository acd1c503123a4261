//! Error metrics in original units, including the AoA-weighted R².

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Samples whose |AoA| exceeds this many degrees get half weight.
pub const AOA_FULL_WEIGHT_DEG: f64 = 10.0;

/// Linear interpolation between order statistics at rank `q·(n − 1)`.
/// `sorted` must be ascending and nonempty.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMetrics {
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    pub mre_percent: f64,
    pub ae_95: f64,
    pub ae_99: f64,
    pub r2: f64,
    pub relative_l2: f64,
}

/// Weighted R² per channel, their mean, and the pooled value over all
/// channels stacked into one vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedR2 {
    pub per_channel: Vec<f64>,
    pub global: f64,
    pub pooled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(flatten)]
    pub overall: ChannelMetrics,
    pub per_channel: Vec<ChannelMetrics>,
    pub weighted_r2: Option<WeightedR2>,
    /// MRE denominator guard per channel.
    pub mre_delta: Vec<f64>,
}

/// `[M × C × N]` truth and prediction.
#[derive(Debug, Clone, Copy)]
pub struct FieldPair<'a, T> {
    pub truth: &'a [T],
    pub pred: &'a [T],
    pub channels: usize,
    pub points: usize,
}

impl<'a, T: Copy + Into<f64>> FieldPair<'a, T> {
    pub fn new(truth: &'a [T], pred: &'a [T], channels: usize, points: usize) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::Contract("metrics on an empty field set".into()));
        }
        if truth.len() != pred.len() {
            return Err(Error::mismatch("metrics", &[truth.len()], &[pred.len()]));
        }
        if channels == 0 || points == 0 || truth.len() % (channels * points) != 0 {
            return Err(Error::mismatch("metrics", &[truth.len()], &[0, channels, points]));
        }
        Ok(FieldPair { truth, pred, channels, points })
    }

    pub fn conditions(&self) -> usize {
        self.truth.len() / (self.channels * self.points)
    }

    fn channel_of(&self, j: usize) -> usize {
        (j / self.points) % self.channels
    }

    /// `(condition, channel, truth, prediction)` for every value.
    fn entries(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        let per = self.channels * self.points;
        self.truth
            .iter()
            .zip(self.pred)
            .enumerate()
            .map(move |(j, (&y, &p))| (j / per, self.channel_of(j), y.into(), p.into()))
    }
}

fn channel_metrics(values: &[(f64, f64, f64)]) -> ChannelMetrics {
    let n = values.len() as f64;
    let (mut se, mut ae, mut re, mut yy, mut ysum) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut abs_err = Vec::with_capacity(values.len());
    for &(y, p, delta) in values {
        let e = y - p;
        se += e * e;
        ae += e.abs();
        re += e.abs() / y.abs().max(delta);
        yy += y * y;
        ysum += y;
        abs_err.push(e.abs());
    }
    let mean = ysum / n;
    let ss_tot: f64 = values.iter().map(|&(y, _, _)| (y - mean).powi(2)).sum();
    abs_err.sort_by(f64::total_cmp);
    let mse = se / n;
    ChannelMetrics {
        mse,
        rmse: mse.sqrt(),
        mae: ae / n,
        mre_percent: 100.0 * re / n,
        ae_95: percentile(&abs_err, 0.95),
        ae_99: percentile(&abs_err, 0.99),
        r2: if ss_tot > 0.0 { 1.0 - se / ss_tot } else if se == 0.0 { 1.0 } else { f64::NEG_INFINITY },
        relative_l2: if yy > 0.0 { (se / yy).sqrt() } else if se == 0.0 { 0.0 } else { f64::INFINITY },
    }
}

/// `δ = 0.01 × std` per channel, from training-split statistics.
pub fn mre_delta_from_std(std: &[f64]) -> Vec<f64> {
    std.iter().map(|s| 0.01 * s).collect()
}

/// Pooled and per-channel metrics. `mre_delta` holds one guard per channel.
pub fn compute_metrics<T: Copy + Into<f64>>(pair: &FieldPair<'_, T>, mre_delta: &[f64]) -> Result<MetricsReport> {
    if mre_delta.len() != pair.channels {
        return Err(Error::mismatch("metrics", &[mre_delta.len()], &[pair.channels]));
    }
    let mut per: Vec<Vec<(f64, f64, f64)>> = vec![Vec::new(); pair.channels];
    let mut all = Vec::with_capacity(pair.truth.len());
    for (_, ch, y, p) in pair.entries() {
        if !(y.is_finite() && p.is_finite()) {
            return Err(Error::NonFinite(format!("metrics input ({y}, {p}) in channel {ch}")));
        }
        per[ch].push((y, p, mre_delta[ch]));
        all.push((y, p, mre_delta[ch]));
    }
    Ok(MetricsReport {
        overall: channel_metrics(&all),
        per_channel: per.iter().map(|v| channel_metrics(v)).collect(),
        weighted_r2: None,
        mre_delta: mre_delta.to_vec(),
    })
}

/// 1.0 inside `[−10°, 10°]`, 0.5 outside.
pub fn aoa_weights(aoa_deg: &[f64]) -> Vec<f64> {
    aoa_deg
        .iter()
        .map(|a| if a.abs() <= AOA_FULL_WEIGHT_DEG { 1.0 } else { 0.5 })
        .collect()
}

fn weighted_sums(
    pair: &FieldPair<'_, impl Copy + Into<f64>>,
    weights: &[f64],
    channel: Option<usize>,
) -> Result<(f64, f64)> {
    if weights.len() != pair.conditions() {
        return Err(Error::mismatch("weighted_r2", &[weights.len()], &[pair.conditions()]));
    }
    let select = |ch: usize| channel.map_or(true, |c| c == ch);
    let (mut sum, mut count) = (0.0, 0usize);
    for (_, ch, y, _) in pair.entries() {
        if select(ch) {
            sum += y;
            count += 1;
        }
    }
    let mean = sum / count as f64;
    let (mut res, mut tot) = (0.0, 0.0);
    for (m, ch, y, p) in pair.entries() {
        if select(ch) {
            res += weights[m] * (y - p).powi(2);
            tot += weights[m] * (y - mean).powi(2);
        }
    }
    if tot == 0.0 {
        return Err(Error::Degenerate(match channel {
            Some(c) => format!("weighted R² undefined: channel {c} of the truth is constant"),
            None => "weighted R² undefined: the truth is constant".into(),
        }));
    }
    Ok((res, tot))
}

/// `1 − Σ w (y − ŷ)² / Σ w (y − ȳ)²` for one channel, with one weight per
/// condition and `ȳ` the unweighted mean of the channel.
pub fn weighted_r2<T: Copy + Into<f64>>(pair: &FieldPair<'_, T>, weights: &[f64], channel: usize) -> Result<f64> {
    if channel >= pair.channels {
        return Err(Error::Config(format!("channel {channel} out of range for {} channels", pair.channels)));
    }
    let (res, tot) = weighted_sums(pair, weights, Some(channel))?;
    Ok(1.0 - res / tot)
}

pub fn weighted_r2_report<T: Copy + Into<f64>>(pair: &FieldPair<'_, T>, weights: &[f64]) -> Result<WeightedR2> {
    let per_channel = (0..pair.channels)
        .map(|c| weighted_r2(pair, weights, c))
        .collect::<Result<Vec<_>>>()?;
    let global = per_channel.iter().sum::<f64>() / per_channel.len() as f64;
    let (res, tot) = weighted_sums(pair, weights, None)?;
    Ok(WeightedR2 { per_channel, global, pooled: 1.0 - res / tot })
}

const FIELDS: [&str; 8] = ["mse", "rmse", "mae", "mre_percent", "ae_95", "ae_99", "r2", "relative_l2"];

impl ChannelMetrics {
    fn values(&self) -> [f64; 8] {
        [self.mse, self.rmse, self.mae, self.mre_percent, self.ae_95, self.ae_99, self.r2, self.relative_l2]
    }
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

impl MetricsReport {
    /// Flat `name → value` document; per-channel entries are prefixed
    /// `ch{c}.`.
    pub fn to_flat_json(&self) -> Value {
        let mut m = Map::new();
        for (k, v) in FIELDS.iter().zip(self.overall.values()) {
            m.insert((*k).into(), num(v));
        }
        for (c, ch) in self.per_channel.iter().enumerate() {
            for (k, v) in FIELDS.iter().zip(ch.values()) {
                m.insert(format!("ch{c}.{k}"), num(v));
            }
        }
        if let Some(w) = &self.weighted_r2 {
            for (c, v) in w.per_channel.iter().enumerate() {
                m.insert(format!("ch{c}.weighted_r2"), num(*v));
            }
            m.insert("weighted_r2".into(), num(w.global));
            m.insert("weighted_r2_pooled".into(), num(w.pooled));
        }
        for (c, d) in self.mre_delta.iter().enumerate() {
            m.insert(format!("ch{c}.mre_delta"), num(*d));
        }
        Value::Object(m)
    }

    /// One row for the pooled metrics (`all`) and one per channel.
    pub fn to_csv(&self) -> String {
        let mut out = format!("channel,{}\n", FIELDS.join(","));
        let rows = std::iter::once(("all".to_string(), &self.overall))
            .chain(self.per_channel.iter().enumerate().map(|(c, m)| (c.to_string(), m)));
        for (name, m) in rows {
            let vals: Vec<String> = m.values().iter().map(|v| v.to_string()).collect();
            out.push_str(&format!("{name},{}\n", vals.join(",")));
        }
        out
    }
}

#[cfg(test)]
mod tests;
