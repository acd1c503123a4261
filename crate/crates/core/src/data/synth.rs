use super::FieldDataset;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Grid of `grid[0]` values of c₁ ∈ [0, 1] by `grid[1]` values of
/// c₂ ∈ [−1, 1], each sampled at `points` positions on [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub points: usize,
    pub grid: [usize; 2],
    /// Carried for the downstream split; the field itself is noise-free.
    #[serde(default)]
    pub seed: u64,
}

impl SynthSpec {
    /// Parses `"20x10"`.
    pub fn parse_grid(s: &str) -> Result<[usize; 2]> {
        let bad = || Error::Config(format!("grid must look like 20x10, got {s:?}"));
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        Ok([a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?])
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::Config(format!("synthetic fields need at least 2 points, got {}", self.points)));
        }
        if self.grid.iter().any(|&g| g < 4) {
            return Err(Error::Config(format!(
                "each condition axis needs at least 4 values, got {}x{}",
                self.grid[0], self.grid[1]
            )));
        }
        Ok(())
    }
}

/// `f(s; c) = −(1.5 + c₁)·sin(πs)·e^(−2s) + 0.8·c₂·tanh(20(s − 0.3 − 0.2c₁)) + 0.1·sin(6πs)·c₁·c₂`
pub fn synth_field(s: f64, c1: f64, c2: f64) -> f64 {
    -(1.5 + c1) * sin_pi(s) * (-2.0 * s).exp()
        + 0.8 * c2 * (20.0 * (s - 0.3 - 0.2 * c1)).tanh()
        + 0.1 * sin_pi(6.0 * s) * c1 * c2
}

/// `sin(πx)`, exactly zero at integers.
fn sin_pi(x: f64) -> f64 {
    let n = x.round();
    let r = (PI * (x - n)).sin();
    if n.rem_euclid(2.0) == 0.0 {
        r
    } else {
        -r
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

/// One channel, conditions `(c₁, c₂)` with c₁ varying slowest, and point
/// coordinates `s_k = k/(N−1)`.
pub fn synth_generate(spec: &SynthSpec) -> Result<FieldDataset> {
    spec.validate()?;
    let n = spec.points;
    let s: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
    let mut conditions = Vec::with_capacity(2 * spec.grid[0] * spec.grid[1]);
    let mut fields = Vec::with_capacity(n * spec.grid[0] * spec.grid[1]);
    for c1 in linspace(0.0, 1.0, spec.grid[0]) {
        for c2 in linspace(-1.0, 1.0, spec.grid[1]) {
            conditions.extend([c1 as f32, c2 as f32]);
            fields.extend(s.iter().map(|&sk| synth_field(sk, c1, c2) as f32));
        }
    }
    let coords = s.iter().map(|&v| v as f32).collect();
    FieldDataset::new(1, n, 2, conditions, fields, Some((coords, 1)))
}
