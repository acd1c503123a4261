//! Central finite-difference verification of analytic gradients.

use super::{Param, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub step: f64,
    /// Cap on coordinates checked per parameter (evenly spaced); `None`
    /// checks every coordinate.
    pub max_coords: Option<usize>,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-5,
            max_coords: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckEntry {
    pub name: String,
    /// `‖a - n‖₂ / max(‖a‖₂, ‖n‖₂)` over the checked coordinates.
    pub max_rel_error: f64,
    /// Largest `|a - n|` over single coordinates, and where it occurs.
    pub max_abs_error: f64,
    pub worst_index: usize,
    pub checked: usize,
}

#[derive(Debug, Clone, Default)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
}

impl GradCheckReport {
    pub fn max_error(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&GradCheckEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_error() <= tolerance
    }
}

/// `|a - n| / max(|a|, |n|, 1e-12)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12)
}

fn evaluate(f: &impl Fn() -> Result<Tensor<f64>>) -> Result<f64> {
    let v = f()?.item()?;
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("grad_check forward produced {v}")));
    }
    Ok(v)
}

/// Compares the gradients produced by `backward` against central
/// differences of `f` for every named parameter.
///
/// `f` must be deterministic and rebuild its graph from the parameters'
/// current values on each call.
pub fn grad_check<F>(
    params: &[(String, &Param<f64>)],
    f: F,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport>
where
    F: Fn() -> Result<Tensor<f64>>,
{
    for (_, p) in params {
        p.zero_grad();
    }
    let loss = f()?;
    if !loss.item()?.is_finite() {
        return Err(Error::NonFinite("grad_check forward value".into()));
    }
    loss.backward()?;
    let analytic: Vec<Vec<f64>> = params
        .iter()
        .map(|(_, p)| p.grad().unwrap_or_else(|| vec![0.0; p.numel()]))
        .collect();
    for (_, p) in params {
        p.zero_grad();
    }

    let h = opts.step;
    let mut report = GradCheckReport::default();
    for ((name, p), grad) in params.iter().zip(&analytic) {
        let base = p.values();
        let n = base.len();
        let indices: Vec<usize> = match opts.max_coords {
            Some(cap) if cap < n => (0..cap).map(|i| i * n / cap).collect(),
            _ => (0..n).collect(),
        };
        let mut entry = GradCheckEntry {
            name: name.clone(),
            max_rel_error: 0.0,
            max_abs_error: 0.0,
            worst_index: 0,
            checked: indices.len(),
        };
        let (mut diff2, mut a2, mut n2) = (0.0, 0.0, 0.0);
        for &i in &indices {
            let mut probe = base.clone();
            probe[i] = base[i] + h;
            p.set_values(probe.clone())?;
            let plus = evaluate(&f);
            probe[i] = base[i] - h;
            p.set_values(probe)?;
            let minus = evaluate(&f);
            p.set_values(base.clone())?;
            let numeric = (plus? - minus?) / (2.0 * h);
            let err = (grad[i] - numeric).abs();
            diff2 += err * err;
            a2 += grad[i] * grad[i];
            n2 += numeric * numeric;
            if err > entry.max_abs_error {
                entry.max_abs_error = err;
                entry.worst_index = i;
            }
        }
        entry.max_rel_error = diff2.sqrt() / a2.sqrt().max(n2.sqrt()).max(1e-12);
        report.entries.push(entry);
    }
    Ok(report)
}
