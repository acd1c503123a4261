use super::*;
use crate::data::{synth_generate, Standardizer, SynthSpec};
use crate::rng::SeededRng;
use proptest::prelude::*;

fn pair<'a>(y: &'a [f64], p: &'a [f64], c: usize, n: usize) -> FieldPair<'a, f64> {
    FieldPair::new(y, p, c, n).unwrap()
}

#[test]
fn hand_computed_example() {
    let r = compute_metrics(&pair(&[1.0, 2.0], &[1.0, 3.0], 1, 2), &[0.0]).unwrap();
    assert_eq!(r.overall.mae, 0.5);
    assert_eq!(r.overall.mse, 0.5);
    assert!((r.overall.rmse - 0.5f64.sqrt()).abs() < 1e-15);
    assert!((r.overall.relative_l2 - 1.0 / 5f64.sqrt()).abs() < 1e-15);
    // |1-1|/1 and |2-3|/2
    assert!((r.overall.mre_percent - 25.0).abs() < 1e-12);
    // ȳ = 1.5, Σ(y−ȳ)² = 0.5
    assert!((r.overall.r2 - (1.0 - 1.0 / 0.5)).abs() < 1e-15);
}

#[test]
fn perfect_prediction() {
    let y = [0.3, -1.0, 2.0, 5.0];
    let r = compute_metrics(&pair(&y, &y, 2, 2), &[0.1, 0.1]).unwrap();
    let m = &r.overall;
    assert_eq!([m.mse, m.rmse, m.mae, m.mre_percent, m.ae_95, m.ae_99, m.relative_l2], [0.0; 7]);
    assert_eq!(m.r2, 1.0);
    assert!(r.per_channel.iter().all(|c| c.r2 == 1.0));
}

#[test]
fn percentiles_interpolate_between_order_statistics() {
    let y = vec![0.0; 100];
    let p: Vec<f64> = (0..100).map(|i| if i >= 95 { 1.0 } else { 0.0 }).collect();
    let r = compute_metrics(&pair(&y, &p, 1, 100), &[1.0]).unwrap();
    // rank 0.95·99 = 94.05 sits between sorted[94] = 0 and sorted[95] = 1.
    assert!((r.overall.ae_95 - 0.05).abs() < 1e-12);
    assert_eq!(r.overall.ae_99, 1.0);
    assert_eq!(percentile(&[2.0], 0.5), 2.0);
    assert_eq!(percentile(&[1.0, 3.0], 0.25), 1.5);
}

#[test]
fn mre_uses_the_guard_near_zero() {
    let r = compute_metrics(&pair(&[0.0, 10.0], &[0.5, 10.0], 1, 2), &[0.25]).unwrap();
    // 0.5 / max(0, 0.25) = 2, then 0
    assert!((r.overall.mre_percent - 100.0).abs() < 1e-12);
    assert_eq!(mre_delta_from_std(&[2.0, 0.5]), vec![0.02, 0.005]);
}

#[test]
fn metric_errors() {
    assert!(matches!(FieldPair::<f64>::new(&[], &[], 1, 1), Err(Error::Contract(_))));
    assert!(matches!(FieldPair::new(&[1.0], &[1.0, 2.0], 1, 1), Err(Error::ShapeMismatch { .. })));
    let y = [1.0, 1.0, 1.0, 1.0];
    assert!(matches!(weighted_r2(&pair(&y, &y, 1, 2), &[1.0, 1.0], 0), Err(Error::Degenerate(_))));
    assert!(weighted_r2(&pair(&[0.0, 1.0], &[0.0, 1.0], 1, 2), &[1.0, 1.0], 0).is_err());
}

/// Direct evaluation of the weighted definition.
fn weighted_oracle(y: &[f64], p: &[f64], w: &[f64], points: usize) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for f in 0..w.len() {
        for k in 0..points {
            let i = f * points + k;
            num += w[f] * (y[i] - p[i]) * (y[i] - p[i]);
            den += w[f] * (y[i] - mean) * (y[i] - mean);
        }
    }
    1.0 - num / den
}

#[test]
fn weighted_r2_fixture() {
    let y = [0.0, 2.0, 0.0, 2.0];
    let p = [0.0, 2.0, 1.0, 1.0];
    let w = [1.0, 0.5];
    let got = weighted_r2(&pair(&y, &p, 1, 2), &w, 0).unwrap();
    assert!((got - weighted_oracle(&y, &p, &w, 2)).abs() <= 1e-12);
    assert!((got - 2.0 / 3.0).abs() <= 1e-12);
}

#[test]
fn weighted_r2_examples() {
    let y = [0.0, 2.0, 5.0, -1.0, 3.0, 4.0];
    let pr = pair(&y, &y, 1, 3);
    assert_eq!(weighted_r2(&pr, &[0.5, 1.0], 0).unwrap(), 1.0);
    let mean = y.iter().sum::<f64>() / 6.0;
    let flat = [mean; 6];
    assert!(weighted_r2(&pair(&y, &flat, 1, 3), &[1.0, 1.0], 0).unwrap().abs() < 1e-15);
}

#[test]
fn aoa_weight_rule() {
    assert_eq!(aoa_weights(&[-10.0, 0.0, 10.0, 10.5, -12.0]), vec![1.0, 1.0, 1.0, 0.5, 0.5]);
}

#[test]
fn weighted_report_global_and_pooled() {
    let mut rng = SeededRng::new(1);
    let y: Vec<f64> = (0..3 * 2 * 4).map(|_| rng.normal()).collect();
    let p: Vec<f64> = y.iter().map(|v| v + 0.3 * rng.normal()).collect();
    let w = [1.0, 0.5, 1.0];
    let pr = pair(&y, &p, 2, 4);
    let rep = weighted_r2_report(&pr, &w).unwrap();
    assert_eq!(rep.per_channel.len(), 2);
    assert!((rep.global - 0.5 * (rep.per_channel[0] + rep.per_channel[1])).abs() < 1e-15);
    let plain = compute_metrics(&pr, &[0.01, 0.01]).unwrap();
    let pooled_ones = weighted_r2_report(&pr, &[1.0; 3]).unwrap().pooled;
    assert!((pooled_ones - plain.overall.r2).abs() <= 1e-10 * plain.overall.r2.abs());
}

#[test]
fn reports_serialize_flat() {
    let mut r = compute_metrics(&pair(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.5, 3.0, 3.0], 2, 1), &[0.1, 0.2]).unwrap();
    r.weighted_r2 = Some(WeightedR2 { per_channel: vec![0.9, 0.8], global: 0.85, pooled: 0.87 });
    let j = r.to_flat_json();
    let obj = j.as_object().unwrap();
    assert_eq!(obj["mse"].as_f64().unwrap(), r.overall.mse);
    assert_eq!(obj["ch1.mae"].as_f64().unwrap(), r.per_channel[1].mae);
    assert_eq!(obj["weighted_r2"].as_f64().unwrap(), 0.85);
    assert_eq!(obj["ch0.mre_delta"].as_f64().unwrap(), 0.1);
    assert!(obj.values().all(|v| v.is_number()));
    let csv = r.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("channel,mse,rmse"));
    assert!(lines[1].starts_with("all,"));
}

#[test]
fn metrics_survive_a_standardization_round_trip() {
    let ds = synth_generate(&SynthSpec { points: 16, grid: [5, 4], seed: 0 }).unwrap();
    let st = Standardizer::fit(&ds, &(0..14).collect::<Vec<_>>()).unwrap();
    let mut rng = SeededRng::new(2);
    let pred: Vec<f32> = ds.fields.iter().map(|&v| v + 0.05 * rng.normal() as f32).collect();
    let mut round = pred.clone();
    st.apply_fields(&mut round, 16).unwrap();
    st.destandardize_fields(&mut round, 16).unwrap();
    let delta = mre_delta_from_std(&st.fields.std);
    let a = compute_metrics(&FieldPair::new(&ds.fields, &pred, 1, 16).unwrap(), &delta).unwrap();
    let b = compute_metrics(&FieldPair::new(&ds.fields, &round, 1, 16).unwrap(), &delta).unwrap();
    for (x, y) in a.overall.values().iter().zip(b.overall.values()) {
        assert!((x - y).abs() <= 1e-5 * x.abs().max(1e-12), "{x} vs {y}");
    }
}

proptest! {
    #[test]
    fn metric_invariants(seed in any::<u64>(), m in 1usize..6, n in 2usize..9) {
        let mut rng = SeededRng::new(seed);
        let y: Vec<f64> = (0..m * n).map(|_| rng.normal()).collect();
        let p: Vec<f64> = (0..m * n).map(|_| rng.normal()).collect();
        let r = compute_metrics(&pair(&y, &p, 1, n), &[0.01]).unwrap().overall;
        prop_assert!((r.rmse * r.rmse - r.mse).abs() <= 1e-12 * r.mse.max(1e-300));
        prop_assert!((r.rmse - r.mse.sqrt()).abs() <= 1e-7 * r.rmse);
        prop_assert!(r.ae_95 <= r.ae_99);
        prop_assert!(r.r2 <= 1.0);
        let w = weighted_r2(&pair(&y, &p, 1, n), &vec![1.0; m], 0).unwrap();
        prop_assert!((w - r.r2).abs() <= 1e-10 * r.r2.abs().max(1.0));
    }

    #[test]
    fn pooled_metrics_ignore_ordering(seed in any::<u64>(), len in 2usize..40) {
        let mut rng = SeededRng::new(seed);
        let y: Vec<f64> = (0..len).map(|_| rng.normal()).collect();
        let p: Vec<f64> = (0..len).map(|_| rng.normal()).collect();
        let mut order: Vec<usize> = (0..len).collect();
        rng.shuffle(&mut order);
        let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let ps: Vec<f64> = order.iter().map(|&i| p[i]).collect();
        let a = compute_metrics(&pair(&y, &p, 1, len), &[0.1]).unwrap().overall;
        let b = compute_metrics(&pair(&ys, &ps, 1, len), &[0.1]).unwrap().overall;
        for (u, v) in a.values().iter().zip(b.values()) {
            prop_assert!((u - v).abs() <= 1e-12 * u.abs().max(1.0));
        }
    }
}
