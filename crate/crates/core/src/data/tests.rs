use super::*;
use crate::error::Error;
use proptest::prelude::*;

fn three_samples() -> FieldDataset {
    FieldDataset::new(
        2,
        3,
        2,
        vec![0.1, 1.0, 0.2, -1.0, 0.3, 0.5],
        (0..18).map(|v| v as f32 * 0.25 - 1.0).collect(),
        Some((vec![0.0, 0.5, 1.0], 1)),
    )
    .unwrap()
}

fn bits(v: &[f32]) -> Vec<u32> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn ffd1_round_trip_is_bitwise() {
    let ds = three_samples();
    let back = decode_dataset(&encode_dataset(&ds).unwrap()).unwrap();
    assert_eq!(bits(&back.fields), bits(&ds.fields));
    assert_eq!(bits(&back.conditions), bits(&ds.conditions));
    assert_eq!(back, ds);
    let bare = FieldDataset { coords: None, coord_dim: 0, ..ds };
    assert_eq!(decode_dataset(&encode_dataset(&bare).unwrap()).unwrap(), bare);
}

#[test]
fn ffd1_header_layout() {
    let bytes = encode_dataset(&three_samples()).unwrap();
    let mut expect = b"FFD1".to_vec();
    for v in [1u32, 3, 3, 2, 2] {
        expect.extend(v.to_le_bytes());
    }
    expect.push(1);
    expect.extend(1u32.to_le_bytes());
    assert_eq!(&bytes[..29], expect.as_slice());
    assert_eq!(&bytes[29..33], &0.1f32.to_le_bytes());
    assert_eq!(bytes.len(), 29 + 4 * (6 + 18 + 3));
}

#[test]
fn ffd1_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.ffd1");
    let ds = three_samples();
    save_dataset(&ds, &path).unwrap();
    assert_eq!(load_dataset(&path).unwrap(), ds);
    assert!(matches!(load_dataset(dir.path().join("missing")), Err(Error::Io { .. })));
}

#[test]
fn ffd1_rejects_bad_magic_and_version() {
    let mut bytes = encode_dataset(&three_samples()).unwrap();
    let good = bytes.clone();
    bytes[..4].copy_from_slice(b"XXXX");
    assert!(matches!(decode_dataset(&bytes), Err(Error::Format(_))));
    let mut v2 = good.clone();
    v2[4..8].copy_from_slice(&2u32.to_le_bytes());
    assert!(matches!(decode_dataset(&v2), Err(Error::Format(_))));
    assert!(matches!(decode_dataset(b"FF"), Err(Error::Format(_))));
}

#[test]
fn ffd1_truncation_reports_offset() {
    // 10 samples declared, 9 present.
    let full = FieldDataset::new(1, 4, 1, vec![0.5; 10], vec![1.0; 40], None).unwrap();
    let mut bytes = encode_dataset(&full).unwrap();
    let fields_start = 29 + 4 * 10;
    bytes.truncate(bytes.len() - 16);
    match decode_dataset(&bytes) {
        Err(Error::Corrupt { offset, msg }) => {
            assert_eq!(offset, fields_start as u64);
            assert!(msg.contains("fields"), "{msg}");
        }
        other => panic!("expected corruption, got {other:?}"),
    }
    let mut long = encode_dataset(&full).unwrap();
    let end = long.len();
    long.extend([0, 0]);
    assert!(matches!(decode_dataset(&long), Err(Error::Corrupt { offset, .. }) if offset == end as u64));
}

#[test]
fn datasets_reject_nan_and_bad_shapes() {
    assert!(matches!(
        FieldDataset::new(1, 2, 1, vec![0.0], vec![1.0, f32::NAN], None),
        Err(Error::NonFinite(_))
    ));
    assert!(FieldDataset::new(1, 2, 1, vec![0.0, 1.0], vec![1.0, 2.0], None).is_err());
    assert!(FieldDataset::new(1, 2, 1, vec![0.0], vec![1.0, 2.0], Some((vec![0.0], 1))).is_err());
}

proptest! {
    #[test]
    fn ffd1_round_trips_any_finite_payload(
        raw in prop::collection::vec(any::<u32>(), 1..60),
        points in 1usize..5,
    ) {
        let vals: Vec<f32> = raw.iter().map(|&b| f32::from_bits(b)).filter(|v| v.is_finite()).collect();
        let m = vals.len() / (points + 1);
        prop_assume!(m > 0);
        let cond = vals[..m].to_vec();
        let fields = vals[m..m + m * points].to_vec();
        let ds = FieldDataset::new(1, points, 1, cond, fields, None).unwrap();
        let back = decode_dataset(&encode_dataset(&ds).unwrap()).unwrap();
        prop_assert_eq!(bits(&back.fields), bits(&ds.fields));
        prop_assert_eq!(bits(&back.conditions), bits(&ds.conditions));
    }
}

#[test]
fn split_sizes_follow_floor_allocation() {
    let s = split_conditions(1000, [0.7, 0.15, 0.15], 3).unwrap();
    assert_eq!((s.train.len(), s.val.len(), s.test.len()), (700, 150, 150));
    let s = split_conditions(200, [0.7, 0.15, 0.15], 3).unwrap();
    assert_eq!((s.train.len(), s.val.len(), s.test.len()), (140, 30, 30));
    let s = split_conditions(11, [0.7, 0.15, 0.15], 3).unwrap();
    assert_eq!((s.train.len(), s.val.len(), s.test.len()), (9, 1, 1));
    let all = split_conditions(7, [1.0, 0.0, 0.0], 3).unwrap();
    assert_eq!(all.train, (0..7).collect::<Vec<_>>());
}

#[test]
fn split_is_deterministic_per_seed() {
    let a = split_conditions(50, [0.7, 0.15, 0.15], 9).unwrap();
    assert_eq!(a, split_conditions(50, [0.7, 0.15, 0.15], 9).unwrap());
    assert_ne!(a, split_conditions(50, [0.7, 0.15, 0.15], 10).unwrap());
}

#[test]
fn split_rejects_bad_fractions() {
    assert!(matches!(split_conditions(10, [1.2, -0.1, -0.1], 0), Err(Error::Config(_))));
    assert!(matches!(split_conditions(10, [0.5, 0.2, 0.2], 0), Err(Error::Config(_))));
}

proptest! {
    #[test]
    fn split_is_a_partition(m in 1usize..300, seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (fv, ft) = (a * 0.5, b * 0.5 * (1.0 - a * 0.5));
        let s = split_conditions(m, [1.0 - fv - ft, fv, ft], seed).unwrap();
        let mut seen = vec![0; m];
        for i in s.train.iter().chain(&s.val).chain(&s.test) {
            seen[*i] += 1;
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        let asg = s.assignment();
        for &i in &s.test {
            prop_assert_eq!(asg[i], Split::Test);
        }
    }
}

/// Mean and population std of every channel, computed directly.
fn channel_moments(ds: &FieldDataset, idx: &[usize], ch: usize) -> (f64, f64) {
    let vals: Vec<f64> = idx
        .iter()
        .flat_map(|&i| ds.field(i)[ch * ds.points..(ch + 1) * ds.points].iter().map(|&v| v as f64))
        .collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
    (mean, var.sqrt())
}

fn synth() -> FieldDataset {
    synth_generate(&SynthSpec { points: 32, grid: [6, 5], seed: 0 }).unwrap()
}

#[test]
fn standardized_training_split_has_zero_mean_unit_std() {
    let ds = synth();
    let split = split_conditions(ds.len(), [0.7, 0.15, 0.15], 1).unwrap();
    let st = Standardizer::fit(&ds, &split.train).unwrap();
    let (m, s) = channel_moments(&ds, &split.train, 0);
    assert!((st.fields.mean[0] - m).abs() < 1e-12 && (st.fields.std[0] - s).abs() < 1e-12);
    let z = st.apply(&ds).unwrap();
    let (m, s) = channel_moments(&z, &split.train, 0);
    assert!(m.abs() <= 1e-5, "{m}");
    assert!((s - 1.0).abs() <= 1e-4, "{s}");
    let c0: Vec<f32> = split.train.iter().map(|&i| z.condition(i)[0]).collect();
    assert!((c0.iter().map(|&v| v as f64).sum::<f64>() / c0.len() as f64).abs() < 1e-5);
}

#[test]
fn destandardize_inverts_standardize() {
    let ds = synth();
    let st = Standardizer::fit(&ds, &(0..20).collect::<Vec<_>>()).unwrap();
    let mut f = st.apply(&ds).unwrap().fields;
    st.destandardize_fields(&mut f, ds.points).unwrap();
    for (a, b) in f.iter().zip(&ds.fields) {
        assert!((a - b).abs() <= 1e-5 * b.abs().max(1.0), "{a} vs {b}");
    }
    let c = st.destandardize_conditions(&st.apply_conditions(&ds.conditions).unwrap()).unwrap();
    for (a, b) in c.iter().zip(&ds.conditions) {
        assert!((a - b).abs() <= 1e-5 * b.abs().max(1.0));
    }
}

#[test]
fn constant_channel_is_degenerate() {
    let ds = FieldDataset::new(2, 2, 1, vec![0.0, 1.0], vec![1.0, 2.0, 5.0, 5.0, 3.0, 4.0, 5.0, 5.0], None).unwrap();
    assert!(matches!(Standardizer::fit(&ds, &[0, 1]), Err(Error::Degenerate(_))));
    let same_cond = FieldDataset::new(1, 2, 1, vec![1.0, 1.0], vec![1.0, 2.0, 3.0, 4.0], None).unwrap();
    assert!(matches!(Standardizer::fit(&same_cond, &[0, 1]), Err(Error::Degenerate(_))));
    assert!(matches!(Standardizer::fit(&same_cond, &[]), Err(Error::Contract(_))));
}

#[test]
fn stats_ignore_non_training_samples() {
    let ds = synth();
    let split = split_conditions(ds.len(), [0.7, 0.15, 0.15], 4).unwrap();
    let a = Standardizer::fit(&ds, &split.train).unwrap();
    let mut changed = ds.clone();
    let n = ds.field_len();
    for &i in &split.test {
        changed.fields[i * n..(i + 1) * n].iter_mut().for_each(|v| *v = *v * 3.0 + 7.0);
        changed.conditions[i * 2] = 99.0;
    }
    assert_eq!(a, Standardizer::fit(&changed, &split.train).unwrap());
}

#[test]
fn synth_examples() {
    let n = 17;
    let s: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
    assert_eq!(synth_field(0.0, 0.0, 0.0), 0.0);
    assert_eq!(synth_field(1.0, 0.0, 0.0), 0.0);
    for &sk in &s {
        let expect = -1.5 * (std::f64::consts::PI * sk).sin() * (-2.0 * sk).exp();
        assert!((synth_field(sk, 0.0, 0.0) - expect).abs() < 1e-15);
    }
    for (c1, c2) in [(0.0, 1.0), (0.5, -0.3), (1.0, -1.0)] {
        let at0 = -0.8 * c2 * (20.0f64 * (0.3 + 0.2 * c1)).tanh();
        assert!((synth_field(0.0, c1, c2) - at0).abs() < 1e-15);
    }
}

#[test]
fn synth_dataset_layout_and_grid() {
    let ds = synth_generate(&SynthSpec { points: 64, grid: [20, 10], seed: 5 }).unwrap();
    assert_eq!((ds.len(), ds.channels, ds.points, ds.cond_dim, ds.coord_dim), (200, 1, 64, 2, 1));
    assert_eq!(ds.condition(0), &[0.0, -1.0]);
    assert_eq!(ds.condition(9), &[0.0, 1.0]);
    assert_eq!(ds.condition(199), &[1.0, 1.0]);
    let coords = ds.coords.as_ref().unwrap();
    assert_eq!((coords[0], coords[63]), (0.0, 1.0));
    let (c1, c2) = (ds.condition(37)[0] as f64, ds.condition(37)[1] as f64);
    let want = synth_field(coords[10] as f64, 3.0 / 19.0, -1.0 + 2.0 * 7.0 / 9.0) as f32;
    assert_eq!(ds.field(37)[10], want, "c = ({c1}, {c2})");
    let again = synth_generate(&SynthSpec { points: 64, grid: [20, 10], seed: 5 }).unwrap();
    assert_eq!(bits(&ds.fields), bits(&again.fields));
}

#[test]
fn synth_rejects_small_grids() {
    assert!(matches!(synth_generate(&SynthSpec { points: 8, grid: [3, 10], seed: 0 }), Err(Error::Config(_))));
    assert_eq!(SynthSpec::parse_grid("20x10").unwrap(), [20, 10]);
    assert!(SynthSpec::parse_grid("20by10").is_err());
}

fn d_dc1(s: f64, c1: f64, c2: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let sech2 = 1.0 / (20.0 * (s - 0.3 - 0.2 * c1)).cosh().powi(2);
    -(pi * s).sin() * (-2.0 * s).exp() + 0.8 * c2 * sech2 * 20.0 * -0.2 + 0.1 * (6.0 * pi * s).sin() * c2
}

#[test]
fn synth_is_smooth_in_the_conditions() {
    for (s, c1, c2) in [(0.31, 0.2, 0.7), (0.5, 0.9, -0.4), (0.05, 0.45, 1.0)] {
        let err = |h: f64| {
            let fd = (synth_field(s, c1 + h, c2) - synth_field(s, c1 - h, c2)) / (2.0 * h);
            (fd - d_dc1(s, c1, c2)).abs()
        };
        let ratio = err(1e-2) / err(5e-3);
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }
}

const CSV: &str = "aoa,mach,idx,x,cp,cf
2.0,0.7,1,0.5,-0.3,0.01
2.0,0.7,0,0.0,1.0,0.02
2.0,0.7,2,1.0,0.2,0.03
4.0,0.6,0,0.0,0.9,0.04
4.0,0.6,2,1.0,0.1,0.05
4.0,0.6,1,0.5,-0.5,0.06
";

#[test]
fn csv_import_groups_by_condition() {
    let layout = CsvLayout { cond_columns: 2, coord_columns: 1 };
    let ds = import_csv_reader(CSV.as_bytes(), layout).unwrap();
    assert_eq!((ds.len(), ds.channels, ds.points, ds.cond_dim), (2, 2, 3, 2));
    assert_eq!(ds.condition(1), &[4.0, 0.6]);
    assert_eq!(ds.field(0), &[1.0, -0.3, 0.2, 0.02, 0.01, 0.03]);
    assert_eq!(ds.coords.as_deref(), Some(&[0.0, 0.5, 1.0][..]));
    let no_coords = import_csv_reader(CSV.as_bytes(), CsvLayout { cond_columns: 2, coord_columns: 0 }).unwrap();
    assert_eq!(no_coords.channels, 3);
}

#[test]
fn csv_import_errors() {
    let layout = CsvLayout { cond_columns: 2, coord_columns: 1 };
    let missing = CSV.replace("4.0,0.6,2,1.0,0.1,0.05\n", "");
    assert!(matches!(import_csv_reader(missing.as_bytes(), layout), Err(Error::Format(_))));
    let dup = CSV.replace("4.0,0.6,2,", "4.0,0.6,1,");
    assert!(matches!(import_csv_reader(dup.as_bytes(), layout), Err(Error::Format(_))));
    let bad = CSV.replace("-0.3", "abc");
    assert!(matches!(import_csv_reader(bad.as_bytes(), layout), Err(Error::Format(_))));
    let narrow = CsvLayout { cond_columns: 4, coord_columns: 1 };
    assert!(matches!(import_csv_reader(CSV.as_bytes(), narrow), Err(Error::Format(_))));
}
