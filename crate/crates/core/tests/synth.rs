use std::path::Path;

use speckle_core::error::Error;
use speckle_core::fieldcore::{load_idx_dir, DigitSet};
use speckle_core::synth::*;

fn mnist() -> DigitSet {
    load_idx_dir(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")).unwrap()
}

fn focus(distances: &[f64]) -> ScenarioConfig {
    build_focus_sweep(&FocusSweepParams {
        distances: distances.to_vec(),
        ..FocusSweepParams::default()
    })
    .unwrap()
}

#[test]
fn counts_order_and_determinism() {
    let digits = mnist();
    let cfg = focus(&[1.0, 2.0]);
    let a = generate_dataset(&cfg, &digits, 2).unwrap();
    assert_eq!(a.len(), 10 * 2 * 2);
    assert_eq!((a.width, a.height), (32, 32));
    for (k, s) in a.samples.iter().enumerate() {
        assert_eq!(s.sweep_index as usize, k % 2);
        assert_eq!(s.label, digits.label(s.digit as usize));
    }
    let b = generate_dataset(&cfg, &digits, 2).unwrap();
    assert_eq!(a.to_bytes().unwrap(), b.to_bytes().unwrap());
}

#[test]
fn dataset_file_round_trip_and_corruption() {
    let digits = mnist();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.spkl");
    for cfg in [focus(&[1.0]), build_incoherent_baseline(&IncoherentBaselineParams::default()).unwrap()] {
        let ds = generate_dataset(&cfg, &digits, 1).unwrap();
        save_dataset(&ds, &path).unwrap();
        assert_eq!(load_dataset(&path).unwrap(), ds);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"SPKL");
        std::fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
        assert!(matches!(load_dataset(&path), Err(Error::Corruption(_))));
    }
}

#[test]
fn empty_digit_set_is_rejected() {
    let empty = DigitSet::new(28, 28, Vec::new(), Vec::new()).unwrap();
    assert!(generate_dataset(&focus(&[1.0]), &empty, 1).is_err());
}

fn ncc(a: &[f32], b: &[f32]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().map(|&v| v as f64).sum::<f64>() / n;
    let mb = b.iter().map(|&v| v as f64).sum::<f64>() / n;
    let (mut c, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64 - ma, y as f64 - mb);
        c += x * y;
        va += x * x;
        vb += y * y;
    }
    c / (va * vb).sqrt()
}

#[test]
fn speckle_decorrelates_between_distances() {
    let ds = generate_dataset(&focus(&[1.0, 2.0]), &mnist(), 1).unwrap();
    for pair in ds.samples.chunks(2) {
        let c = ncc(&pair[0].pixels, &pair[1].pixels);
        assert!(c.abs() < 0.5, "digit {}: ncc {c}", pair[0].digit);
    }
}

fn mean_pixel_variance(ds: &SpeckleDataset) -> f64 {
    let ex = ds.to_examples().unwrap();
    let (n, len) = (ex.len() as f64, ex.input_len);
    (0..len)
        .map(|p| {
            let col: Vec<f64> = (0..ex.len()).map(|i| ex.input(i)[p] as f64).collect();
            let m = col.iter().sum::<f64>() / n;
            col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n
        })
        .sum::<f64>()
        / len as f64
}

#[test]
fn lensless_incoherent_frames_carry_little_variation() {
    let digits = mnist();
    let incoherent = generate_dataset(&build_incoherent_baseline(&IncoherentBaselineParams::default()).unwrap(), &digits, 5)
        .unwrap();
    let mut coherent_cfg = focus(&[1.0]);
    coherent_cfg.preprocessing = incoherent.config.preprocessing;
    let coherent = generate_dataset(&coherent_cfg, &digits, 5).unwrap();
    let (vi, vc) = (mean_pixel_variance(&incoherent), mean_pixel_variance(&coherent));
    assert!(vc >= 10.0 * vi, "coherent {vc}, incoherent {vi}");
}

fn toy(per_class: u32, sweep: u16) -> SpeckleDataset {
    let cfg = focus(&(0..sweep).map(|i| 1.0 + i as f64).collect::<Vec<_>>());
    let samples = (0..10 * per_class)
        .flat_map(|d| {
            (0..sweep).map(move |s| Sample {
                label: (d % 10) as u8,
                sweep_index: s,
                digit: d,
                pixels: vec![d as f32; 32 * 32],
            })
        })
        .collect();
    SpeckleDataset::new(cfg, Provenance::new(0, per_class as usize, 0), 32, 32, samples).unwrap()
}

#[test]
fn split_counts_and_disjoint_identities() {
    let ds = toy(10, 2);
    let (train, test) = split(&ds, 0.8, 3).unwrap();
    assert_eq!((train.len(), test.len()), (160, 40));
    assert_eq!(train.digit_ids().len(), 80);
    for c in 0..10u8 {
        assert_eq!(train.samples.iter().filter(|s| s.label == c).count(), 16);
    }
    assert!(train.digit_ids().is_disjoint(&test.digit_ids()));
    let (again, _) = split(&ds, 0.8, 3).unwrap();
    assert_eq!(again, train);
    let (other, _) = split(&ds, 0.8, 4).unwrap();
    assert_ne!(other.digit_ids(), train.digit_ids());
}

#[test]
fn split_needs_two_digits_per_class() {
    assert!(matches!(split(&toy(1, 1), 0.5, 0), Err(Error::Split(_))));
    assert!(split(&toy(2, 1), 1.0, 0).is_err());
}

proptest::proptest! {
    #[test]
    fn splits_never_leak(per_class in 2u32..12, frac in 0.05f64..0.95, seed: u64) {
        let ds = toy(per_class, 3);
        let (train, test) = split(&ds, frac, seed).unwrap();
        proptest::prop_assert!(train.digit_ids().is_disjoint(&test.digit_ids()));
        proptest::prop_assert_eq!(train.len() + test.len(), ds.len());
        proptest::prop_assert_eq!(train.len() % 3, 0);
    }
}
