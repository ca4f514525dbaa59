use proptest::prelude::*;
use speckle_core::error::Error;
use speckle_core::fieldcore::*;

fn digits(n: usize, rows: usize, cols: usize, seed: u8) -> DigitSet {
    let pixels = (0..n * rows * cols).map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed)).collect();
    let labels = (0..n).map(|i| (i % 10) as u8).collect();
    DigitSet::new(rows, cols, pixels, labels).unwrap()
}

#[test]
fn swapped_idx_files_are_a_pairing_error() {
    let (img, lbl) = digits(3, 4, 5, 0).to_idx_bytes();
    assert!(matches!(DigitSet::from_idx_bytes(&lbl, &img), Err(Error::Pairing(_))));
}

#[test]
fn idx_errors() {
    let (img, lbl) = digits(3, 4, 5, 0).to_idx_bytes();
    let mut bad = img.clone();
    bad[3] = 0x07;
    assert!(matches!(DigitSet::from_idx_bytes(&bad, &lbl), Err(Error::Format(_))));
    assert!(matches!(
        DigitSet::from_idx_bytes(&img[..img.len() - 1], &lbl),
        Err(Error::Length { .. })
    ));
    let (_, short) = digits(2, 4, 5, 0).to_idx_bytes();
    assert!(matches!(DigitSet::from_idx_bytes(&img, &short), Err(Error::Pairing(_))));
}

#[test]
fn idx_directory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let set = digits(12, 28, 28, 5);
    set.write_idx(&dir.path().join("images-idx3-ubyte"), &dir.path().join("labels-idx1-ubyte"))
        .unwrap();
    assert_eq!(load_idx_dir(dir.path()).unwrap(), set);
}

fn image(w: usize, h: usize, v: Vec<f64>) -> IntensityImage {
    IntensityImage::new(w, h, 1e-6, v).unwrap()
}

proptest! {
    #[test]
    fn idx_bytes_round_trip(n in 1usize..20, rows in 1usize..12, cols in 1usize..12, seed: u8) {
        let set = digits(n, rows, cols, seed);
        let (img, lbl) = set.to_idx_bytes();
        prop_assert_eq!(DigitSet::from_idx_bytes(&img, &lbl).unwrap(), set);
    }

    #[test]
    fn downsampling_keeps_the_mean(
        (w, h, v) in (2usize..24, 2usize..24).prop_flat_map(|(w, h)| {
            (Just(w), Just(h), proptest::collection::vec(0.0f64..100.0, w * h))
        }),
        fx in 0.05f64..1.0, fy in 0.05f64..1.0,
    ) {
        let img = image(w, h, v);
        let (ow, oh) = (((w as f64 * fx) as usize).max(1), ((h as f64 * fy) as usize).max(1));
        let small = downsample(&img, ow, oh).unwrap();
        prop_assert!((small.mean() - img.mean()).abs() <= 1e-9 * img.mean().max(1.0));
    }

    #[test]
    fn quantization_is_monotone(v in proptest::collection::vec(0.0f64..10.0, 2..64), bits in 1u8..=16) {
        let n = v.len();
        let q = quantize(&image(n, 1, v.clone()), bits).unwrap();
        let top = ((1u32 << bits) - 1) as f64;
        for i in 0..n {
            prop_assert!(q.values()[i] >= 0.0 && q.values()[i] <= top && q.values()[i].fract() == 0.0);
            for j in 0..n {
                if v[i] <= v[j] {
                    prop_assert!(q.values()[i] <= q.values()[j]);
                }
            }
        }
    }
}
