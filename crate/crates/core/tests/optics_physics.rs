//! Physical checks of the propagators, elements and sensor models.

use num_complex::Complex64;
use proptest::prelude::*;
use speckle_core::fieldcore::{intensity, ComplexField, Grid, IntensityImage};
use speckle_core::optics::*;

const LAM: f64 = 632.8e-9;
const P: f64 = 1e-6;

fn spot(grid: Grid, cx: f64, cy: f64, w: f64, a: Complex64) -> ComplexField {
    ComplexField::from_fn(grid, |x, y| a * (-((x - cx).powi(2) + (y - cy).powi(2)) / (w * w)).exp()).unwrap()
}

#[test]
fn young_fringe_period() {
    let src_grid = Grid::new(16, 1, P, LAM).unwrap();
    let mut amp = vec![Complex64::new(0.0, 0.0); 16];
    amp[4] = Complex64::new(1.0, 0.0);
    amp[12] = Complex64::new(1.0, 0.0);
    let src = ComplexField::new(src_grid, amp).unwrap();
    let (s, z) = (8.0 * P, 400.0 * P);
    let sensor = Grid::new(64, 1, 1.5 * P, LAM).unwrap();
    let out = intensity(&propagate_direct(&src, z, &sensor).unwrap());
    let v = out.values();
    // Interior local maxima, refined by a parabola through the neighbours.
    let peaks: Vec<f64> = (1..63)
        .filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1])
        .map(|i| {
            let d = (v[i - 1] - v[i + 1]) / (2.0 * (v[i - 1] - 2.0 * v[i] + v[i + 1]));
            sensor.x(i) + d * sensor.pitch
        })
        .collect();
    let center = peaks.iter().position(|x| x.abs() < 2.0 * P).expect("central maximum");
    let period = peaks[center + 1] - peaks[center];
    let expected = LAM * z / s;
    assert!((period / expected - 1.0).abs() < 0.01, "{period} vs {expected}");
}

#[test]
fn lens_collimates_point_source_at_focal_distance() {
    let g = Grid::square(256, P, LAM).unwrap();
    let f = 1000.0 * P;
    let mut amp = vec![Complex64::new(0.0, 0.0); g.len()];
    amp[128 * 256 + 128] = Complex64::new(1.0, 0.0);
    let at_lens = propagate_as(&ComplexField::new(g, amp).unwrap(), f).unwrap();
    let out = apply_lens(&at_lens, &ThinLens { focal_length: f }).unwrap();
    let c = out.at(128, 128);
    let phases: Vec<f64> = (64..192)
        .flat_map(|j| (64..192).map(move |i| (i, j)))
        .map(|(i, j)| (out.at(i, j) * c.conj()).arg())
        .collect();
    let mean = phases.iter().sum::<f64>() / phases.len() as f64;
    let rms = (phases.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / phases.len() as f64).sqrt();
    assert!(rms < 2.0 * std::f64::consts::PI / 10.0, "residual {rms} rad");
}

#[test]
fn periodic_plane_wave_stays_unit_magnitude() {
    let g = Grid::square(64, 2.0 * P, LAM).unwrap();
    let out = AngularSpectrum::new(1).unwrap().propagate(&ComplexField::plane_wave(g).unwrap(), 123.0 * P).unwrap();
    assert!(out.amplitude().iter().all(|a| (a.norm() - 1.0).abs() < 1e-9));
}

#[test]
fn back_propagation_recovers_band_limited_input() {
    let g = Grid::square(64, P, LAM).unwrap();
    let f = spot(g, 3.0 * P, -2.0 * P, 3.0 * P, Complex64::new(0.3, 1.0));
    let prop = AngularSpectrum::new(1).unwrap();
    let there = prop.propagate(&f, 25.0 * P).unwrap();
    let back = prop.back_propagate(&there, 25.0 * P).unwrap();
    let err: f64 = back.amplitude().iter().zip(f.amplitude()).map(|(a, b)| (a - b).norm_sqr()).sum();
    assert!((err / f.energy()).sqrt() < 1e-6);
}

#[test]
fn phase_only_elements_keep_magnitudes_and_energy() {
    let g = Grid::square(64, P, LAM).unwrap();
    let f = spot(g, 0.0, 0.0, 10.0 * P, Complex64::new(1.0, -0.5));
    let screen = make_phase_screen(&g, 0.0, 9).unwrap();
    for out in [
        apply_lens(&f, &ThinLens { focal_length: 300.0 * P }).unwrap(),
        apply_phase_screen(&f, &screen).unwrap(),
    ] {
        for (a, b) in out.amplitude().iter().zip(f.amplitude()) {
            assert!((a.norm() - b.norm()).abs() <= 1e-15 * b.norm().max(1e-300) + 1e-300);
        }
        assert!((out.energy() / f.energy() - 1.0).abs() < 1e-12);
    }
    let lens = apply_lens(&f, &ThinLens { focal_length: 300.0 * P }).unwrap();
    assert_eq!(lens.at(32, 32), f.at(32, 32));
}

#[test]
fn screen_applied_twice_doubles_phase() {
    let g = Grid::square(16, P, LAM).unwrap();
    let f = ComplexField::plane_wave(g).unwrap();
    let s = make_phase_screen(&g, 0.0, 4).unwrap();
    let twice = apply_phase_screen(&apply_phase_screen(&f, &s).unwrap(), &s).unwrap();
    let doubled = PhaseScreen {
        phases: s.phases.iter().map(|p| (2.0 * p) % (2.0 * std::f64::consts::PI)).collect(),
        ..s.clone()
    };
    let once = apply_phase_screen(&f, &doubled).unwrap();
    for (a, b) in twice.amplitude().iter().zip(once.amplitude()) {
        assert!((a - b).norm() < 1e-12);
    }
    let zero = PhaseScreen {
        phases: vec![0.0; g.len()],
        ..s
    };
    assert_eq!(apply_phase_screen(&f, &zero).unwrap(), f);
}

fn adjacent_phase_step(s: &PhaseScreen) -> f64 {
    let mut sum = 0.0;
    let mut n = 0;
    for j in 0..s.height {
        for i in 0..s.width - 1 {
            let d = s.phases[j * s.width + i + 1] - s.phases[j * s.width + i];
            sum += Complex64::from_polar(1.0, d).arg().abs();
            n += 1;
        }
    }
    sum / n as f64
}

#[test]
fn phase_screen_statistics() {
    let g = Grid::square(256, P, LAM).unwrap();
    let s = make_phase_screen(&g, 0.0, 21).unwrap();
    let n = s.phases.len() as f64;
    let mean: Complex64 = s.phases.iter().map(|&p| Complex64::from_polar(1.0, p)).sum::<Complex64>() / n;
    let circular_variance = 1.0 - mean.norm();
    assert!(circular_variance > 1.0 - 3.0 / n.sqrt(), "{circular_variance}");
    assert!(s.phases.iter().all(|p| (0.0..2.0 * std::f64::consts::PI).contains(p)));
    assert_eq!(make_phase_screen(&g, 0.0, 21).unwrap(), s);
    let smooth = make_phase_screen(&g, 10.0 * P, 21).unwrap();
    assert!(adjacent_phase_step(&smooth) < adjacent_phase_step(&s));
}

#[test]
fn uniform_object_far_away_gives_nearly_flat_incoherent_frame() {
    let g = Grid::square(64, P, LAM).unwrap();
    let obj = ComplexField::from_fn(g, |x, y| {
        let inside = x.abs() < 14.0 * P && y.abs() < 14.0 * P;
        Complex64::new(if inside { 1.0 } else { 0.0 }, 0.0)
    })
    .unwrap();
    let geo = Geometry::lensless(100.0 * 28.0 * P, [64, 64], P);
    let img = incoherent_lensless_direct(&obj, &geo).unwrap();
    let cv = {
        let m = img.mean();
        (img.values().iter().map(|v| (v - m).powi(2)).sum::<f64>() / img.values().len() as f64).sqrt() / m
    };
    assert!(cv < 0.01, "cv {cv}");
    let fast = incoherent_lensless_image(&obj, &geo).unwrap();
    for (a, b) in fast.values().iter().zip(img.values()) {
        assert!((a - b).abs() <= 1e-10 * b);
    }
}

struct Camera {
    grid: Grid,
    focus: f64,
    si: f64,
    f: f64,
}

impl Camera {
    // 256 px at 1 µm, focused at 100 µm with magnification 0.5.
    fn new() -> Self {
        let focus = 100.0 * P;
        let si = 0.5 * focus;
        Self {
            grid: Grid::square(256, P, LAM).unwrap(),
            focus,
            si,
            f: 1.0 / (1.0 / focus + 1.0 / si),
        }
    }

    fn imager(&self, so: f64, aperture: f64) -> IncoherentImager {
        let geo = Geometry {
            object_plane: 0.0,
            element_planes: vec![so],
            sensor_plane: so + self.si,
            sensor_dims: [128, 128],
            sensor_pitch: P,
        };
        IncoherentImager::new(self.grid, &geo, &Aperture::square(aperture), &ThinLens { focal_length: self.f })
            .unwrap()
    }
}

fn ncc(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

const GLYPH: [&str; 8] = [
    "..####..", ".#....#.", ".#....#.", "..####..", ".#....#.", ".#....#.", "..####..", "........",
];

/// Blocky 8x8 figure with 8 µm pixels, centred on the grid.
fn glyph_object(grid: Grid) -> IntensityImage {
    let cell = 8.0 * P;
    let v = (0..grid.len())
        .map(|n| {
            let (x, y) = (grid.x(n % grid.width), grid.y(n / grid.width));
            let (c, r) = ((x / cell + 4.0).floor(), (y / cell + 4.0).floor());
            let lit = (0.0..8.0).contains(&c)
                && (0.0..8.0).contains(&r)
                && GLYPH[r as usize].as_bytes()[c as usize] == b'#';
            if lit {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    IntensityImage::new(grid.width, grid.height, grid.pitch, v).unwrap()
}

#[test]
fn in_focus_imaging_with_wide_aperture_reproduces_object() {
    let cam = Camera::new();
    let d_min = diffraction_limit(LAM, cam.focus, 8.0 * P).unwrap();
    let im = cam.imager(cam.focus, 4.0 * d_min);
    let obj = glyph_object(cam.grid);
    let got = im.image(&obj).unwrap();
    let ideal = sensor_readout(&im.ideal_image(&obj).unwrap(), [128, 128], P).unwrap();
    let c = ncc(got.values(), ideal.values());
    assert!(c > 0.95, "ncc {c}");
}

#[test]
fn defocus_widens_the_psf() {
    let cam = Camera::new();
    let d = 4.0 * diffraction_limit(LAM, cam.focus, 6.4 * P).unwrap();
    let focused = cam.imager(cam.focus, d).psf_rms_width();
    let defocused = cam.imager(2.0 * cam.focus, d).psf_rms_width();
    assert!(defocused > focused, "{defocused} <= {focused}");
}

#[test]
fn sub_limit_aperture_merges_bars() {
    let cam = Camera::new();
    let dx = 6.4 * P;
    let d = diffraction_limit(LAM, cam.focus, dx).unwrap() / 4.0;
    let im = cam.imager(cam.focus, d);
    let g = cam.grid;
    let v = (0..g.len())
        .map(|n| {
            let x = g.x(n % g.width);
            let y = g.y(n / g.width);
            let on = (x - dx / 2.0).abs() < 1.0 * P || (x + dx / 2.0).abs() < 1.0 * P;
            if on && y.abs() < 20.0 * P {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let obj = IntensityImage::new(g.width, g.height, P, v).unwrap();
    let img = im.image(&obj).unwrap();
    let row: Vec<f64> = (0..128).map(|i| img.at(i, 64)).collect();
    let peak = row.iter().cloned().fold(0.0, f64::max);
    assert!(row[64] >= 0.9 * peak, "midpoint {} peak {peak}", row[64]);
}

#[test]
fn diffraction_limit_reference_value() {
    let d = diffraction_limit(632.8e-9, 1.0, 2.8e-3).unwrap();
    assert!((d - 2.26e-4).abs() < 5e-7);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn periodic_propagation_conserves_energy(
        cx in -8.0f64..8.0, cy in -8.0f64..8.0, w in 2.0f64..6.0,
        re in -1.0f64..1.0, im in -1.0f64..1.0, z in 1.0f64..40.0,
    ) {
        prop_assume!(re.abs() + im.abs() > 1e-3);
        let g = Grid::square(64, P, LAM).unwrap();
        let f = spot(g, cx * P, cy * P, w * P, Complex64::new(re, im));
        let r = AngularSpectrum::new(1).unwrap().propagate_reported(&f, z * P).unwrap();
        prop_assume!(r.clipped_fraction < 1e-9);
        prop_assert!((r.field.energy() / f.energy() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn diffraction_limit_is_degree_one(lam in 1e-7f64..2e-6, l in 1e-4f64..10.0, dx in 1e-6f64..1e-2, a in 0.1f64..10.0) {
        let d = diffraction_limit(lam, l, dx).unwrap();
        let scaled = diffraction_limit(a * lam, a * l, a * dx).unwrap();
        prop_assert!((scaled / (a * d) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn intensity_is_nonnegative(vals in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 16)) {
        let g = Grid::square(4, P, LAM).unwrap();
        let f = ComplexField::new(g, vals.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap();
        prop_assert!(intensity(&f).values().iter().all(|&v| v >= 0.0));
    }
}
