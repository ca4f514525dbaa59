use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldcore::{ComplexField, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ApertureShape {
    #[default]
    Square,
    Circular,
}

/// Hard-edged opening: side length for squares, diameter for circles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aperture {
    pub shape: ApertureShape,
    pub size: f64,
    #[serde(default)]
    pub center_offset: [f64; 2],
}

impl Aperture {
    pub fn square(size: f64) -> Self {
        Self {
            shape: ApertureShape::Square,
            size,
            center_offset: [0.0, 0.0],
        }
    }

    pub fn circular(diameter: f64) -> Self {
        Self {
            shape: ApertureShape::Circular,
            size: diameter,
            center_offset: [0.0, 0.0],
        }
    }

    /// Transmission at a point given in pixel units relative to the aperture
    /// center. Squares use half-open bounds so a side of `n` pixels passes
    /// exactly `n` pixel centers.
    fn passes(&self, u: f64, v: f64, half: f64) -> bool {
        const EPS: f64 = 1e-9;
        match self.shape {
            ApertureShape::Square => {
                u >= -half - EPS && u < half - EPS && v >= -half - EPS && v < half - EPS
            }
            ApertureShape::Circular => u * u + v * v <= half * half * (1.0 + EPS),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThinLens {
    pub focal_length: f64,
}

/// Thin random phase element; phases lie in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScreen {
    pub width: usize,
    pub height: usize,
    pub pitch: f64,
    pub phases: Vec<f64>,
    pub correlation_length: f64,
    pub seed: u64,
}

pub fn apply_aperture(field: &ComplexField, ap: &Aperture) -> Result<ComplexField> {
    if !(ap.size > 0.0 && ap.size.is_finite()) {
        return Err(Error::Argument(format!("aperture size must be positive, got {}", ap.size)));
    }
    let g = *field.grid();
    let [cx, cy] = ap.center_offset;
    if cx.abs() > g.extent_x() / 2.0 || cy.abs() > g.extent_y() / 2.0 {
        return Err(Error::Geometry(format!(
            "aperture center ({cx}, {cy}) lies outside the grid"
        )));
    }
    let half = ap.size / (2.0 * g.pitch);
    Ok(field.modulate(|x, y| {
        let u = (x - cx) / g.pitch;
        let v = (y - cy) / g.pitch;
        if ap.passes(u, v, half) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// Converging thin-lens phase `exp(+i k r² / 2f)` under the `exp(-ikz)`
/// propagation convention used by [`propagate_as`](super::propagate_as).
pub fn apply_lens(field: &ComplexField, lens: &ThinLens) -> Result<ComplexField> {
    let f = lens.focal_length;
    if f == 0.0 || !f.is_finite() {
        return Err(Error::Argument(format!("focal length must be finite and nonzero, got {f}")));
    }
    let k = field.grid().wavenumber();
    Ok(field.modulate(|x, y| Complex64::from_polar(1.0, k * (x * x + y * y) / (2.0 * f))))
}

pub fn apply_phase_screen(field: &ComplexField, screen: &PhaseScreen) -> Result<ComplexField> {
    if screen.width != field.width() || screen.height != field.height() {
        return Err(Error::Geometry(format!(
            "screen is {}x{}, field is {}x{}",
            screen.width,
            screen.height,
            field.width(),
            field.height()
        )));
    }
    let amplitude = field
        .amplitude()
        .iter()
        .zip(&screen.phases)
        .map(|(a, &p)| a * Complex64::from_polar(1.0, p))
        .collect();
    ComplexField::new(*field.grid(), amplitude)
}

fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

// Periodic 1-D Gaussian blur applied along rows of a w×h buffer.
fn blur_rows(data: &[Complex64], w: usize, h: usize, kernel: &[f64]) -> Vec<Complex64> {
    let r = (kernel.len() / 2) as i64;
    let mut out = vec![Complex64::new(0.0, 0.0); w * h];
    for y in 0..h {
        let row = &data[y * w..(y + 1) * w];
        for x in 0..w {
            let mut s = Complex64::new(0.0, 0.0);
            for (t, &k) in kernel.iter().enumerate() {
                let xi = (x as i64 + t as i64 - r).rem_euclid(w as i64) as usize;
                s += row[xi] * k;
            }
            out[y * w + x] = s;
        }
    }
    out
}

fn transpose(data: &[Complex64], w: usize, h: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); w * h];
    for y in 0..h {
        for x in 0..w {
            out[x * h + y] = data[y * w + x];
        }
    }
    out
}

/// I.i.d. uniform phases, optionally smoothed by a periodic Gaussian filter
/// (std = `correlation_length`) applied to the unit phasors.
pub fn make_phase_screen(grid: &Grid, correlation_length: f64, seed: u64) -> Result<PhaseScreen> {
    if !(correlation_length >= 0.0 && correlation_length.is_finite()) {
        return Err(Error::Argument(format!(
            "correlation length must be nonnegative, got {correlation_length}"
        )));
    }
    if grid.width == 0 || grid.height == 0 || !(grid.pitch > 0.0) {
        return Err(Error::Argument("phase screen grid must be nonempty".into()));
    }
    let (w, h) = (grid.width, grid.height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phases: Vec<f64> = (0..w * h).map(|_| wrap_phase(rng.gen::<f64>() * 2.0 * PI)).collect();
    let sigma = correlation_length / grid.pitch;
    if sigma > 0.0 {
        let r = (4.0 * sigma).ceil() as i64;
        let mut kernel: Vec<f64> = (-r..=r).map(|t| (-(t * t) as f64 / (2.0 * sigma * sigma)).exp()).collect();
        let norm: f64 = kernel.iter().sum();
        kernel.iter_mut().for_each(|k| *k /= norm);
        let phasors: Vec<Complex64> = phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
        let a = blur_rows(&phasors, w, h, &kernel);
        let b = blur_rows(&transpose(&a, w, h), h, w, &kernel);
        let smooth = transpose(&b, h, w);
        phases = smooth
            .iter()
            .map(|z| if z.norm() > 0.0 { wrap_phase(z.arg()) } else { 0.0 })
            .collect();
    }
    Ok(PhaseScreen {
        width: w,
        height: h,
        pitch: grid.pitch,
        phases,
        correlation_length,
        seed,
    })
}

/// Minimal aperture `λ L / Δx` that resolves a feature of size `Δx` at range `L`.
pub fn diffraction_limit(wavelength: f64, distance: f64, feature: f64) -> Result<f64> {
    for (name, v) in [("wavelength", wavelength), ("distance", distance), ("feature size", feature)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Argument(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(wavelength * distance / feature)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, pitch: f64) -> Grid {
        Grid::square(n, pitch, 6.328e-7).unwrap()
    }

    fn noisy(g: Grid) -> ComplexField {
        ComplexField::from_fn(g, |x, y| {
            Complex64::new((x * 3.1e5).sin() + 1.2, (y * 1.7e5).cos() - 0.4)
        })
        .unwrap()
    }

    #[test]
    fn full_aperture_is_identity() {
        let f = noisy(grid(16, 1e-6));
        let out = apply_aperture(&f, &Aperture::square(16e-6)).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn square_aperture_area() {
        let f = ComplexField::plane_wave(grid(64, 1e-6)).unwrap();
        for side in [5.0, 12.5, 20.0, 33.3] {
            let e = apply_aperture(&f, &Aperture::square(side * 1e-6)).unwrap().energy();
            assert!((e - side * side).abs() <= 2.0 * side + 1.0, "side {side}: {e}");
        }
    }

    #[test]
    fn twenty_pixel_aperture_at_five_microns() {
        let pitch = 5e-6;
        let f = ComplexField::plane_wave(grid(64, pitch)).unwrap();
        let out = apply_aperture(&f, &Aperture::square(20.0 * pitch)).unwrap();
        let lit: Vec<(usize, usize)> = (0..64)
            .flat_map(|j| (0..64).map(move |i| (i, j)))
            .filter(|&(i, j)| out.at(i, j).norm() > 0.0)
            .collect();
        assert_eq!(lit.len(), 400);
        let xs: Vec<usize> = lit.iter().map(|p| p.0).collect();
        let span = xs.iter().max().unwrap() - xs.iter().min().unwrap() + 1;
        assert_eq!(span, 20);
        assert!((span as f64 * pitch - 100e-6).abs() < 1e-12);
    }

    #[test]
    fn off_grid_aperture_center_rejected() {
        let f = ComplexField::plane_wave(grid(8, 1e-6)).unwrap();
        let mut ap = Aperture::circular(2e-6);
        ap.center_offset = [5e-6, 0.0];
        assert!(matches!(apply_aperture(&f, &ap), Err(Error::Geometry(_))));
    }

    #[test]
    fn lens_center_pixel_and_magnitudes() {
        let f = noisy(grid(32, 1e-6));
        let out = apply_lens(&f, &ThinLens { focal_length: 1e-3 }).unwrap();
        assert_eq!(out.at(16, 16), f.at(16, 16));
        for (a, b) in out.amplitude().iter().zip(f.amplitude()) {
            assert!((a.norm() - b.norm()).abs() <= 1e-15 * b.norm().max(1.0));
        }
        assert!(apply_lens(&f, &ThinLens { focal_length: 0.0 }).is_err());
    }

    #[test]
    fn screen_determinism_and_range() {
        let g = grid(32, 1e-6);
        let a = make_phase_screen(&g, 3e-6, 11).unwrap();
        let b = make_phase_screen(&g, 3e-6, 11).unwrap();
        let c = make_phase_screen(&g, 3e-6, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.phases, c.phases);
        assert!(a.phases.iter().all(|&p| (0.0..2.0 * PI).contains(&p)));
    }

    #[test]
    fn zero_phase_screen_is_identity() {
        let g = grid(8, 1e-6);
        let f = noisy(g);
        let s = PhaseScreen {
            width: 8,
            height: 8,
            pitch: 1e-6,
            phases: vec![0.0; 64],
            correlation_length: 0.0,
            seed: 0,
        };
        assert_eq!(apply_phase_screen(&f, &s).unwrap(), f);
    }

    #[test]
    fn screen_applied_twice_doubles_phase() {
        let g = grid(16, 1e-6);
        let f = noisy(g);
        let s = make_phase_screen(&g, 0.0, 4).unwrap();
        let twice = apply_phase_screen(&apply_phase_screen(&f, &s).unwrap(), &s).unwrap();
        let doubled = PhaseScreen {
            phases: s.phases.iter().map(|p| wrap_phase(2.0 * p)).collect(),
            ..s.clone()
        };
        let once = apply_phase_screen(&f, &doubled).unwrap();
        for (a, b) in twice.amplitude().iter().zip(once.amplitude()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn screen_dimension_mismatch() {
        let s = make_phase_screen(&grid(8, 1e-6), 0.0, 1).unwrap();
        let f = noisy(grid(16, 1e-6));
        assert!(matches!(apply_phase_screen(&f, &s), Err(Error::Geometry(_))));
    }

    #[test]
    fn diffraction_limit_values() {
        let d = diffraction_limit(632.8e-9, 1.0, 2.8e-3).unwrap();
        assert!((d - 2.26e-4).abs() < 0.005e-4, "{d}");
        let d2 = diffraction_limit(632.8e-9, 2.0, 2.8e-3).unwrap();
        assert!((d2 - 2.0 * d).abs() < 1e-18);
        let lam = 5e-7;
        assert!((diffraction_limit(lam, 3.0, lam * 3.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(diffraction_limit(0.0, 1.0, 1.0).is_err());
        assert!(diffraction_limit(1.0, -1.0, 1.0).is_err());
    }
}
