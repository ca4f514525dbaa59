use num_complex::Complex64;

use super::direct::{check_axial, DIRECT_MAX_SIDE};
use super::elements::{apply_aperture, apply_lens, Aperture, ThinLens};
use super::fft::convolve_window;
use super::propagate::AngularSpectrum;
use super::sensor::{bin_factor, sensor_readout, Geometry};
use crate::error::{Error, Result};
use crate::fieldcore::{intensity, ComplexField, Grid, IntensityImage};

// Fine sampling window (origin offset and size, in grid pixels) behind the sensor.
fn sensor_window(grid_w: usize, grid_h: usize, pitch: f64, geometry: &Geometry) -> Result<(usize, usize, usize, usize)> {
    let k = bin_factor(pitch, geometry.sensor_pitch)?;
    let (ww, wh) = (geometry.sensor_dims[0] * k, geometry.sensor_dims[1] * k);
    if ww > grid_w || wh > grid_h {
        return Err(Error::Geometry(format!(
            "grid {grid_w}x{grid_h} is smaller than the {ww}x{wh} sensor window"
        )));
    }
    Ok(((grid_w - ww) / 2, (grid_h - wh) / 2, ww, wh))
}

fn bounding_box(values: &[f64], w: usize, h: usize) -> Option<(usize, usize, usize, usize)> {
    let (mut x0, mut x1, mut y0, mut y1) = (w, 0, h, 0);
    for y in 0..h {
        for x in 0..w {
            if values[y * w + x] != 0.0 {
                x0 = x0.min(x);
                x1 = x1.max(x + 1);
                y0 = y0.min(y);
                y1 = y1.max(y + 1);
            }
        }
    }
    (x0 < x1).then(|| (x0, y0, x1 - x0, y1 - y0))
}

fn crop_box(values: &[f64], w: usize, bx: (usize, usize, usize, usize)) -> Vec<f64> {
    let (x0, y0, bw, bh) = bx;
    let mut out = Vec::with_capacity(bw * bh);
    for y in y0..y0 + bh {
        out.extend_from_slice(&values[y * w + x0..y * w + x0 + bw]);
    }
    out
}

// Windowed convolution of a nonnegative map with `kernel(dx, dy)`, evaluated on
// the sensor window; empty inputs short-circuit to zero.
fn window_convolve(
    values: &[f64],
    w: usize,
    h: usize,
    kernel: impl Fn(i64, i64) -> f64,
    window: (usize, usize, usize, usize),
) -> Vec<f64> {
    let (wx, wy, ww, wh) = window;
    let Some(bx) = bounding_box(values, w, h) else {
        return vec![0.0; ww * wh];
    };
    let src = crop_box(values, w, bx);
    let ox = wx as i64 - bx.0 as i64;
    let oy = wy as i64 - bx.1 as i64;
    convolve_window(&src, bx.2, bx.3, kernel, ox, oy, ww, wh)
        .into_iter()
        .map(|v| v.max(0.0))
        .collect()
}

fn lensless_setup(object_field: &ComplexField, geometry: &Geometry) -> Result<f64> {
    geometry.validate()?;
    if !geometry.element_planes.is_empty() {
        return Err(Error::Geometry("incoherent lensless chain takes no elements".into()));
    }
    let z = geometry.span();
    check_axial(z)?;
    if !object_field.is_finite() {
        return Err(Error::Numeric("field contains non-finite amplitudes".into()));
    }
    Ok(z)
}

/// Intensity-only multiplex sampling `Σ |E(R)|² / |R - r|² · pitch²`,
/// evaluated by FFT convolution over the object's nonzero support.
pub fn incoherent_lensless_image(object_field: &ComplexField, geometry: &Geometry) -> Result<IntensityImage> {
    let z = lensless_setup(object_field, geometry)?;
    let g = *object_field.grid();
    let window = sensor_window(g.width, g.height, g.pitch, geometry)?;
    let p = g.pitch;
    let src = intensity(object_field);
    let kernel = |dx: i64, dy: i64| {
        let (x, y) = (dx as f64 * p, dy as f64 * p);
        p * p / (z * z + x * x + y * y)
    };
    let fine = window_convolve(src.values(), g.width, g.height, kernel, window);
    let img = IntensityImage::new(window.2, window.3, p, fine)?;
    sensor_readout(&img, geometry.sensor_dims, geometry.sensor_pitch)
}

/// Brute-force evaluation of [`incoherent_lensless_image`] for grids up to
/// 64×64.
pub fn incoherent_lensless_direct(object_field: &ComplexField, geometry: &Geometry) -> Result<IntensityImage> {
    let z = lensless_setup(object_field, geometry)?;
    let g = *object_field.grid();
    if g.width > DIRECT_MAX_SIDE || g.height > DIRECT_MAX_SIDE {
        return Err(Error::Argument(format!(
            "direct summation limited to {DIRECT_MAX_SIDE}x{DIRECT_MAX_SIDE} grids"
        )));
    }
    let (wx, wy, ww, wh) = sensor_window(g.width, g.height, g.pitch, geometry)?;
    let src = intensity(object_field);
    let area = g.pitch * g.pitch;
    let mut fine = vec![0.0; ww * wh];
    for v in 0..wh {
        let ry = g.y(wy + v);
        for u in 0..ww {
            let rx = g.x(wx + u);
            let mut s = 0.0;
            for j in 0..g.height {
                let dy = ry - g.y(j);
                for i in 0..g.width {
                    let e = src.at(i, j);
                    if e != 0.0 {
                        let dx = rx - g.x(i);
                        s += e * area / (z * z + dx * dx + dy * dy);
                    }
                }
            }
            fine[v * ww + u] = s;
        }
    }
    let img = IntensityImage::new(ww, wh, g.pitch, fine)?;
    sensor_readout(&img, geometry.sensor_dims, geometry.sensor_pitch)
}

/// Single-lens incoherent imager with a cached intensity point-spread function.
///
/// The aperture and the lens share the geometry's one element plane. The PSF
/// is the intensity of an on-axis point source propagated to that plane,
/// clipped by the aperture, focused by the lens and propagated to the sensor.
#[derive(Debug, Clone)]
pub struct IncoherentImager {
    grid: Grid,
    geometry: Geometry,
    magnification: f64,
    psf: Vec<f64>,
}

impl IncoherentImager {
    pub fn new(grid: Grid, geometry: &Geometry, aperture: &Aperture, lens: &ThinLens) -> Result<Self> {
        grid.validate()?;
        geometry.validate()?;
        if geometry.element_planes.len() != 1 {
            return Err(Error::Geometry(
                "imaging geometry needs exactly one element plane for the aperture and lens".into(),
            ));
        }
        let plane = geometry.element_planes[0];
        let so = plane - geometry.object_plane;
        let si = geometry.sensor_plane - plane;
        if !(so > 0.0 && si > 0.0) {
            return Err(Error::Geometry(format!(
                "object and image distances must be positive, got {so} and {si}"
            )));
        }
        sensor_window(grid.width, grid.height, grid.pitch, geometry)?;

        let mut point = vec![Complex64::new(0.0, 0.0); grid.len()];
        point[(grid.height / 2) * grid.width + grid.width / 2] = Complex64::new(1.0, 0.0);
        let prop = AngularSpectrum::default();
        let mut field = prop.propagate(&ComplexField::new(grid, point)?, so)?;
        field = apply_aperture(&field, aperture)?;
        field = apply_lens(&field, lens)?;
        field = prop.propagate(&field, si)?;
        let mut psf = intensity(&field).into_values();
        let total: f64 = psf.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Numeric("point-spread function carries no energy".into()));
        }
        psf.iter_mut().for_each(|v| *v /= total);
        Ok(Self {
            grid,
            geometry: geometry.clone(),
            magnification: -si / so,
            psf,
        })
    }

    /// Lateral magnification `-s_i / s_o` (negative: the image is inverted).
    pub fn magnification(&self) -> f64 {
        self.magnification
    }

    /// Unit-sum intensity PSF centered at `(width / 2, height / 2)`.
    pub fn psf(&self) -> &[f64] {
        &self.psf
    }

    /// RMS radius of the PSF about its centroid, in meters.
    pub fn psf_rms_width(&self) -> f64 {
        let g = &self.grid;
        let (mut cx, mut cy) = (0.0, 0.0);
        for j in 0..g.height {
            for i in 0..g.width {
                let w = self.psf[j * g.width + i];
                cx += w * g.x(i);
                cy += w * g.y(j);
            }
        }
        let mut m2 = 0.0;
        for j in 0..g.height {
            for i in 0..g.width {
                let w = self.psf[j * g.width + i];
                m2 += w * ((g.x(i) - cx).powi(2) + (g.y(j) - cy).powi(2));
            }
        }
        m2.sqrt()
    }

    /// Object intensity resampled through the ideal point-to-point mapping
    /// `x_sensor = m x_object`, before blurring.
    pub fn ideal_image(&self, object: &IntensityImage) -> Result<IntensityImage> {
        let g = &self.grid;
        if object.width() != g.width || object.height() != g.height {
            return Err(Error::Shape(format!(
                "object is {}x{}, imager grid is {}x{}",
                object.width(),
                object.height(),
                g.width,
                g.height
            )));
        }
        let m = self.magnification;
        let sample = |n: usize, c: f64| -> Option<(usize, usize, f64)> {
            let u = c / (m * g.pitch) + (n / 2) as f64;
            if u < 0.0 || u > (n - 1) as f64 {
                return None;
            }
            let i0 = u.floor() as usize;
            let i1 = (i0 + 1).min(n - 1);
            Some((i0, i1, u - i0 as f64))
        };
        let xs: Vec<_> = (0..g.width).map(|i| sample(g.width, g.x(i))).collect();
        let ys: Vec<_> = (0..g.height).map(|j| sample(g.height, g.y(j))).collect();
        let mut values = vec![0.0; g.len()];
        for (j, ym) in ys.iter().enumerate() {
            let Some((r0, r1, ty)) = *ym else { continue };
            for (i, xm) in xs.iter().enumerate() {
                let Some((c0, c1, tx)) = *xm else { continue };
                let top = object.at(c0, r0) * (1.0 - tx) + object.at(c1, r0) * tx;
                let bottom = object.at(c0, r1) * (1.0 - tx) + object.at(c1, r1) * tx;
                values[j * g.width + i] = top * (1.0 - ty) + bottom * ty;
            }
        }
        IntensityImage::new(g.width, g.height, g.pitch, values)
    }

    /// Sensor image: ideal image convolved with the PSF, total energy
    /// rescaled to the object's, then read out by the sensor.
    pub fn image(&self, object: &IntensityImage) -> Result<IntensityImage> {
        let g = self.grid;
        let ideal = self.ideal_image(object)?;
        let window = sensor_window(g.width, g.height, g.pitch, &self.geometry)?;
        let (cx, cy) = ((g.width / 2) as i64, (g.height / 2) as i64);
        let psf = &self.psf;
        let kernel = |dx: i64, dy: i64| {
            let (i, j) = (cx + dx, cy + dy);
            if i < 0 || j < 0 || i >= g.width as i64 || j >= g.height as i64 {
                0.0
            } else {
                psf[j as usize * g.width + i as usize]
            }
        };
        let mut fine = window_convolve(ideal.values(), g.width, g.height, kernel, window);
        let ideal_total = ideal.total();
        if ideal_total > 0.0 {
            let s = object.total() / ideal_total;
            fine.iter_mut().for_each(|v| *v *= s);
        }
        let img = IntensityImage::new(window.2, window.3, g.pitch, fine)?;
        sensor_readout(&img, self.geometry.sensor_dims, self.geometry.sensor_pitch)
    }
}

/// One-shot incoherent imaging; see [`IncoherentImager`].
pub fn incoherent_imaging(
    object_intensity: &IntensityImage,
    wavelength: f64,
    geometry: &Geometry,
    aperture: &Aperture,
    lens: &ThinLens,
) -> Result<IntensityImage> {
    let grid = Grid::new(
        object_intensity.width(),
        object_intensity.height(),
        object_intensity.pitch(),
        wavelength,
    )?;
    IncoherentImager::new(grid, geometry, aperture, lens)?.image(object_intensity)
}
