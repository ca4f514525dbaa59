use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling description of a square-pixel optical grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    /// Meters per pixel.
    pub pitch: f64,
    /// Meters.
    pub wavelength: f64,
}

impl Grid {
    pub fn new(width: usize, height: usize, pitch: f64, wavelength: f64) -> Result<Self> {
        let grid = Self {
            width,
            height,
            pitch,
            wavelength,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn square(size: usize, pitch: f64, wavelength: f64) -> Result<Self> {
        Self::new(size, size, pitch, wavelength)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Argument(format!(
                "grid dimensions must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.pitch > 0.0 && self.pitch.is_finite()) {
            return Err(Error::Argument(format!("pitch must be positive, got {}", self.pitch)));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::Argument(format!(
                "wavelength must be positive, got {}",
                self.wavelength
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength
    }

    /// Physical x coordinate of column `i`; column `width / 2` sits on the optical axis.
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - (self.width / 2) as f64) * self.pitch
    }

    pub fn y(&self, j: usize) -> f64 {
        (j as f64 - (self.height / 2) as f64) * self.pitch
    }

    pub fn extent_x(&self) -> f64 {
        self.width as f64 * self.pitch
    }

    pub fn extent_y(&self) -> f64 {
        self.height as f64 * self.pitch
    }

    pub fn with_dims(&self, width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            ..*self
        }
    }
}

/// Complex scalar amplitude sampled on a [`Grid`], stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    amplitude: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid, amplitude: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        if amplitude.len() != grid.len() {
            return Err(Error::Shape(format!(
                "amplitude has {} entries, grid needs {}",
                amplitude.len(),
                grid.len()
            )));
        }
        if let Some(i) = amplitude.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Numeric(format!("non-finite amplitude at index {i}")));
        }
        Ok(Self { grid, amplitude })
    }

    pub fn zeros(grid: Grid) -> Result<Self> {
        grid.validate()?;
        Ok(Self {
            grid,
            amplitude: vec![Complex64::new(0.0, 0.0); grid.len()],
        })
    }

    pub fn plane_wave(grid: Grid) -> Result<Self> {
        grid.validate()?;
        Ok(Self {
            grid,
            amplitude: vec![Complex64::new(1.0, 0.0); grid.len()],
        })
    }

    /// Builds a field by evaluating `f(x, y)` at every pixel center.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> Complex64) -> Result<Self> {
        grid.validate()?;
        let mut amplitude = Vec::with_capacity(grid.len());
        for j in 0..grid.height {
            let y = grid.y(j);
            for i in 0..grid.width {
                amplitude.push(f(grid.x(i), y));
            }
        }
        Self::new(grid, amplitude)
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, amplitude: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitude.len(), grid.len());
        Self { grid, amplitude }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn width(&self) -> usize {
        self.grid.width
    }

    pub fn height(&self) -> usize {
        self.grid.height
    }

    pub fn pitch(&self) -> f64 {
        self.grid.pitch
    }

    pub fn wavelength(&self) -> f64 {
        self.grid.wavelength
    }

    pub fn amplitude(&self) -> &[Complex64] {
        &self.amplitude
    }

    pub fn into_amplitude(self) -> Vec<Complex64> {
        self.amplitude
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.amplitude[j * self.grid.width + i]
    }

    /// Sum of |amplitude|² over all pixels (unitless, per-pixel sum).
    pub fn energy(&self) -> f64 {
        self.amplitude.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.amplitude.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Applies a pointwise factor evaluated at pixel centers.
    pub fn modulate(&self, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let g = self.grid;
        let mut amplitude = self.amplitude.clone();
        for j in 0..g.height {
            let y = g.y(j);
            for i in 0..g.width {
                amplitude[j * g.width + i] *= f(g.x(i), y);
            }
        }
        Self { grid: g, amplitude }
    }

    /// Central `width × height` window; the offset is `(W - w) / 2` in each axis.
    pub fn crop_center(&self, width: usize, height: usize) -> Result<Self> {
        if width > self.grid.width || height > self.grid.height || width == 0 || height == 0 {
            return Err(Error::Geometry(format!(
                "cannot crop {}x{} window from {}x{} field",
                width, height, self.grid.width, self.grid.height
            )));
        }
        let ox = (self.grid.width - width) / 2;
        let oy = (self.grid.height - height) / 2;
        let mut amplitude = Vec::with_capacity(width * height);
        for j in 0..height {
            let row = (oy + j) * self.grid.width + ox;
            amplitude.extend_from_slice(&self.amplitude[row..row + width]);
        }
        Ok(Self {
            grid: self.grid.with_dims(width, height),
            amplitude,
        })
    }

    /// Places the field in the center of a larger zero grid (inverse of [`crop_center`](Self::crop_center)).
    pub fn embed_center(&self, width: usize, height: usize) -> Result<Self> {
        if width < self.grid.width || height < self.grid.height {
            return Err(Error::Geometry(format!(
                "cannot embed {}x{} field into {}x{} grid",
                self.grid.width, self.grid.height, width, height
            )));
        }
        let ox = (width - self.grid.width) / 2;
        let oy = (height - self.grid.height) / 2;
        let mut amplitude = vec![Complex64::new(0.0, 0.0); width * height];
        for j in 0..self.grid.height {
            let dst = (oy + j) * width + ox;
            let src = j * self.grid.width;
            amplitude[dst..dst + self.grid.width]
                .copy_from_slice(&self.amplitude[src..src + self.grid.width]);
        }
        Ok(Self {
            grid: self.grid.with_dims(width, height),
            amplitude,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::square(8, 1e-6, 0.5e-6).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(0, 4, 1e-6, 5e-7).is_err());
        assert!(Grid::new(4, 4, 0.0, 5e-7).is_err());
        assert!(Grid::new(4, 4, 1e-6, -1.0).is_err());
    }

    #[test]
    fn rejects_wrong_length_and_nan() {
        let g = grid();
        assert!(matches!(
            ComplexField::new(g, vec![Complex64::new(0.0, 0.0); 3]),
            Err(Error::Shape(_))
        ));
        let mut v = vec![Complex64::new(0.0, 0.0); 64];
        v[5].im = f64::NAN;
        assert!(matches!(ComplexField::new(g, v), Err(Error::Numeric(_))));
    }

    #[test]
    fn axis_sits_on_center_pixel() {
        let g = grid();
        assert_eq!(g.x(4), 0.0);
        assert_eq!(g.y(0), -4e-6);
    }

    #[test]
    fn crop_and_embed_are_inverse() {
        let g = grid();
        let f = ComplexField::from_fn(g, |x, y| Complex64::new(x * 1e6, y * 1e6)).unwrap();
        let big = f.embed_center(20, 14).unwrap();
        assert_eq!(big.energy(), f.energy());
        assert_eq!(big.crop_center(8, 8).unwrap(), f);
    }
}
