use num_complex::Complex64;

use super::field::{ComplexField, Grid};
use crate::error::{Error, Result};
use crate::optics::PhaseScreen;

/// Borrowed 8-bit grayscale bitmap, row-major.
#[derive(Debug, Clone, Copy)]
pub struct Bitmap<'a> {
    pub rows: usize,
    pub cols: usize,
    pub pixels: &'a [u8],
}

impl<'a> Bitmap<'a> {
    pub fn new(rows: usize, cols: usize, pixels: &'a [u8]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Argument("bitmap must be nonempty".into()));
        }
        if pixels.len() != rows * cols {
            return Err(Error::Shape(format!(
                "bitmap has {} pixels, expected {}x{}",
                pixels.len(),
                rows,
                cols
            )));
        }
        Ok(Self { rows, cols, pixels })
    }

    fn get(&self, r: usize, c: usize) -> f64 {
        self.pixels[r * self.cols + c] as f64 / 255.0
    }
}

// Grid pixel -> continuous bitmap coordinate (pixel-center aligned).
fn axis_map(n_grid: usize, span_px: f64, n_bitmap: usize) -> Vec<Option<(usize, usize, f64)>> {
    let lo = n_grid as f64 / 2.0 - span_px / 2.0;
    (0..n_grid)
        .map(|i| {
            let t = (i as f64 + 0.5 - lo) / span_px;
            if !(0.0..1.0).contains(&t) {
                return None;
            }
            let u = (t * n_bitmap as f64 - 0.5).clamp(0.0, (n_bitmap - 1) as f64);
            let i0 = u.floor() as usize;
            let i1 = (i0 + 1).min(n_bitmap - 1);
            Some((i0, i1, u - i0 as f64))
        })
        .collect()
}

/// Resamples a bitmap bilinearly onto the central `object_size` square of
/// `grid` as an amplitude reflectance (`pixel / 255`), zero elsewhere.
///
/// A diffuser multiplies the result by its unit phasors.
pub fn rasterize_object(
    bitmap: Bitmap<'_>,
    object_size: f64,
    grid: &Grid,
    diffuser: Option<&PhaseScreen>,
) -> Result<ComplexField> {
    grid.validate()?;
    if bitmap.rows == 0 || bitmap.cols == 0 || bitmap.pixels.is_empty() {
        return Err(Error::Argument("bitmap must be nonempty".into()));
    }
    if !(object_size > 0.0) {
        return Err(Error::Argument(format!("object size must be positive, got {object_size}")));
    }
    let tol = 1e-9 * grid.pitch;
    if object_size > grid.extent_x() + tol || object_size > grid.extent_y() + tol {
        return Err(Error::Geometry(format!(
            "object of {object_size} m does not fit a {}x{} grid at pitch {}",
            grid.width, grid.height, grid.pitch
        )));
    }
    if let Some(s) = diffuser {
        if s.width != grid.width || s.height != grid.height {
            return Err(Error::Geometry(format!(
                "diffuser is {}x{}, grid is {}x{}",
                s.width, s.height, grid.width, grid.height
            )));
        }
    }
    let span = object_size / grid.pitch;
    let xs = axis_map(grid.width, span, bitmap.cols);
    let ys = axis_map(grid.height, span, bitmap.rows);
    let mut amplitude = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (j, ym) in ys.iter().enumerate() {
        let Some((r0, r1, ty)) = *ym else { continue };
        for (i, xm) in xs.iter().enumerate() {
            let Some((c0, c1, tx)) = *xm else { continue };
            let top = bitmap.get(r0, c0) * (1.0 - tx) + bitmap.get(r0, c1) * tx;
            let bottom = bitmap.get(r1, c0) * (1.0 - tx) + bitmap.get(r1, c1) * tx;
            let a = top * (1.0 - ty) + bottom * ty;
            let idx = j * grid.width + i;
            amplitude[idx] = match diffuser {
                Some(s) => Complex64::from_polar(a, s.phases[idx]),
                None => Complex64::new(a, 0.0),
            };
        }
    }
    Ok(ComplexField::from_parts_unchecked(*grid, amplitude))
}
