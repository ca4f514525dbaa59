use serde::{Deserialize, Serialize};

use super::field::ComplexField;
use crate::error::{Error, Result};

/// Nonnegative real grid as recorded by a sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityImage {
    width: usize,
    height: usize,
    pitch: f64,
    values: Vec<f64>,
    bit_depth: Option<u8>,
}

impl IntensityImage {
    pub fn new(width: usize, height: usize, pitch: f64, values: Vec<f64>) -> Result<Self> {
        Self::with_bit_depth(width, height, pitch, values, None)
    }

    pub fn with_bit_depth(
        width: usize,
        height: usize,
        pitch: f64,
        values: Vec<f64>,
        bit_depth: Option<u8>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Argument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(Error::Argument(format!("pitch must be positive, got {pitch}")));
        }
        if values.len() != width * height {
            return Err(Error::Shape(format!(
                "image has {} values, expected {}",
                values.len(),
                width * height
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Numeric(format!(
                "intensity at index {i} is {} (must be finite and nonnegative)",
                values[i]
            )));
        }
        if let Some(bits) = bit_depth {
            if !(1..=16).contains(&bits) {
                return Err(Error::Argument(format!("bit depth {bits} outside 1..=16")));
            }
            let top = ((1u32 << bits) - 1) as f64;
            if values.iter().any(|v| v.fract() != 0.0 || *v > top) {
                return Err(Error::Numeric(format!(
                    "quantized values must be integers in [0, {top}]"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            pitch,
            values,
            bit_depth,
        })
    }

    pub fn zeros(width: usize, height: usize, pitch: f64) -> Result<Self> {
        Self::new(width, height, pitch, vec![0.0; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn bit_depth(&self) -> Option<u8> {
        self.bit_depth
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.width + i]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.total() / self.values.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Central window with offset `(W - w) / 2`, matching [`ComplexField::crop_center`].
    pub fn crop_center(&self, width: usize, height: usize) -> Result<Self> {
        if width > self.width || height > self.height || width == 0 || height == 0 {
            return Err(Error::Geometry(format!(
                "cannot crop {}x{} window from {}x{} image",
                width, height, self.width, self.height
            )));
        }
        let ox = (self.width - width) / 2;
        let oy = (self.height - height) / 2;
        let mut values = Vec::with_capacity(width * height);
        for j in 0..height {
            let row = (oy + j) * self.width + ox;
            values.extend_from_slice(&self.values[row..row + width]);
        }
        Ok(Self {
            width,
            height,
            pitch: self.pitch,
            values,
            bit_depth: self.bit_depth,
        })
    }
}

/// Pointwise |amplitude|².
pub fn intensity(field: &ComplexField) -> IntensityImage {
    IntensityImage {
        width: field.width(),
        height: field.height(),
        pitch: field.pitch(),
        values: field.amplitude().iter().map(|c| c.re * c.re + c.im * c.im).collect(),
        bit_depth: None,
    }
}

/// Maps the image maximum to `2^bits - 1` and rounds to integers.
pub fn quantize(image: &IntensityImage, bits: u8) -> Result<IntensityImage> {
    if !(1..=16).contains(&bits) {
        return Err(Error::Argument(format!("bits must be in 1..=16, got {bits}")));
    }
    if image.bit_depth.is_some() {
        return Err(Error::Argument("image is already quantized".into()));
    }
    let top = ((1u32 << bits) - 1) as f64;
    let max = image.max();
    let values = if max > 0.0 {
        let scale = top / max;
        image.values.iter().map(|v| (v * scale).round().min(top)).collect()
    } else {
        vec![0.0; image.values.len()]
    };
    Ok(IntensityImage {
        values,
        bit_depth: Some(bits),
        ..image.clone()
    })
}

// Overlap weights of a fractional block partition: (output index, input index, weight).
fn area_weights(n_in: usize, n_out: usize) -> Vec<(usize, usize, f64)> {
    let scale = n_in as f64 / n_out as f64;
    let mut w = Vec::new();
    for o in 0..n_out {
        let lo = o as f64 * scale;
        let hi = (o + 1) as f64 * scale;
        let first = lo.floor() as usize;
        let last = (hi.ceil() as usize).min(n_in);
        for i in first..last {
            let overlap = (hi.min((i + 1) as f64) - lo.max(i as f64)).max(0.0);
            if overlap > 0.0 {
                w.push((o, i, overlap / scale));
            }
        }
    }
    w
}

fn separable(
    values: &[f64],
    width: usize,
    height: usize,
    out_w: usize,
    out_h: usize,
    wx: &[(usize, usize, f64)],
    wy: &[(usize, usize, f64)],
) -> Vec<f64> {
    let mut rows = vec![0.0; out_w * height];
    for j in 0..height {
        let src = &values[j * width..(j + 1) * width];
        let dst = &mut rows[j * out_w..(j + 1) * out_w];
        for &(o, i, w) in wx {
            dst[o] += w * src[i];
        }
    }
    let mut out = vec![0.0; out_w * out_h];
    for &(o, j, w) in wy {
        let src = &rows[j * out_w..(j + 1) * out_w];
        let dst = &mut out[o * out_w..(o + 1) * out_w];
        for (d, s) in dst.iter_mut().zip(src) {
            *d += w * s;
        }
    }
    out
}

/// Area-weighted block-mean pooling onto `out_w × out_h`.
///
/// Blocks need not tile the input evenly; each output pixel averages the
/// input area it covers, so the global mean is preserved.
pub fn downsample(image: &IntensityImage, out_w: usize, out_h: usize) -> Result<IntensityImage> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::Argument(format!(
            "output dimensions must be positive, got {out_w}x{out_h}"
        )));
    }
    if out_w > image.width || out_h > image.height {
        return Err(Error::Argument(format!(
            "cannot downsample {}x{} to larger {}x{}",
            image.width, image.height, out_w, out_h
        )));
    }
    if out_w == image.width && out_h == image.height {
        return Ok(image.clone());
    }
    let wx = area_weights(image.width, out_w);
    let wy = area_weights(image.height, out_h);
    let values = separable(&image.values, image.width, image.height, out_w, out_h, &wx, &wy);
    Ok(IntensityImage {
        width: out_w,
        height: out_h,
        pitch: image.pitch * image.width as f64 / out_w as f64,
        values: values.into_iter().map(|v| v.max(0.0)).collect(),
        bit_depth: None,
    })
}

fn bilinear_weights(n_in: usize, n_out: usize) -> Vec<(usize, usize, f64)> {
    let scale = n_in as f64 / n_out as f64;
    let mut w = Vec::with_capacity(2 * n_out);
    for o in 0..n_out {
        let u = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (n_in - 1) as f64);
        let i0 = u.floor() as usize;
        let i1 = (i0 + 1).min(n_in - 1);
        let t = u - i0 as f64;
        w.push((o, i0, 1.0 - t));
        if t > 0.0 {
            w.push((o, i1, t));
        }
    }
    w
}

/// Resizes to `out_w × out_h`: area pooling when shrinking both axes,
/// bilinear interpolation (pixel-center aligned) otherwise.
pub fn resize(image: &IntensityImage, out_w: usize, out_h: usize) -> Result<IntensityImage> {
    if out_w <= image.width && out_h <= image.height {
        return downsample(image, out_w, out_h);
    }
    if out_w == 0 || out_h == 0 {
        return Err(Error::Argument(format!(
            "output dimensions must be positive, got {out_w}x{out_h}"
        )));
    }
    let wx = bilinear_weights(image.width, out_w);
    let wy = bilinear_weights(image.height, out_h);
    let values = separable(&image.values, image.width, image.height, out_w, out_h, &wx, &wy);
    Ok(IntensityImage {
        width: out_w,
        height: out_h,
        pitch: image.pitch * image.width as f64 / out_w as f64,
        values: values.into_iter().map(|v| v.max(0.0)).collect(),
        bit_depth: None,
    })
}
